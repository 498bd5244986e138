//! Sparse max-of-affine objectives: f(x) = max_i (a_i·x + b_i).

use crate::error::{Error, Result};
use crate::scalar::{cmp, max_iter, Scalar};

/// One affine function a_i·x + b_i, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow<T> {
    pub offset: T,
    /// (column, coefficient) pairs, sorted by column, coefficients nonzero.
    pub terms: Vec<(usize, T)>,
}

impl<T: Scalar> AffineRow<T> {
    pub fn new(offset: T, terms: Vec<(usize, T)>) -> Self {
        AffineRow { offset, terms }
    }

    pub fn coefficient(&self, col: usize) -> Option<&T> {
        self.terms
            .binary_search_by_key(&col, |(j, _)| *j)
            .ok()
            .map(|k| &self.terms[k].1)
    }
}

/// Pointwise maximum of affine functions over n variables.
///
/// Rows hold the sparse coefficient matrix by row; `cols` is its exact
/// transpose, rebuilt at construction and kept immutable afterwards.
#[derive(Debug, Clone)]
pub struct MaxAffInstance<T> {
    n: usize,
    rows: Vec<AffineRow<T>>,
    cols: Vec<Vec<(usize, T)>>,
}

/// Per-column sign report for the consistency condition: each variable
/// needs at least one increasing and one decreasing affine function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSigns {
    pub has_pos: bool,
    pub has_neg: bool,
}

impl ColumnSigns {
    pub fn consistent(&self) -> bool {
        self.has_pos && self.has_neg
    }
}

/// Result of pruning sign-inconsistent rows and empty columns.
#[derive(Debug, Clone)]
pub enum PruneOutcome<T> {
    /// Sign consistency holds on the remainder.
    Pruned {
        instance: MaxAffInstance<T>,
        /// Original index of each surviving row.
        kept_rows: Vec<usize>,
        /// Original index of each surviving column.
        kept_cols: Vec<usize>,
    },
    /// Every row was deleted: the objective is unbounded from below.
    UnboundedBelow,
    /// Only constant rows survive: the infimum is their largest offset.
    Constant { value: T, kept_rows: Vec<usize> },
}

impl<T: Scalar> MaxAffInstance<T> {
    /// Validates rows and builds the column index.
    pub fn new(n: usize, mut rows: Vec<AffineRow<T>>) -> Result<Self> {
        for (i, row) in rows.iter_mut().enumerate() {
            if !row.offset.is_finite_value() {
                return Err(Error::NonFinite {
                    context: format!("offset of row {i}"),
                });
            }
            row.terms.sort_by_key(|(j, _)| *j);
            let mut prev: Option<usize> = None;
            for (j, a) in &row.terms {
                if *j >= n {
                    return Err(Error::ColumnOutOfRange { col: *j, n });
                }
                if prev == Some(*j) {
                    return Err(Error::DuplicateCoefficient { row: i, col: *j });
                }
                prev = Some(*j);
                if !a.is_finite_value() {
                    return Err(Error::NonFinite {
                        context: format!("coefficient ({i},{j})"),
                    });
                }
                if a.is_zero() {
                    return Err(Error::ZeroCoefficient { row: i, col: *j });
                }
            }
        }
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for (j, a) in &row.terms {
                cols[*j].push((i, a.clone()));
            }
        }
        Ok(MaxAffInstance { n, rows, cols })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[AffineRow<T>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &AffineRow<T> {
        &self.rows[i]
    }

    /// Nonzero entries of column j as (row, coefficient).
    pub fn column(&self, j: usize) -> &[(usize, T)] {
        &self.cols[j]
    }

    /// y_i = a_i·x + b_i for all rows, plus f = max_i y_i.
    pub fn evaluate(&self, x: &[T]) -> Result<(Vec<T>, T)> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        for (j, v) in x.iter().enumerate() {
            if !v.is_finite_value() {
                return Err(Error::NonFinite {
                    context: format!("x[{j}]"),
                });
            }
        }
        if self.rows.is_empty() {
            return Err(Error::EmptyInstance);
        }
        let y: Vec<T> = self.rows.iter().map(|row| self.row_value(row, x)).collect();
        let f = max_iter(y.iter().cloned()).expect("nonempty");
        Ok((y, f))
    }

    pub(crate) fn row_value(&self, row: &AffineRow<T>, x: &[T]) -> T {
        let mut acc = row.offset.clone();
        for (j, a) in &row.terms {
            acc = acc + a.clone() * x[*j].clone();
        }
        acc
    }

    /// Per-column sign verdicts.
    pub fn sign_consistency(&self) -> Vec<ColumnSigns> {
        self.cols
            .iter()
            .map(|entries| {
                let mut signs = ColumnSigns {
                    has_pos: false,
                    has_neg: false,
                };
                for (_, a) in entries {
                    if cmp(a, &T::zero()) == std::cmp::Ordering::Greater {
                        signs.has_pos = true;
                    } else {
                        signs.has_neg = true;
                    }
                }
                signs
            })
            .collect()
    }

    pub fn is_sign_consistent(&self) -> bool {
        self.sign_consistency().iter().all(ColumnSigns::consistent)
    }

    /// Repeatedly deletes rows touching sign-inconsistent columns, then
    /// drops columns with no remaining entries. Deleting such rows never
    /// changes the infimum: their affine functions can be pushed down
    /// arbitrarily without moving the others.
    pub fn prune(&self) -> PruneOutcome<T> {
        let m = self.rows.len();
        let mut row_alive = vec![true; m];
        loop {
            let mut pos = vec![false; self.n];
            let mut neg = vec![false; self.n];
            for (i, row) in self.rows.iter().enumerate() {
                if !row_alive[i] {
                    continue;
                }
                for (j, a) in &row.terms {
                    if cmp(a, &T::zero()) == std::cmp::Ordering::Greater {
                        pos[*j] = true;
                    } else {
                        neg[*j] = true;
                    }
                }
            }
            let bad: Vec<bool> = (0..self.n)
                .map(|j| (pos[j] || neg[j]) && !(pos[j] && neg[j]))
                .collect();
            if !bad.iter().any(|b| *b) {
                break;
            }
            for (i, row) in self.rows.iter().enumerate() {
                if row_alive[i] && row.terms.iter().any(|(j, _)| bad[*j]) {
                    row_alive[i] = false;
                }
            }
        }

        let kept_rows: Vec<usize> = (0..m).filter(|i| row_alive[*i]).collect();
        if kept_rows.is_empty() {
            return PruneOutcome::UnboundedBelow;
        }
        let mut col_used = vec![false; self.n];
        for &i in &kept_rows {
            for (j, _) in &self.rows[i].terms {
                col_used[*j] = true;
            }
        }
        let kept_cols: Vec<usize> = (0..self.n).filter(|j| col_used[*j]).collect();
        if kept_cols.is_empty() {
            let value = max_iter(kept_rows.iter().map(|&i| self.rows[i].offset.clone()))
                .expect("nonempty");
            return PruneOutcome::Constant { value, kept_rows };
        }
        let mut col_rename = vec![usize::MAX; self.n];
        for (new_j, &old_j) in kept_cols.iter().enumerate() {
            col_rename[old_j] = new_j;
        }
        let rows: Vec<AffineRow<T>> = kept_rows
            .iter()
            .map(|&i| {
                let src = &self.rows[i];
                AffineRow::new(
                    src.offset.clone(),
                    src.terms
                        .iter()
                        .map(|(j, a)| (col_rename[*j], a.clone()))
                        .collect(),
                )
            })
            .collect();
        let instance = MaxAffInstance::new(kept_cols.len(), rows)
            .expect("pruning preserves well-formedness");
        debug_assert!(instance.is_sign_consistent());
        PruneOutcome::Pruned {
            instance,
            kept_rows,
            kept_cols,
        }
    }

    /// Largest absolute offset, used for the default divergence budget.
    pub fn max_abs_offset(&self) -> T {
        max_iter(self.rows.iter().map(|r| r.offset.abs())).unwrap_or_else(T::zero)
    }

    /// Maps the instance into another scalar type (e.g. exact → float).
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MaxAffInstance<U> {
        let rows = self
            .rows
            .iter()
            .map(|r| AffineRow::new(f(&r.offset), r.terms.iter().map(|(j, a)| (*j, f(a))).collect()))
            .collect();
        MaxAffInstance::new(self.n, rows).expect("shape preserved")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    /// max{x1, x2, −x1−x2}: the two-variable example with non-unique
    /// coordinate minimizers.
    pub(crate) fn two_var_example() -> MaxAffInstance<Rational> {
        MaxAffInstance::new(
            2,
            vec![
                AffineRow::new(r(0), vec![(0, r(1))]),
                AffineRow::new(r(0), vec![(1, r(1))]),
                AffineRow::new(r(0), vec![(0, r(-1)), (1, r(-1))]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_two_var_example() {
        let inst = two_var_example();
        let (y, f) = inst.evaluate(&[r(1), r(1)]).unwrap();
        assert_eq!(y, vec![r(1), r(1), r(-2)]);
        assert_eq!(f, r(1));
    }

    #[test]
    fn evaluate_abs() {
        let inst = MaxAffInstance::new(
            1,
            vec![
                AffineRow::new(0.0, vec![(0, 1.0)]),
                AffineRow::new(0.0, vec![(0, -1.0)]),
            ],
        )
        .unwrap();
        let (_, f) = inst.evaluate(&[0.0]).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn evaluate_divergence_example_at_origin() {
        let inst = crate::solver::tests::divergence_example();
        let (y, f) = inst.evaluate(&[r(0), r(0), r(0)]).unwrap();
        assert_eq!(y, vec![r(0), r(4), r(0), r(2)]);
        assert_eq!(f, r(4));
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        let inst = two_var_example();
        assert!(matches!(
            inst.evaluate(&[r(1)]),
            Err(Error::DimensionMismatch { .. })
        ));
        let finst = inst.map_scalar(|v| v.to_f64_lossy());
        assert!(matches!(
            finst.evaluate(&[f64::NAN, 0.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn construction_rejects_duplicates_and_zeros() {
        assert!(matches!(
            MaxAffInstance::new(
                1,
                vec![AffineRow::new(r(0), vec![(0, r(1)), (0, r(1))])]
            ),
            Err(Error::DuplicateCoefficient { .. })
        ));
        assert!(matches!(
            MaxAffInstance::new(1, vec![AffineRow::new(r(0), vec![(0, r(0))])]),
            Err(Error::ZeroCoefficient { .. })
        ));
        assert!(matches!(
            MaxAffInstance::new(1, vec![AffineRow::new(r(0), vec![(3, r(1))])]),
            Err(Error::ColumnOutOfRange { .. })
        ));
    }

    /// max{x1, −x1, x1+x2}: variable x2 has no decreasing function.
    fn sign_example() -> MaxAffInstance<Rational> {
        MaxAffInstance::new(
            2,
            vec![
                AffineRow::new(r(0), vec![(0, r(1))]),
                AffineRow::new(r(0), vec![(0, r(-1))]),
                AffineRow::new(r(0), vec![(0, r(1)), (1, r(1))]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sign_consistency_verdicts() {
        let signs = sign_example().sign_consistency();
        assert!(signs[0].consistent());
        assert!(signs[1].has_pos && !signs[1].has_neg);

        let absent = MaxAffInstance::new(
            2,
            vec![
                AffineRow::new(r(0), vec![(0, r(1))]),
                AffineRow::new(r(0), vec![(0, r(-1))]),
            ],
        )
        .unwrap();
        let signs = absent.sign_consistency();
        assert!(!signs[1].has_pos && !signs[1].has_neg);
    }

    #[test]
    fn prune_deletes_inconsistent_row() {
        match sign_example().prune() {
            PruneOutcome::Pruned {
                instance,
                kept_rows,
                kept_cols,
            } => {
                assert_eq!(kept_rows, vec![0, 1]);
                assert_eq!(kept_cols, vec![0]);
                assert_eq!(instance.num_rows(), 2);
                assert_eq!(instance.num_cols(), 1);
                assert!(instance.is_sign_consistent());
            }
            other => panic!("expected pruned instance, got {other:?}"),
        }
    }

    #[test]
    fn prune_single_row_unbounded() {
        let inst =
            MaxAffInstance::new(1, vec![AffineRow::new(r(0), vec![(0, r(1))])]).unwrap();
        assert!(matches!(inst.prune(), PruneOutcome::UnboundedBelow));
    }

    #[test]
    fn prune_cascade_unbounded() {
        // {x1+x2, −x1}: deleting the x2-inconsistent row leaves −x1 alone,
        // which cascades to full deletion.
        let inst = MaxAffInstance::new(
            2,
            vec![
                AffineRow::new(r(0), vec![(0, r(1)), (1, r(1))]),
                AffineRow::new(r(0), vec![(0, r(-1))]),
            ],
        )
        .unwrap();
        assert!(matches!(inst.prune(), PruneOutcome::UnboundedBelow));
    }

    #[test]
    fn prune_constant_instance() {
        let inst = MaxAffInstance::new(
            0,
            vec![AffineRow::new(r(3), vec![]), AffineRow::new(r(7), vec![])],
        )
        .unwrap();
        match inst.prune() {
            PruneOutcome::Constant { value, kept_rows } => {
                assert_eq!(value, r(7));
                assert_eq!(kept_rows, vec![0, 1]);
            }
            other => panic!("expected constant, got {other:?}"),
        }
    }

    #[test]
    fn prune_keeps_surviving_constant_rows() {
        // {x1+x2, −x1, 7}: cascade removes both variable rows, the constant
        // row pins the infimum at 7.
        let inst = MaxAffInstance::new(
            2,
            vec![
                AffineRow::new(r(0), vec![(0, r(1)), (1, r(1))]),
                AffineRow::new(r(0), vec![(0, r(-1))]),
                AffineRow::new(r(7), vec![]),
            ],
        )
        .unwrap();
        match inst.prune() {
            PruneOutcome::Constant { value, .. } => assert_eq!(value, r(7)),
            other => panic!("expected constant, got {other:?}"),
        }
    }

    #[test]
    fn column_index_is_transpose() {
        let inst = two_var_example();
        assert_eq!(inst.column(0).len(), 2);
        assert_eq!(inst.column(1).len(), 2);
        for j in 0..inst.num_cols() {
            for (i, a) in inst.column(j) {
                assert_eq!(inst.row(*i).coefficient(j), Some(a));
            }
        }
    }
}
