//! Independent brute-force references.
//!
//! Everything here is deliberately naive: exhaustive labeling enumeration
//! and quadratic pairwise-intersection scans, sharing no code with the
//! production solvers they cross-check.

use crate::error::{Error, Result};
use crate::instance::MaxAffInstance;
use crate::mrf::PairwiseModel;
use crate::scalar::{cmp, Scalar};
use crate::solver::IterateState;

/// Hard cap on enumerated labelings.
pub const LABELING_GUARD: u128 = 1_000_000;

/// Iterator over all |L|^|V| labelings in lexicographic order (first node
/// most significant).
pub struct LabelingEnumeration {
    labels: usize,
    current: Option<Vec<usize>>,
}

impl LabelingEnumeration {
    pub fn new(nodes: usize, labels: usize) -> Result<Self> {
        let states = (labels as u128)
            .checked_pow(nodes as u32)
            .unwrap_or(u128::MAX);
        if states > LABELING_GUARD {
            return Err(Error::SizeGuard {
                states,
                limit: LABELING_GUARD,
            });
        }
        Ok(LabelingEnumeration {
            labels,
            current: Some(vec![0; nodes]),
        })
    }
}

impl Iterator for LabelingEnumeration {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.current.take()?;
        let mut next = current.clone();
        // Increment like a base-L counter, last node fastest.
        let mut pos = next.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            next[pos] += 1;
            if next[pos] < self.labels {
                self.current = Some(next);
                break;
            }
            next[pos] = 0;
        }
        Some(current)
    }
}

/// Exact MAP value and its first-found maximizer.
pub fn brute_force_map<T: Scalar>(model: &PairwiseModel<T>) -> Result<(T, Vec<usize>)> {
    let mut best: Option<(T, Vec<usize>)> = None;
    for labeling in LabelingEnumeration::new(model.num_nodes(), model.num_labels())? {
        let value = model.labeling_value(&labeling);
        let better = match &best {
            None => true,
            Some((cur, _)) => cmp(&value, cur) == std::cmp::Ordering::Greater,
        };
        if better {
            best = Some((value, labeling));
        }
    }
    best.ok_or(Error::EmptyInstance)
}

/// Feature of a pairwise model, for max-marginal queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFeature {
    Unary { node: usize, label: usize },
    Pair { i: usize, j: usize, x: usize, y: usize },
}

impl ModelFeature {
    fn active(&self, labeling: &[usize]) -> bool {
        match *self {
            ModelFeature::Unary { node, label } => labeling[node] == label,
            ModelFeature::Pair { i, j, x, y } => labeling[i] == x && labeling[j] == y,
        }
    }
}

/// Best objective among labelings that activate the feature.
pub fn brute_force_max_marginal<T: Scalar>(
    model: &PairwiseModel<T>,
    feature: ModelFeature,
) -> Result<T> {
    let mut best: Option<T> = None;
    for labeling in LabelingEnumeration::new(model.num_nodes(), model.num_labels())? {
        if !feature.active(&labeling) {
            continue;
        }
        let value = model.labeling_value(&labeling);
        best = Some(match best.take() {
            None => value,
            Some(cur) => crate::scalar::max_of(cur, value),
        });
    }
    best.ok_or_else(|| Error::FeatureNotInSubproblem(format!("{feature:?}")))
}

/// Minimum and minimizer interval of a univariate max of lines, found by
/// evaluating every pairwise intersection — a different algorithm from the
/// production envelope by construction.
pub fn reference_envelope_lines<T: Scalar>(lines: &[(T, T)], col: usize) -> Result<(T, T, T)> {
    let zero = T::zero();
    let has_neg = lines.iter().any(|(s, _)| cmp(s, &zero) == std::cmp::Ordering::Less);
    let has_pos = lines
        .iter()
        .any(|(s, _)| cmp(s, &zero) == std::cmp::Ordering::Greater);
    if !has_neg || !has_pos {
        return Err(Error::UnboundedMinimizerSet { col });
    }
    let eval_max = |t: &T| -> T {
        lines
            .iter()
            .map(|(s, i)| s.clone() * t.clone() + i.clone())
            .reduce(crate::scalar::max_of)
            .expect("nonempty")
    };
    let mut candidates: Vec<T> = Vec::new();
    for (a, la) in lines.iter().enumerate() {
        for lb in lines.iter().skip(a + 1) {
            if la.0 == lb.0 {
                continue;
            }
            let t = (lb.1.clone() - la.1.clone()) / (la.0.clone() - lb.0.clone());
            candidates.push(t);
        }
    }
    let mut best_value: Option<T> = None;
    for t in &candidates {
        let v = eval_max(t);
        let better = match &best_value {
            None => true,
            Some(cur) => cmp(&v, cur) == std::cmp::Ordering::Less,
        };
        if better {
            best_value = Some(v);
        }
    }
    let value = best_value.expect("two opposite slopes give a candidate");
    let mut lower: Option<T> = None;
    let mut upper: Option<T> = None;
    for t in candidates {
        if eval_max(&t) != value {
            continue;
        }
        lower = Some(match lower.take() {
            None => t.clone(),
            Some(cur) => crate::scalar::min_of(cur, t.clone()),
        });
        upper = Some(match upper.take() {
            None => t,
            Some(cur) => crate::scalar::max_of(cur, t),
        });
    }
    Ok((value, lower.unwrap(), upper.unwrap()))
}

/// Restriction of f (or of g_j when `ignore_constant_rows`) to coordinate
/// j at the state's point, fed to [`reference_envelope_lines`].
pub fn reference_envelope<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &IterateState<T>,
    j: usize,
    ignore_constant_rows: bool,
) -> Result<(T, T, T)> {
    let x = state.x();
    let mut lines = Vec::new();
    for (i, row) in instance.rows().iter().enumerate() {
        let a = row.coefficient(j).cloned();
        match a {
            Some(a) => {
                let intercept = state.y()[i].clone() - a.clone() * x[j].clone();
                lines.push((a, intercept));
            }
            None => {
                if !ignore_constant_rows {
                    lines.push((T::zero(), state.y()[i].clone()));
                }
            }
        }
    }
    reference_envelope_lines(&lines, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn enumeration_visits_every_labeling() {
        let all: Vec<_> = LabelingEnumeration::new(3, 2).unwrap().collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], vec![0, 0, 0]);
        assert_eq!(all[1], vec![0, 0, 1]);
        assert_eq!(all[7], vec![1, 1, 1]);
    }

    #[test]
    fn enumeration_guard_trips() {
        assert!(matches!(
            LabelingEnumeration::new(40, 3),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn map_of_potts_model() {
        let model = crate::mrf::tests::two_node_potts();
        let (value, argmax) = brute_force_map(&model).unwrap();
        assert_eq!(value, r(4));
        // (1,1) ties but (0,0) is enumerated first.
        assert_eq!(argmax, vec![0, 0]);
    }

    #[test]
    fn map_of_zero_model_is_zero() {
        let model = crate::mrf::tests::two_node_potts().map_scalar(|_| Rational::from_int(0));
        let (value, _) = brute_force_map(&model).unwrap();
        assert_eq!(value, r(0));
    }

    #[test]
    fn max_marginals_partition_the_optimum() {
        let model = crate::mrf::tests::two_node_potts();
        let (f, _) = brute_force_map(&model).unwrap();
        for node in 0..2 {
            let best = (0..2)
                .map(|label| {
                    brute_force_max_marginal(&model, ModelFeature::Unary { node, label })
                        .unwrap()
                })
                .reduce(crate::scalar::max_of)
                .unwrap();
            assert_eq!(best, f);
        }
    }

    #[test]
    fn single_node_max_marginal() {
        let model = PairwiseModel::new(
            1,
            2,
            vec![vec![r(1), r(5)]],
            vec![],
        )
        .unwrap();
        assert_eq!(
            brute_force_max_marginal(&model, ModelFeature::Unary { node: 0, label: 0 })
                .unwrap(),
            r(1)
        );
        assert_eq!(
            brute_force_max_marginal(&model, ModelFeature::Unary { node: 0, label: 1 })
                .unwrap(),
            r(5)
        );
    }

    #[test]
    fn reference_envelope_flat_bottom() {
        // {t, 1, −t−1}: minimum 1 on [−2, 1].
        let lines = vec![
            (r(1), r(0)),
            (r(0), r(1)),
            (r(-1), r(-1)),
        ];
        let (v, l, u) = reference_envelope_lines(&lines, 0).unwrap();
        assert_eq!(v, r(1));
        assert_eq!(l, r(-2));
        assert_eq!(u, r(1));
    }

    #[test]
    fn reference_envelope_singleton() {
        let lines = vec![(r(1), r(0)), (r(-1), r(0))];
        let (v, l, u) = reference_envelope_lines(&lines, 0).unwrap();
        assert_eq!(v, r(0));
        assert_eq!(l, r(0));
        assert_eq!(u, r(0));
    }

    #[test]
    fn reference_envelope_rejects_unbounded() {
        let lines = vec![(r(1), r(0)), (r(0), r(3))];
        assert!(reference_envelope_lines(&lines, 0).is_err());
    }
}
