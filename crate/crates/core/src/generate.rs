//! Seeded generators for test instances. All randomness flows through a
//! single ChaCha stream per call, so equal parameters give equal output.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{AffineRow, MaxAffInstance};
use crate::mrf::PairwiseModel;
use crate::scalar::Scalar;

/// Nonzero coefficient pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffSet {
    /// {−1, +1}.
    PlusMinusOne,
    /// Integers in [lo, hi] except 0; needs lo < 0 < hi.
    IntRange { lo: i64, hi: i64 },
}

impl CoeffSet {
    fn validate(&self) -> Result<()> {
        match self {
            CoeffSet::PlusMinusOne => Ok(()),
            CoeffSet::IntRange { lo, hi } => {
                if *lo < 0 && *hi > 0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(
                        "coefficient range must straddle zero".into(),
                    ))
                }
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        match self {
            CoeffSet::PlusMinusOne => {
                if rng.gen_bool(0.5) {
                    1
                } else {
                    -1
                }
            }
            CoeffSet::IntRange { lo, hi } => loop {
                let v = rng.gen_range(*lo..=*hi);
                if v != 0 {
                    return v;
                }
            },
        }
    }

    /// Magnitude only, for the mandatory sign-consistency entries.
    fn sample_magnitude(&self, rng: &mut ChaCha8Rng) -> i64 {
        self.sample(rng).abs()
    }
}

#[derive(Debug, Clone)]
pub struct MaxAffGenParams {
    pub rows: usize,
    pub cols: usize,
    /// Probability of each extra nonzero beyond the two mandatory
    /// opposite-sign entries per column.
    pub density: f64,
    pub coeffs: CoeffSet,
    pub seed: u64,
}

/// Random sparse instance satisfying sign consistency by construction:
/// every column receives one positive and one negative entry before the
/// density fill, and offsets are quarter-integers in [−8, 8].
pub fn generate_maxaff<T: Scalar>(params: &MaxAffGenParams) -> Result<MaxAffInstance<T>> {
    params.coeffs.validate()?;
    if params.rows < 2 || params.cols == 0 {
        return Err(Error::InvalidConfig(
            "need at least two rows and one column".into(),
        ));
    }
    if !(0.0..=1.0).contains(&params.density) {
        return Err(Error::InvalidConfig("density must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coeffs: Vec<Vec<i64>> = vec![vec![0; params.cols]; params.rows];
    for j in 0..params.cols {
        let i_pos = rng.gen_range(0..params.rows);
        let i_neg = loop {
            let i = rng.gen_range(0..params.rows);
            if i != i_pos {
                break i;
            }
        };
        coeffs[i_pos][j] = params.coeffs.sample_magnitude(&mut rng);
        coeffs[i_neg][j] = -params.coeffs.sample_magnitude(&mut rng);
    }
    for row in coeffs.iter_mut() {
        for cell in row.iter_mut() {
            if *cell == 0 && rng.gen_bool(params.density) {
                *cell = params.coeffs.sample(&mut rng);
            }
        }
    }
    let rows: Vec<AffineRow<T>> = coeffs
        .iter()
        .map(|row| {
            let offset = T::from_ratio(rng.gen_range(-32..=32), 4);
            let terms = row
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0)
                .map(|(j, &a)| (j, T::from_int(a)))
                .collect();
            AffineRow::new(offset, terms)
        })
        .collect();
    let instance = MaxAffInstance::new(params.cols, rows)?;
    debug_assert!(instance.is_sign_consistent());
    Ok(instance)
}

#[derive(Debug, Clone)]
pub struct GridGenParams {
    pub rows: usize,
    pub cols: usize,
    pub labels: usize,
    /// Inclusive weight range; draws are quarter-integers.
    pub wmin: f64,
    pub wmax: f64,
    pub seed: u64,
}

/// Random R×C grid model with quarter-integer weights (exact in both
/// scalar modes).
pub fn generate_grid<T: Scalar>(params: &GridGenParams) -> Result<PairwiseModel<T>> {
    if params.rows == 0 || params.cols == 0 || params.labels == 0 {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if params.wmin > params.wmax {
        return Err(Error::InvalidConfig("wmin exceeds wmax".into()));
    }
    let lo = (params.wmin * 4.0).ceil() as i64;
    let hi = (params.wmax * 4.0).floor() as i64;
    if lo > hi {
        return Err(Error::InvalidConfig(
            "weight range contains no quarter-integer".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let nodes = params.rows * params.cols;
    let draw = |rng: &mut ChaCha8Rng| T::from_ratio(rng.gen_range(lo..=hi), 4);
    let unary: Vec<Vec<T>> = (0..nodes)
        .map(|_| (0..params.labels).map(|_| draw(&mut rng)).collect())
        .collect();
    let mut edges = Vec::new();
    for r in 0..params.rows {
        for c in 0..params.cols {
            let id = r * params.cols + c;
            if c + 1 < params.cols {
                edges.push((id, id + 1));
            }
            if r + 1 < params.rows {
                edges.push((id, id + params.cols));
            }
        }
    }
    edges.sort_unstable();
    let edges = edges
        .into_iter()
        .map(|e| {
            let table = (0..params.labels * params.labels)
                .map(|_| draw(&mut rng))
                .collect();
            (e, table)
        })
        .collect();
    PairwiseModel::new(nodes, params.labels, unary, edges)
}
