//! The decreasing energy behind the convergence guarantee.
//!
//! E_k(y) = Σ_i k^i·sort(y)_i with ascending sort and k = 1 + C/c built
//! from the extreme coefficient magnitudes. Every nontrivial coordinate
//! update lowers it by at least c·|step|, which is what the certificate
//! checks, exactly, in rational mode.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::instance::MaxAffInstance;
use crate::scalar::{cmp, power, Scalar};

/// Extreme absolute coefficient magnitudes of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeBounds<T> {
    /// Smallest absolute nonzero coefficient.
    pub min_slope: T,
    /// Largest absolute coefficient.
    pub max_slope: T,
    /// 1 + max/min; the energy base.
    pub k: T,
}

impl<T: Scalar> SlopeBounds<T> {
    /// Scans all nonzero coefficients; errors when there are none.
    pub fn from_instance(instance: &MaxAffInstance<T>) -> Result<Self> {
        let mut min_slope: Option<T> = None;
        let mut max_slope: Option<T> = None;
        for row in instance.rows() {
            for (_, a) in &row.terms {
                let mag = a.abs();
                min_slope = Some(match min_slope.take() {
                    None => mag.clone(),
                    Some(cur) => crate::scalar::min_of(cur, mag.clone()),
                });
                max_slope = Some(match max_slope.take() {
                    None => mag,
                    Some(cur) => crate::scalar::max_of(cur, mag),
                });
            }
        }
        match (min_slope, max_slope) {
            (Some(min_slope), Some(max_slope)) => {
                let k = T::one() + max_slope.clone() / min_slope.clone();
                Ok(SlopeBounds {
                    min_slope,
                    max_slope,
                    k,
                })
            }
            _ => Err(Error::EmptyInstance),
        }
    }
}

/// E_k(y): ascending sort of y, weighted by growing powers of k.
pub fn energy<T: Scalar>(y: &[T], k: &T) -> T {
    let mut sorted: Vec<T> = y.to_vec();
    sorted.sort_by(cmp);
    let mut acc = T::zero();
    let mut weight = T::one();
    for v in sorted {
        weight = weight * k.clone();
        acc = acc + weight.clone() * v;
    }
    acc
}

/// E_k(y, π) for an explicit permutation; the definition maximizes this
/// over π, attained by the ascending sort.
pub fn energy_with_permutation<T: Scalar>(y: &[T], k: &T, perm: &[usize]) -> T {
    assert_eq!(y.len(), perm.len());
    let mut acc = T::zero();
    let mut weight = T::one();
    for &idx in perm {
        weight = weight * k.clone();
        acc = acc + weight.clone() * y[idx].clone();
    }
    acc
}

/// Result of checking one inner iteration against the decrease bound.
#[derive(Debug, Clone)]
pub struct StepCertificate<T> {
    /// E_k(y_before) − E_k(y_after).
    pub decrease: T,
    /// c·|d|, the guaranteed decrease.
    pub required: T,
    /// decrease − required.
    pub margin: T,
    pub pass: bool,
}

/// Checks E_k(y_before) − E_k(y_after) ≥ c·|d| for one update of step
/// magnitude |d|.
pub fn certify_step<T: Scalar>(
    y_before: &[T],
    y_after: &[T],
    bounds: &SlopeBounds<T>,
    step_abs: &T,
) -> Result<StepCertificate<T>> {
    if y_before.len() != y_after.len() {
        return Err(Error::DimensionMismatch {
            expected: y_before.len(),
            got: y_after.len(),
        });
    }
    let decrease = energy(y_before, &bounds.k) - energy(y_after, &bounds.k);
    let required = bounds.min_slope.clone() * step_abs.clone();
    let margin = decrease.clone() - required.clone();
    let pass = cmp(&margin, &T::zero()) != Ordering::Less;
    Ok(StepCertificate {
        decrease,
        required,
        margin,
        pass,
    })
}

/// Certificate over already-computed energies, used when the runner's
/// ledger already carries E before/after.
pub fn certify_recorded<T: Scalar>(
    e_before: &T,
    e_after: &T,
    bounds: &SlopeBounds<T>,
    step_abs: &T,
) -> StepCertificate<T> {
    let decrease = e_before.clone() - e_after.clone();
    let required = bounds.min_slope.clone() * step_abs.clone();
    let margin = decrease.clone() - required.clone();
    let pass = cmp(&margin, &T::zero()) != Ordering::Less;
    StepCertificate {
        decrease,
        required,
        margin,
        pass,
    }
}

/// k^exp, exposed for tests that reason about the weights directly.
pub fn k_power<T: Scalar>(k: &T, exp: usize) -> T {
    power(k, exp)
}
