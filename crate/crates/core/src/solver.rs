//! Coordinate descent on a max-of-affine objective.
//!
//! Each inner iteration minimizes over one variable the maximum of only
//! those affine functions that actually depend on it; under sign
//! consistency that minimizer is unique and is the root of
//! max over decreasing rows = max over increasing rows.

use std::cmp::Ordering;

use crate::energy::{energy, SlopeBounds};
use crate::envelope::{envelope_crossing, Envelope, Line};
use crate::error::{Error, Result};
use crate::instance::{MaxAffInstance, PruneOutcome};
use crate::observe::{Block, Coord, StepEvent, StepObserver};
use crate::scalar::{cmp, max_iter, min_iter, Scalar};

/// Visitation order of the columns within a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateOrder {
    /// j = 0, 1, …, n−1.
    Cyclic,
    /// A fixed permutation of 0..n, reused by every sweep.
    Permutation(Vec<usize>),
}

impl UpdateOrder {
    pub(crate) fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            UpdateOrder::Cyclic => Ok((0..n).collect()),
            UpdateOrder::Permutation(p) => {
                let mut seen = vec![false; n];
                if p.len() != n {
                    return Err(Error::InvalidOrder { n });
                }
                for &j in p {
                    if j >= n || seen[j] {
                        return Err(Error::InvalidOrder { n });
                    }
                    seen[j] = true;
                }
                Ok(p.clone())
            }
        }
    }
}

/// Stopping and instrumentation parameters for a run.
#[derive(Debug, Clone)]
pub struct SolveConfig<T> {
    /// Halt once the largest step in a sweep drops below this.
    pub eps: T,
    pub max_sweeps: u64,
    pub order: UpdateOrder,
    /// Declare divergence once min_i y_i falls this far below its initial
    /// value; `None` uses 10^6·(1+max|b_i|).
    pub divergence_budget: Option<T>,
    /// Record exact energy before/after each update (exact scalars only).
    pub energy_ledger: bool,
}

impl<T: Scalar> SolveConfig<T> {
    pub fn new(eps: T) -> Self {
        SolveConfig {
            eps,
            max_sweeps: 10_000,
            order: UpdateOrder::Cyclic,
            divergence_budget: None,
            energy_ledger: false,
        }
    }
}

/// Current iterate, with y = Ax + b maintained incrementally.
#[derive(Debug, Clone)]
pub struct IterateState<T> {
    x: Vec<T>,
    y: Vec<T>,
    sweep: u64,
    eta: T,
    updates_done: u64,
}

impl<T: Scalar> IterateState<T> {
    pub fn new(instance: &MaxAffInstance<T>, x0: &[T]) -> Result<Self> {
        let (y, _) = instance.evaluate(x0)?;
        Ok(IterateState {
            x: x0.to_vec(),
            y,
            sweep: 0,
            eta: T::zero(),
            updates_done: 0,
        })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn eta(&self) -> &T {
        &self.eta
    }

    pub fn sweep(&self) -> u64 {
        self.sweep
    }

    pub fn updates_done(&self) -> u64 {
        self.updates_done
    }

    pub fn objective(&self) -> T {
        max_iter(self.y.iter().cloned()).expect("nonempty instance")
    }

    pub(crate) fn begin_sweep(&mut self) {
        self.sweep += 1;
        self.eta = T::zero();
    }

    /// Sets x_j to an externally chosen target, maintaining y, η and the
    /// update counter. Returns the step taken.
    pub(crate) fn assign(&mut self, instance: &MaxAffInstance<T>, j: usize, target: T) -> T {
        let d = target.clone() - self.x[j].clone();
        self.x[j] = target;
        for (i, a) in instance.column(j) {
            self.y[*i] = self.y[*i].clone() + a.clone() * d.clone();
        }
        let step = d.abs();
        if cmp(&step, &self.eta) == Ordering::Greater {
            self.eta = step;
        }
        self.updates_done += 1;
        d
    }
}

/// Outcome classification of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    MaxSweepsReached,
    Diverging,
    UnboundedAfterPrune,
    ConstantAfterPrune,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Converged => "converged",
            Verdict::MaxSweepsReached => "max-sweeps-reached",
            Verdict::Diverging => "diverging",
            Verdict::UnboundedAfterPrune => "unbounded-after-prune",
            Verdict::ConstantAfterPrune => "constant-after-prune",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub verdict: Verdict,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub sweeps: u64,
    pub eta: T,
    pub objective: T,
    pub updates: u64,
}

/// The unique minimizer of x_j ↦ g_j(x), rows constant in x_j ignored.
///
/// Coefficients in column j split the rows into an increasing envelope and
/// a decreasing one; their crossing is the minimizer. For ±1 coefficients
/// this reduces to half the gap between the two side maxima.
pub fn coordinate_minimizer<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &IterateState<T>,
    j: usize,
) -> Result<T> {
    let (pos, neg) = column_envelopes(instance, state, j)?;
    Ok(envelope_crossing(&pos, &neg))
}

fn column_envelopes<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &IterateState<T>,
    j: usize,
) -> Result<(Envelope<T>, Envelope<T>)> {
    let entries = instance.column(j);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let xj = &state.x[j];
    for (i, a) in entries {
        // Intercept at t = 0 is the row value with x_j frozen out.
        let intercept = state.y[*i].clone() - a.clone() * xj.clone();
        let line = Line::new(a.clone(), intercept);
        if cmp(a, &T::zero()) == Ordering::Greater {
            pos.push(line);
        } else {
            neg.push(line);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::OneSidedColumn { col: j });
    }
    Ok((Envelope::build(pos), Envelope::build(neg)))
}

/// Closed form for columns whose nonzeros are all ±1; agrees with
/// [`coordinate_minimizer`] and exists as an independent cross-check.
pub fn coordinate_minimizer_pm1<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &IterateState<T>,
    j: usize,
) -> Result<T> {
    let one = T::one();
    let entries = instance.column(j);
    let xj = &state.x[j];
    let mut max_pos: Option<T> = None;
    let mut max_neg: Option<T> = None;
    for (i, a) in entries {
        if a.abs() != one {
            return Err(Error::InvalidConfig(format!(
                "column {j} has a coefficient outside ±1"
            )));
        }
        let r = state.y[*i].clone() - a.clone() * xj.clone();
        let slot = if cmp(a, &T::zero()) == Ordering::Greater {
            &mut max_pos
        } else {
            &mut max_neg
        };
        *slot = Some(match slot.take() {
            None => r,
            Some(cur) => crate::scalar::max_of(cur, r),
        });
    }
    match (max_neg, max_pos) {
        (Some(n), Some(p)) => Ok((n - p).half()),
        _ => Err(Error::OneSidedColumn { col: j }),
    }
}

/// Moves x_j to its coordinate minimizer, updating y incrementally.
/// Returns the step d = x*_j − x_j.
pub fn apply_update<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &mut IterateState<T>,
    j: usize,
) -> Result<T> {
    let target = coordinate_minimizer(instance, state, j)?;
    Ok(state.assign(instance, j, target))
}

/// max_j |x_j − x*_j|; zero exactly at fixed points.
pub fn fixed_point_residual<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &IterateState<T>,
) -> Result<T> {
    let mut worst = T::zero();
    for j in 0..instance.num_cols() {
        let target = coordinate_minimizer(instance, state, j)?;
        let gap = (state.x[j].clone() - target).abs();
        if cmp(&gap, &worst) == Ordering::Greater {
            worst = gap;
        }
    }
    Ok(worst)
}

/// Runs sweeps of coordinate descent on a sign-consistent instance.
pub fn run<T: Scalar>(
    instance: &MaxAffInstance<T>,
    x0: &[T],
    config: &SolveConfig<T>,
    mut observer: Option<&mut dyn StepObserver<T>>,
) -> Result<RunReport<T>> {
    if !instance.is_sign_consistent() {
        let bad = instance
            .sign_consistency()
            .iter()
            .position(|s| !s.consistent())
            .unwrap_or(0);
        return Err(Error::OneSidedColumn { col: bad });
    }
    if cmp(&config.eps, &T::zero()) == Ordering::Less {
        return Err(Error::InvalidConfig("eps must be nonnegative".into()));
    }
    if config.energy_ledger && !T::EXACT {
        return Err(Error::InvalidConfig(
            "energy ledger requires exact arithmetic".into(),
        ));
    }
    let order = config.order.resolve(instance.num_cols())?;
    let mut state = IterateState::new(instance, x0)?;

    let budget = config.divergence_budget.clone().unwrap_or_else(|| {
        T::from_int(1_000_000) * (T::one() + instance.max_abs_offset())
    });
    let floor = min_iter(state.y.iter().cloned()).expect("nonempty") - budget;

    let slopes = if config.energy_ledger {
        Some(SlopeBounds::from_instance(instance)?)
    } else {
        None
    };

    let finish = |verdict: Verdict, state: IterateState<T>| RunReport {
        verdict,
        objective: state.objective(),
        eta: state.eta.clone(),
        sweeps: state.sweep,
        updates: state.updates_done,
        x: state.x,
        y: state.y,
    };

    for _ in 0..config.max_sweeps {
        state.begin_sweep();
        for &j in &order {
            let e_before = slopes
                .as_ref()
                .map(|s| energy(&state.y, &s.k));
            let d = apply_update(instance, &mut state, j)?;
            if let Some(obs) = observer.as_deref_mut() {
                let e_after = slopes.as_ref().map(|s| energy(&state.y, &s.k));
                obs.on_step(&StepEvent {
                    block: Block::MaxAff,
                    sweep: state.sweep,
                    update: state.updates_done,
                    coord: Coord::Var(j),
                    delta: d,
                    eta: state.eta.clone(),
                    objective: state.objective(),
                    energy: e_before.zip(e_after),
                });
            }
            for (i, _) in instance.column(j) {
                if cmp(&state.y[*i], &floor) == Ordering::Less {
                    return Ok(finish(Verdict::Diverging, state));
                }
            }
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_sweep_end(state.sweep, &state.eta);
        }
        if cmp(&state.eta, &config.eps) == Ordering::Less {
            return Ok(finish(Verdict::Converged, state));
        }
    }
    Ok(finish(Verdict::MaxSweepsReached, state))
}

/// A run preceded by pruning, with results mapped back to the original
/// variable indexing.
#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub report: RunReport<T>,
    /// Original row index of each row the solver actually worked on.
    pub kept_rows: Vec<usize>,
    /// Original column index of each solved variable.
    pub kept_cols: Vec<usize>,
    /// Final point in the original coordinates (pruned-away variables keep
    /// their initial values).
    pub x_full: Vec<T>,
}

/// Prunes, runs, and re-embeds. Unbounded or constant objectives are
/// reported without running.
pub fn solve<T: Scalar>(
    instance: &MaxAffInstance<T>,
    x0: &[T],
    config: &SolveConfig<T>,
    observer: Option<&mut dyn StepObserver<T>>,
) -> Result<SolveOutcome<T>> {
    if x0.len() != instance.num_cols() {
        return Err(Error::DimensionMismatch {
            expected: instance.num_cols(),
            got: x0.len(),
        });
    }
    match instance.prune() {
        PruneOutcome::Pruned {
            instance: pruned,
            kept_rows,
            kept_cols,
        } => {
            let x0p: Vec<T> = kept_cols.iter().map(|&j| x0[j].clone()).collect();
            let report = run(&pruned, &x0p, config, observer)?;
            let mut x_full = x0.to_vec();
            for (local, &orig) in kept_cols.iter().enumerate() {
                x_full[orig] = report.x[local].clone();
            }
            Ok(SolveOutcome {
                report,
                kept_rows,
                kept_cols,
                x_full,
            })
        }
        PruneOutcome::UnboundedBelow => {
            let (y, f) = instance.evaluate(x0)?;
            Ok(SolveOutcome {
                report: RunReport {
                    verdict: Verdict::UnboundedAfterPrune,
                    x: x0.to_vec(),
                    y,
                    sweeps: 0,
                    eta: T::zero(),
                    objective: f,
                    updates: 0,
                },
                kept_rows: Vec::new(),
                kept_cols: Vec::new(),
                x_full: x0.to_vec(),
            })
        }
        PruneOutcome::Constant { value, kept_rows } => {
            let (y, _) = instance.evaluate(x0)?;
            Ok(SolveOutcome {
                report: RunReport {
                    verdict: Verdict::ConstantAfterPrune,
                    x: x0.to_vec(),
                    y,
                    sweeps: 0,
                    eta: T::zero(),
                    objective: value,
                    updates: 0,
                },
                kept_rows,
                kept_cols: Vec::new(),
                x_full: x0.to_vec(),
            })
        }
    }
}
