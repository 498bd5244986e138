//! Max-sum diffusion: coordinate descent on U2 over message space.
//!
//! Each update moves one message so that the unary weight of its triplet
//! equals the best entry of the matching edge row. The reparameterized
//! weights are maintained incrementally; the exact encoding into a
//! max-affine instance (coefficients ±1) is also provided, making the
//! per-update equivalence with the generic solver testable.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::instance::{AffineRow, MaxAffInstance};
use crate::mrf::{bound_u2, reparameterize, MessageVector, PairwiseModel};
use crate::observe::{Block, Coord, StepEvent, StepObserver};
use crate::scalar::{cmp, max_iter, Scalar};
use crate::solver::Verdict;

/// Sweep order over the triplet set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    /// (i asc, j ∈ N_i asc, x asc).
    Canonical,
    /// Fixed seeded shuffle of the canonical order, reused every sweep.
    Shuffled(u64),
}

impl SweepOrder {
    pub(crate) fn arrange<I>(&self, mut items: Vec<I>) -> Vec<I> {
        match self {
            SweepOrder::Canonical => items,
            SweepOrder::Shuffled(seed) => {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                items.shuffle(&mut rng);
                items
            }
        }
    }
}

/// Stopping parameters shared by the message-passing runners.
#[derive(Debug, Clone)]
pub struct SweepConfig<T> {
    pub eps: T,
    pub max_sweeps: u64,
    pub order: SweepOrder,
}

impl<T: Scalar> SweepConfig<T> {
    pub fn new(eps: T) -> Self {
        SweepConfig {
            eps,
            max_sweeps: 10_000,
            order: SweepOrder::Canonical,
        }
    }
}

/// Messages plus the maintained reparameterized weights.
#[derive(Debug, Clone)]
pub struct DiffusionState<T> {
    delta: MessageVector<T>,
    current: PairwiseModel<T>,
}

impl<T: Scalar> DiffusionState<T> {
    pub fn new(model: &PairwiseModel<T>, delta: MessageVector<T>) -> DiffusionState<T> {
        let current = reparameterize(model, &delta);
        DiffusionState { delta, current }
    }

    pub fn zeros(model: &PairwiseModel<T>) -> DiffusionState<T> {
        DiffusionState {
            delta: MessageVector::zeros(model),
            current: model.clone(),
        }
    }

    pub fn delta(&self) -> &MessageVector<T> {
        &self.delta
    }

    /// θ^δ as currently maintained.
    pub fn reparameterized(&self) -> &PairwiseModel<T> {
        &self.current
    }

    pub fn into_parts(self) -> (MessageVector<T>, PairwiseModel<T>) {
        (self.delta, self.current)
    }
}

/// One diffusion update on triplet (i, j, x); returns the message change
/// d = ½(θ^δ_{i,x} − max_y θ^δ_{ij,xy}). Afterwards the triplet satisfies
/// the fixed-point equality exactly.
pub fn diffusion_update<T: Scalar>(
    model: &PairwiseModel<T>,
    state: &mut DiffusionState<T>,
    i: usize,
    j: usize,
    x: usize,
) -> T {
    let labels = model.num_labels();
    let row_max = max_iter((0..labels).map(|y| state.current.pair_weight(i, j, x, y).clone()))
        .expect("labels nonempty");
    let d = (state.current.unary_weight(i, x).clone() - row_max).half();
    state.delta.add(model, i, j, x, d.clone());
    let u = state.current.unary_weight_mut(i, x);
    *u = u.clone() - d.clone();
    for y in 0..labels {
        let p = state.current.pair_weight_mut(i, j, x, y);
        *p = p.clone() + d.clone();
    }
    d
}

/// max over triplets of |θ^δ_{i,x} − max_y θ^δ_{ij,xy}|; zero exactly at
/// diffusion fixed points.
pub fn diffusion_residual<T: Scalar>(
    model: &PairwiseModel<T>,
    delta: &MessageVector<T>,
) -> T {
    let re = reparameterize(model, delta);
    let mut worst = T::zero();
    for (i, j, x) in model.triplets() {
        let row_max = max_iter(
            (0..model.num_labels()).map(|y| re.pair_weight(i, j, x, y).clone()),
        )
        .expect("labels nonempty");
        let gap = (re.unary_weight(i, x).clone() - row_max).abs();
        if cmp(&gap, &worst) == Ordering::Greater {
            worst = gap;
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct DiffusionReport<T> {
    pub verdict: Verdict,
    pub sweeps: u64,
    pub updates: u64,
    pub eta: T,
    /// U2(θ^δ) at the end of the run.
    pub u2: T,
}

/// Sweeps the triplet set until the largest message change in a sweep
/// drops below eps.
pub fn run_diffusion<T: Scalar>(
    model: &PairwiseModel<T>,
    delta0: MessageVector<T>,
    config: &SweepConfig<T>,
    mut observer: Option<&mut dyn StepObserver<T>>,
) -> Result<(DiffusionReport<T>, DiffusionState<T>)> {
    if cmp(&config.eps, &T::zero()) == Ordering::Less {
        return Err(Error::InvalidConfig("eps must be nonnegative".into()));
    }
    let mut state = DiffusionState::new(model, delta0);
    let order = config.order.arrange(model.triplets());
    let mut updates = 0u64;
    let mut sweeps = 0u64;
    let mut eta = T::zero();
    while sweeps < config.max_sweeps {
        sweeps += 1;
        eta = T::zero();
        for &(i, j, x) in &order {
            let d = diffusion_update(model, &mut state, i, j, x);
            updates += 1;
            let step = d.abs();
            if cmp(&step, &eta) == Ordering::Greater {
                eta = step;
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs.on_step(&StepEvent {
                    block: Block::Diffusion,
                    sweep: sweeps,
                    update: updates,
                    coord: Coord::Triplet(i, j, x),
                    delta: d,
                    eta: eta.clone(),
                    objective: bound_u2(&state.current),
                    energy: None,
                });
            }
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_sweep_end(sweeps, &eta);
        }
        if cmp(&eta, &config.eps) == Ordering::Less {
            let u2 = bound_u2(&state.current);
            return Ok((
                DiffusionReport {
                    verdict: Verdict::Converged,
                    sweeps,
                    updates,
                    eta,
                    u2,
                },
                state,
            ));
        }
    }
    let u2 = bound_u2(&state.current);
    Ok((
        DiffusionReport {
            verdict: Verdict::MaxSweepsReached,
            sweeps,
            updates,
            eta,
            u2,
        },
        state,
    ))
}

/// Row identity of the diffusion encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodedRow {
    Unary { node: usize, label: usize },
    Pair { edge: usize, x: usize, y: usize },
}

/// U2(θ^δ) as a max-affine function of the messages.
///
/// Variables are the triplets in canonical order; each unary weight is a
/// row with −1 on every message leaving its node at its label, each
/// pairwise weight a row with +1 on its two incoming messages. Sign
/// consistency holds by construction and every coefficient is ±1.
pub struct DiffusionEncoding<T> {
    pub instance: MaxAffInstance<T>,
    pub rows: Vec<EncodedRow>,
}

pub fn encode_to_maxaff<T: Scalar>(model: &PairwiseModel<T>) -> DiffusionEncoding<T> {
    let labels = model.num_labels();
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for i in 0..model.num_nodes() {
        for x in 0..labels {
            let terms: Vec<(usize, T)> = model
                .neighbors(i)
                .iter()
                .map(|&j| (model.triplet_id(i, j, x), -T::one()))
                .collect();
            rows.push(AffineRow::new(model.unary_weight(i, x).clone(), terms));
            ids.push(EncodedRow::Unary { node: i, label: x });
        }
    }
    for (e, &(i, j)) in model.edges().iter().enumerate() {
        for x in 0..labels {
            for y in 0..labels {
                let mut terms = vec![
                    (model.triplet_id(i, j, x), T::one()),
                    (model.triplet_id(j, i, y), T::one()),
                ];
                terms.sort_by_key(|(id, _)| *id);
                rows.push(AffineRow::new(
                    model.pair_weight(i, j, x, y).clone(),
                    terms,
                ));
                ids.push(EncodedRow::Pair { edge: e, x, y });
            }
        }
    }
    let instance = MaxAffInstance::new(model.num_triplets(), rows)
        .expect("encoding is well-formed");
    DiffusionEncoding {
        instance,
        rows: ids,
    }
}
