//! Step-level observation of solver runs, feeding traces and tests.

use std::fmt;

use crate::scalar::Scalar;

/// Which solver produced a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    MaxAff,
    Diffusion,
    Mma,
    Midpoint,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Block::MaxAff => "maxaff",
            Block::Diffusion => "diffusion",
            Block::Mma => "mma",
            Block::Midpoint => "midpoint",
        };
        f.write_str(s)
    }
}

/// Textual identity of the updated coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coord {
    /// Column j of a max-affine instance.
    Var(usize),
    /// Message triplet (i, j, x): node, neighbor, label.
    Triplet(usize, usize, usize),
    /// Feature averaged between subproblems s and t.
    Averaging { feature: String, s: usize, t: usize },
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Var(j) => write!(f, "{j}"),
            Coord::Triplet(i, j, x) => write!(f, "{i}-{j}-{x}"),
            Coord::Averaging { feature, s, t } => write!(f, "{feature}/({s},{t})"),
        }
    }
}

/// One inner iteration of any of the solvers.
#[derive(Debug, Clone)]
pub struct StepEvent<T> {
    pub block: Block,
    pub sweep: u64,
    /// Global 1-based update counter.
    pub update: u64,
    pub coord: Coord,
    pub delta: T,
    /// Running max |delta| within the current sweep, after this step.
    pub eta: T,
    /// Block objective after this step (f, U2 or max_s F).
    pub objective: T,
    /// Exact energy before/after, when the ledger is enabled.
    pub energy: Option<(T, T)>,
}

/// Callback surface; runners only pay for objective computation while an
/// observer is attached.
pub trait StepObserver<T> {
    fn on_step(&mut self, event: &StepEvent<T>);
    fn on_sweep_end(&mut self, _sweep: u64, _eta: &T) {}
}

/// Collects all events in memory; the workhorse of the test suites.
#[derive(Debug, Default)]
pub struct Recorder<T> {
    pub events: Vec<StepEvent<T>>,
    pub sweep_etas: Vec<T>,
}

impl<T> Recorder<T> {
    pub fn new() -> Self {
        Recorder {
            events: Vec::new(),
            sweep_etas: Vec::new(),
        }
    }

    pub fn deltas(&self) -> impl Iterator<Item = &T> {
        self.events.iter().map(|e| &e.delta)
    }
}

impl<T: Scalar> StepObserver<T> for Recorder<T> {
    fn on_step(&mut self, event: &StepEvent<T>) {
        self.events.push(event.clone());
    }

    fn on_sweep_end(&mut self, _sweep: u64, eta: &T) {
        self.sweep_etas.push(eta.clone());
    }
}
