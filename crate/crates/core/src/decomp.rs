//! Lagrangian decomposition into chain subproblems and pairwise
//! max-marginal averaging.
//!
//! The model weights are split across chains (summing to the original
//! vector entrywise, zero outside each chain's support). One update picks a
//! feature shared by two chains and transfers weight until their
//! max-marginals agree; max-marginals are linear in the transferred weight,
//! so the equalizing amount is half their gap.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{AffineRow, MaxAffInstance};
use crate::mrf::PairwiseModel;
use crate::observe::{Block, Coord, StepEvent, StepObserver};
use crate::oracle::LabelingEnumeration;
use crate::scalar::{cmp, max_iter, Scalar};
use crate::solver::Verdict;
pub use crate::diffusion::{SweepConfig, SweepOrder};

/// A weight feature of the pairwise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Unary { node: usize, label: usize },
    /// Edge indexes the model's canonical edge list; x labels the smaller
    /// endpoint.
    Pair { edge: usize, x: usize, y: usize },
}

/// Where a feature sits inside one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFeature {
    Unary { pos: usize, label: usize },
    /// Between positions pos and pos+1; x labels position pos.
    Pair { pos: usize, x: usize, y: usize },
}

/// A path subproblem: nodes with unary weights, consecutive pairs with
/// pairwise weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSubproblem<T> {
    nodes: Vec<usize>,
    labels: usize,
    /// unary[pos][label]
    unary: Vec<Vec<T>>,
    /// pairwise[pos][x·L + y] between nodes[pos] and nodes[pos+1].
    pairwise: Vec<Vec<T>>,
}

impl<T: Scalar> ChainSubproblem<T> {
    pub fn new(
        nodes: Vec<usize>,
        labels: usize,
        unary: Vec<Vec<T>>,
        pairwise: Vec<Vec<T>>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidConfig("empty chain".into()));
        }
        if unary.len() != nodes.len() || pairwise.len() + 1 != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: unary.len(),
            });
        }
        if unary.iter().any(|u| u.len() != labels)
            || pairwise.iter().any(|p| p.len() != labels * labels)
        {
            return Err(Error::InvalidConfig("bad chain table size".into()));
        }
        Ok(ChainSubproblem {
            nodes,
            labels,
            unary,
            pairwise,
        })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn num_labels(&self) -> usize {
        self.labels
    }

    pub fn unary_weight(&self, pos: usize, label: usize) -> &T {
        &self.unary[pos][label]
    }

    pub fn pair_weight(&self, pos: usize, x: usize, y: usize) -> &T {
        &self.pairwise[pos][x * self.labels + y]
    }

    pub fn add_weight(&mut self, loc: ChainFeature, d: T) {
        match loc {
            ChainFeature::Unary { pos, label } => {
                let v = &mut self.unary[pos][label];
                *v = v.clone() + d;
            }
            ChainFeature::Pair { pos, x, y } => {
                let v = &mut self.pairwise[pos][x * self.labels + y];
                *v = v.clone() + d;
            }
        }
    }

    /// ⟨θ_s, φ(labeling)⟩ for a labeling of the chain positions.
    pub fn labeling_value(&self, labeling: &[usize]) -> T {
        let mut acc = T::zero();
        for (p, &x) in labeling.iter().enumerate() {
            acc = acc + self.unary[p][x].clone();
        }
        for p in 0..self.pairwise.len() {
            acc = acc + self.pairwise[p][labeling[p] * self.labels + labeling[p + 1]].clone();
        }
        acc
    }

    fn forward(&self) -> Vec<Vec<T>> {
        let mut fwd = Vec::with_capacity(self.nodes.len());
        fwd.push(self.unary[0].clone());
        for p in 1..self.nodes.len() {
            let prev = &fwd[p - 1];
            let row: Vec<T> = (0..self.labels)
                .map(|x| {
                    let best = max_iter((0..self.labels).map(|z| {
                        prev[z].clone() + self.pairwise[p - 1][z * self.labels + x].clone()
                    }))
                    .expect("labels nonempty");
                    self.unary[p][x].clone() + best
                })
                .collect();
            fwd.push(row);
        }
        fwd
    }

    fn backward(&self) -> Vec<Vec<T>> {
        let last = self.nodes.len() - 1;
        let mut bwd = vec![Vec::new(); self.nodes.len()];
        bwd[last] = self.unary[last].clone();
        for p in (0..last).rev() {
            bwd[p] = (0..self.labels)
                .map(|x| {
                    let best = max_iter((0..self.labels).map(|z| {
                        self.pairwise[p][x * self.labels + z].clone() + bwd[p + 1][z].clone()
                    }))
                    .expect("labels nonempty");
                    self.unary[p][x].clone() + best
                })
                .collect();
        }
        bwd
    }

    /// F(θ_s): best labeling value, by a forward max-sum pass.
    pub fn value(&self) -> T {
        let fwd = self.forward();
        max_iter(fwd[self.nodes.len() - 1].iter().cloned()).expect("labels nonempty")
    }

    /// F_i(θ_s): best value among labelings activating the feature,
    /// combining forward and backward messages at its location.
    pub fn max_marginal(&self, loc: ChainFeature) -> T {
        match loc {
            ChainFeature::Unary { pos, label } => {
                let fwd = self.forward();
                let bwd = self.backward();
                fwd[pos][label].clone() + bwd[pos][label].clone()
                    - self.unary[pos][label].clone()
            }
            ChainFeature::Pair { pos, x, y } => {
                let fwd = self.forward();
                let bwd = self.backward();
                fwd[pos][x].clone()
                    + self.pairwise[pos][x * self.labels + y].clone()
                    + bwd[pos + 1][y].clone()
            }
        }
    }

    /// All labelings of the chain (positions, lexicographic).
    pub fn labelings(&self) -> Result<LabelingEnumeration> {
        LabelingEnumeration::new(self.nodes.len(), self.labels)
    }
}

/// One averaging edge: a feature shared by chains s and t, with its
/// location in each.
#[derive(Debug, Clone)]
pub struct AvgEdge {
    pub feature: Feature,
    pub s: usize,
    pub t: usize,
    pub s_loc: ChainFeature,
    pub t_loc: ChainFeature,
}

/// A model split into chain subproblems plus the averaging structure.
#[derive(Debug, Clone)]
pub struct DecomposedModel<T> {
    model: PairwiseModel<T>,
    chains: Vec<ChainSubproblem<T>>,
    averaging: Vec<AvgEdge>,
    /// chain memberships of every feature, chain ids ascending.
    membership: HashMap<Feature, Vec<(usize, ChainFeature)>>,
}

impl<T: Scalar> DecomposedModel<T> {
    /// Splits the model along the given node paths; every feature's weight
    /// is divided equally among the chains containing it.
    pub fn with_chains(model: PairwiseModel<T>, paths: Vec<Vec<usize>>) -> Result<Self> {
        let labels = model.num_labels();
        // Locate every feature in every chain.
        let mut membership: HashMap<Feature, Vec<(usize, ChainFeature)>> = HashMap::new();
        for (s, path) in paths.iter().enumerate() {
            let mut seen = vec![false; model.num_nodes()];
            for &v in path {
                if v >= model.num_nodes() || seen[v] {
                    return Err(Error::NotAPath(format!("chain {s}")));
                }
                seen[v] = true;
            }
            for (pos, &v) in path.iter().enumerate() {
                for label in 0..labels {
                    membership
                        .entry(Feature::Unary { node: v, label })
                        .or_default()
                        .push((s, ChainFeature::Unary { pos, label }));
                }
            }
            for pos in 0..path.len().saturating_sub(1) {
                let (u, v) = (path[pos], path[pos + 1]);
                let edge = model
                    .edge_id(u, v)
                    .ok_or_else(|| Error::NotAPath(format!("chain {s}: no edge ({u},{v})")))?;
                let canonical = model.edges()[edge];
                for x in 0..labels {
                    for y in 0..labels {
                        // Feature labels follow the canonical orientation.
                        let loc = if (u, v) == canonical {
                            ChainFeature::Pair { pos, x, y }
                        } else {
                            ChainFeature::Pair { pos, x: y, y: x }
                        };
                        membership
                            .entry(Feature::Pair { edge, x, y })
                            .or_default()
                            .push((s, loc));
                    }
                }
            }
        }

        // Build the equal split.
        let mut chains: Vec<ChainSubproblem<T>> = paths
            .iter()
            .map(|path| {
                ChainSubproblem::new(
                    path.clone(),
                    labels,
                    vec![vec![T::zero(); labels]; path.len()],
                    vec![vec![T::zero(); labels * labels]; path.len().saturating_sub(1)],
                )
            })
            .collect::<Result<_>>()?;
        for feature in all_features(&model) {
            let owners = membership
                .get(&feature)
                .ok_or_else(|| Error::UncoveredFeature(format!("{feature:?}")))?;
            let share = feature_weight(&model, feature)
                / T::from_int(owners.len() as i64);
            for (s, loc) in owners {
                chains[*s].add_weight(*loc, share.clone());
            }
        }

        // Averaging path per shared feature, ascending chain id.
        let mut averaging = Vec::new();
        for feature in all_features(&model) {
            let owners = &membership[&feature];
            for w in owners.windows(2) {
                averaging.push(AvgEdge {
                    feature,
                    s: w[0].0,
                    t: w[1].0,
                    s_loc: w[0].1,
                    t_loc: w[1].1,
                });
            }
        }
        Ok(DecomposedModel {
            model,
            chains,
            averaging,
            membership,
        })
    }

    pub fn model(&self) -> &PairwiseModel<T> {
        &self.model
    }

    /// The initial split θ_s.
    pub fn chains(&self) -> &[ChainSubproblem<T>] {
        &self.chains
    }

    pub fn averaging_edges(&self) -> &[AvgEdge] {
        &self.averaging
    }

    pub fn chains_sharing(&self, feature: Feature) -> usize {
        self.membership.get(&feature).map_or(0, Vec::len)
    }

    /// Human-readable feature id for traces: `u<node>.<label>` or
    /// `p<i>-<j>.<x>.<y>`.
    pub fn feature_label(&self, feature: Feature) -> String {
        match feature {
            Feature::Unary { node, label } => format!("u{node}.{label}"),
            Feature::Pair { edge, x, y } => {
                let (i, j) = self.model.edges()[edge];
                format!("p{i}-{j}.{x}.{y}")
            }
        }
    }

    /// θ^δ_s for explicit messages indexed like `averaging_edges`.
    pub fn apply_messages(&self, delta: &[T]) -> Result<Vec<ChainSubproblem<T>>> {
        if delta.len() != self.averaging.len() {
            return Err(Error::DimensionMismatch {
                expected: self.averaging.len(),
                got: delta.len(),
            });
        }
        let mut out = self.chains.clone();
        for (edge, d) in self.averaging.iter().zip(delta) {
            out[edge.s].add_weight(edge.s_loc, d.clone());
            out[edge.t].add_weight(edge.t_loc, -d.clone());
        }
        Ok(out)
    }
}

fn all_features<T: Scalar>(model: &PairwiseModel<T>) -> Vec<Feature> {
    let labels = model.num_labels();
    let mut out = Vec::new();
    for node in 0..model.num_nodes() {
        for label in 0..labels {
            out.push(Feature::Unary { node, label });
        }
    }
    for edge in 0..model.edges().len() {
        for x in 0..labels {
            for y in 0..labels {
                out.push(Feature::Pair { edge, x, y });
            }
        }
    }
    out
}

fn feature_weight<T: Scalar>(model: &PairwiseModel<T>, feature: Feature) -> T {
    match feature {
        Feature::Unary { node, label } => model.unary_weight(node, label).clone(),
        Feature::Pair { edge, x, y } => {
            model.edge_table(edge)[x * model.num_labels() + y].clone()
        }
    }
}

/// Entrywise sum Σ_s θ_s over a chain set, shaped like the model.
pub fn chain_weight_sums<T: Scalar>(
    model: &PairwiseModel<T>,
    chains: &[ChainSubproblem<T>],
) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let labels = model.num_labels();
    let mut unary = vec![vec![T::zero(); labels]; model.num_nodes()];
    let mut pairs = vec![vec![T::zero(); labels * labels]; model.edges().len()];
    for chain in chains {
        for (pos, &v) in chain.nodes().iter().enumerate() {
            for label in 0..labels {
                unary[v][label] =
                    unary[v][label].clone() + chain.unary_weight(pos, label).clone();
            }
        }
        for pos in 0..chain.nodes().len().saturating_sub(1) {
            let (u, v) = (chain.nodes()[pos], chain.nodes()[pos + 1]);
            let edge = model.edge_id(u, v).expect("chain edge exists");
            let canonical = model.edges()[edge];
            for x in 0..labels {
                for y in 0..labels {
                    // Map back to canonical orientation.
                    let (cx, cy) = if (u, v) == canonical { (x, y) } else { (y, x) };
                    pairs[edge][cx * labels + cy] = pairs[edge][cx * labels + cy].clone()
                        + chain.pair_weight(pos, x, y).clone();
                }
            }
        }
    }
    (unary, pairs)
}

/// Rows-and-columns decomposition of a grid model; single-node chains are
/// omitted (a 1×C or R×1 grid decomposes into one chain).
pub fn build_rows_cols_decomposition<T: Scalar>(
    model: &PairwiseModel<T>,
) -> Result<DecomposedModel<T>> {
    let (rows, cols) = infer_grid(model).ok_or(Error::NotAGrid)?;
    let node = |r: usize, c: usize| r * cols + c;
    let mut paths: Vec<Vec<usize>> = Vec::new();
    if cols > 1 || rows == 1 {
        for r in 0..rows {
            paths.push((0..cols).map(|c| node(r, c)).collect());
        }
    }
    if rows > 1 {
        for c in 0..cols {
            paths.push((0..rows).map(|r| node(r, c)).collect());
        }
    }
    DecomposedModel::with_chains(model.clone(), paths)
}

/// Grid dimensions (R, C) whose adjacency matches the model exactly.
pub fn infer_grid<T: Scalar>(model: &PairwiseModel<T>) -> Option<(usize, usize)> {
    let v = model.num_nodes();
    if v == 0 {
        return None;
    }
    let mut actual: Vec<(usize, usize)> = model.edges().to_vec();
    actual.sort_unstable();
    for rows in 1..=v {
        if v % rows != 0 {
            continue;
        }
        let cols = v / rows;
        let mut expected = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let id = r * cols + c;
                if c + 1 < cols {
                    expected.push((id, id + 1));
                }
                if r + 1 < rows {
                    expected.push((id, id + cols));
                }
            }
        }
        expected.sort_unstable();
        if expected == actual {
            return Some((rows, cols));
        }
    }
    None
}

/// Messages and maintained θ^δ_s of an averaging run.
#[derive(Debug, Clone)]
pub struct MmaState<T> {
    delta: Vec<T>,
    current: Vec<ChainSubproblem<T>>,
}

impl<T: Scalar> MmaState<T> {
    pub fn new(decomp: &DecomposedModel<T>) -> Self {
        MmaState {
            delta: vec![T::zero(); decomp.averaging_edges().len()],
            current: decomp.chains().to_vec(),
        }
    }

    pub fn delta(&self) -> &[T] {
        &self.delta
    }

    /// θ^δ_s as currently maintained.
    pub fn current(&self) -> &[ChainSubproblem<T>] {
        &self.current
    }

    /// max_s F(θ^δ_s), the bound being minimized.
    pub fn objective(&self) -> T {
        max_iter(self.current.iter().map(ChainSubproblem::value)).expect("chains nonempty")
    }

    /// Σ_s F(θ^δ_s), the additive bound.
    pub fn sum_bound(&self) -> T {
        self.current
            .iter()
            .map(ChainSubproblem::value)
            .fold(T::zero(), |acc, v| acc + v)
    }
}

/// One averaging update on edge `idx`: d = ½(F_i(θ^δ_t) − F_i(θ^δ_s)),
/// added to θ^δ_{s,i} and subtracted from θ^δ_{t,i}; the two max-marginals
/// agree afterwards and Σ_s θ^δ_s is unchanged.
pub fn mma_update<T: Scalar>(
    decomp: &DecomposedModel<T>,
    state: &mut MmaState<T>,
    idx: usize,
) -> T {
    let edge = &decomp.averaging_edges()[idx];
    let f_s = state.current[edge.s].max_marginal(edge.s_loc);
    let f_t = state.current[edge.t].max_marginal(edge.t_loc);
    let d = (f_t - f_s).half();
    state.delta[idx] = state.delta[idx].clone() + d.clone();
    state.current[edge.s].add_weight(edge.s_loc, d.clone());
    state.current[edge.t].add_weight(edge.t_loc, -d.clone());
    d
}

/// max over averaging edges of |F_i(θ^δ_s) − F_i(θ^δ_t)|.
pub fn mma_residual<T: Scalar>(decomp: &DecomposedModel<T>, state: &MmaState<T>) -> T {
    let mut worst = T::zero();
    for edge in decomp.averaging_edges() {
        let gap = (state.current[edge.s].max_marginal(edge.s_loc)
            - state.current[edge.t].max_marginal(edge.t_loc))
        .abs();
        if cmp(&gap, &worst) == std::cmp::Ordering::Greater {
            worst = gap;
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct MmaReport<T> {
    pub verdict: Verdict,
    pub sweeps: u64,
    pub updates: u64,
    pub eta: T,
    /// max_s F(θ^δ_s) at the end of the run.
    pub objective: T,
}

/// Sweeps all averaging edges (features in canonical order, path edges
/// within each feature) until the largest transfer drops below eps.
pub fn run_mma<T: Scalar>(
    decomp: &DecomposedModel<T>,
    config: &SweepConfig<T>,
    mut observer: Option<&mut dyn StepObserver<T>>,
) -> Result<(MmaReport<T>, MmaState<T>)> {
    if cmp(&config.eps, &T::zero()) == std::cmp::Ordering::Less {
        return Err(Error::InvalidConfig("eps must be nonnegative".into()));
    }
    let mut state = MmaState::new(decomp);
    let order = config
        .order
        .arrange((0..decomp.averaging_edges().len()).collect());
    let mut sweeps = 0u64;
    let mut updates = 0u64;
    let mut eta = T::zero();
    while sweeps < config.max_sweeps {
        sweeps += 1;
        eta = T::zero();
        for &idx in &order {
            let d = mma_update(decomp, &mut state, idx);
            updates += 1;
            let step = d.abs();
            if cmp(&step, &eta) == std::cmp::Ordering::Greater {
                eta = step;
            }
            if let Some(obs) = observer.as_deref_mut() {
                let edge = &decomp.averaging_edges()[idx];
                obs.on_step(&StepEvent {
                    block: Block::Mma,
                    sweep: sweeps,
                    update: updates,
                    coord: Coord::Averaging {
                        feature: decomp.feature_label(edge.feature),
                        s: edge.s,
                        t: edge.t,
                    },
                    delta: d,
                    eta: eta.clone(),
                    objective: state.objective(),
                    energy: None,
                });
            }
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_sweep_end(sweeps, &eta);
        }
        if cmp(&eta, &config.eps) == std::cmp::Ordering::Less {
            return Ok((
                MmaReport {
                    verdict: Verdict::Converged,
                    sweeps,
                    updates,
                    eta,
                    objective: state.objective(),
                },
                state,
            ));
        }
    }
    Ok((
        MmaReport {
            verdict: Verdict::MaxSweepsReached,
            sweeps,
            updates,
            eta: eta.clone(),
            objective: state.objective(),
        },
        state,
    ))
}

/// The averaging objective max_s F(θ^δ_s) as a max-affine function of the
/// messages: one row per (chain, chain labeling), coefficient +1 where the
/// chain heads an averaging edge whose feature the labeling activates, −1
/// where it tails one. Update-for-update this reproduces the averaging run
/// under the generic solver.
pub struct DecompEncoding<T> {
    pub instance: MaxAffInstance<T>,
    /// (chain, labeling) of every row.
    pub rows: Vec<(usize, Vec<usize>)>,
}

pub fn encode_to_maxaff<T: Scalar>(decomp: &DecomposedModel<T>) -> Result<DecompEncoding<T>> {
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for (s, chain) in decomp.chains().iter().enumerate() {
        for labeling in chain.labelings()? {
            let offset = chain.labeling_value(&labeling);
            let mut terms = Vec::new();
            for (var, edge) in decomp.averaging_edges().iter().enumerate() {
                let mut coeff = T::zero();
                if edge.s == s && chain_feature_active(edge.s_loc, &labeling, chain.labels) {
                    coeff = coeff + T::one();
                }
                if edge.t == s && chain_feature_active(edge.t_loc, &labeling, chain.labels) {
                    coeff = coeff - T::one();
                }
                if !coeff.is_zero() {
                    terms.push((var, coeff));
                }
            }
            rows.push(AffineRow::new(offset, terms));
            ids.push((s, labeling));
        }
    }
    let instance = MaxAffInstance::new(decomp.averaging_edges().len(), rows)?;
    Ok(DecompEncoding {
        instance,
        rows: ids,
    })
}

fn chain_feature_active(loc: ChainFeature, labeling: &[usize], _labels: usize) -> bool {
    match loc {
        ChainFeature::Unary { pos, label } => labeling[pos] == label,
        ChainFeature::Pair { pos, x, y } => labeling[pos] == x && labeling[pos + 1] == y,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::scalar::Rational;

    fn r(v: i64) -> Rational {
        Rational::from_int(v)
    }

    fn rr(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn single_node_chain(unary: Vec<Rational>) -> ChainSubproblem<Rational> {
        let labels = unary.len();
        ChainSubproblem::new(vec![0], labels, vec![unary], vec![]).unwrap()
    }

    #[test]
    fn single_node_value_and_marginals() {
        let chain = single_node_chain(vec![r(1), r(5)]);
        assert_eq!(chain.value(), r(5));
        assert_eq!(
            chain.max_marginal(ChainFeature::Unary { pos: 0, label: 0 }),
            r(1)
        );
        assert_eq!(
            chain.max_marginal(ChainFeature::Unary { pos: 0, label: 1 }),
            r(5)
        );
    }

    #[test]
    fn two_node_chain_value() {
        // Zero unaries, pairwise [[4,0],[0,4]]: best labeling scores 4.
        let chain = ChainSubproblem::new(
            vec![0, 1],
            2,
            vec![vec![r(0), r(0)], vec![r(0), r(0)]],
            vec![vec![r(4), r(0), r(0), r(4)]],
        )
        .unwrap();
        assert_eq!(chain.value(), r(4));
        assert_eq!(
            chain.max_marginal(ChainFeature::Pair { pos: 0, x: 0, y: 1 }),
            r(0)
        );
        assert_eq!(
            chain.max_marginal(ChainFeature::Unary { pos: 0, label: 1 }),
            r(4)
        );
    }

    #[test]
    fn unary_marginals_partition_the_value() {
        let chain = ChainSubproblem::new(
            vec![3, 7, 9],
            2,
            vec![vec![r(1), r(-2)], vec![r(0), r(3)], vec![r(-1), r(2)]],
            vec![
                vec![r(2), r(-1), r(0), r(1)],
                vec![r(-3), r(4), r(1), r(0)],
            ],
        )
        .unwrap();
        let f = chain.value();
        for pos in 0..3 {
            let best = (0..2)
                .map(|label| chain.max_marginal(ChainFeature::Unary { pos, label }))
                .reduce(crate::scalar::max_of)
                .unwrap();
            assert_eq!(best, f, "position {pos}");
        }
    }

    #[test]
    fn marginal_linearity_in_the_feature_weight() {
        let mut chain = ChainSubproblem::new(
            vec![0, 1],
            2,
            vec![vec![r(1), r(0)], vec![r(2), r(-1)]],
            vec![vec![r(0), r(3), r(1), r(0)]],
        )
        .unwrap();
        let loc = ChainFeature::Pair { pos: 0, x: 0, y: 1 };
        let before = chain.max_marginal(loc);
        let d = rr(7, 3);
        chain.add_weight(loc, d.clone());
        assert_eq!(chain.max_marginal(loc), before + d);
    }

    /// 2×2 grid with simple integer weights.
    pub(crate) fn grid_2x2() -> PairwiseModel<Rational> {
        PairwiseModel::new(
            4,
            2,
            vec![
                vec![r(6), r(0)],
                vec![r(1), r(2)],
                vec![r(0), r(3)],
                vec![r(-1), r(1)],
            ],
            vec![
                ((0, 1), vec![r(2), r(0), r(0), r(2)]),
                ((2, 3), vec![r(1), r(0), r(0), r(1)]),
                ((0, 2), vec![r(0), r(1), r(1), r(0)]),
                ((1, 3), vec![r(3), r(0), r(0), r(3)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rows_cols_decomposition_of_grid() {
        let model = grid_2x2();
        let decomp = build_rows_cols_decomposition(&model).unwrap();
        assert_eq!(decomp.chains().len(), 4);
        // Unary weight 6 at node 0 splits 3 + 3.
        assert_eq!(decomp.chains()[0].unary_weight(0, 0), &r(3));
        assert_eq!(decomp.chains()[2].unary_weight(0, 0), &r(3));
        // Split sums back to the model exactly.
        let (unary, pairs) = chain_weight_sums(&model, decomp.chains());
        for node in 0..4 {
            for label in 0..2 {
                assert_eq!(unary[node][label], *model.unary_weight(node, label));
            }
        }
        for e in 0..model.edges().len() {
            assert_eq!(pairs[e], model.edge_table(e));
        }
        // Unary features shared by two chains, pair features by one.
        assert_eq!(
            decomp.chains_sharing(Feature::Unary { node: 0, label: 0 }),
            2
        );
        assert_eq!(
            decomp.chains_sharing(Feature::Pair { edge: 0, x: 0, y: 0 }),
            1
        );
        assert_eq!(decomp.averaging_edges().len(), 8);
    }

    #[test]
    fn path_grid_decomposes_to_single_chain() {
        let model = PairwiseModel::new(
            3,
            2,
            vec![vec![r(1), r(0)], vec![r(0), r(0)], vec![r(2), r(0)]],
            vec![
                ((0, 1), vec![r(1), r(0), r(0), r(1)]),
                ((1, 2), vec![r(1), r(0), r(0), r(1)]),
            ],
        )
        .unwrap();
        assert_eq!(infer_grid(&model), Some((1, 3)));
        let decomp = build_rows_cols_decomposition(&model).unwrap();
        assert_eq!(decomp.chains().len(), 1);
        assert!(decomp.averaging_edges().is_empty());
        let config = SweepConfig::new(rr(1, 1_000_000));
        let (report, _) = run_mma(&decomp, &config, None).unwrap();
        assert_eq!(report.sweeps, 1);
        assert!(report.eta.is_zero());
    }

    #[test]
    fn non_grid_is_rejected() {
        let model = PairwiseModel::new(
            3,
            2,
            vec![vec![r(0); 2]; 3],
            vec![
                ((0, 1), vec![r(0); 4]),
                ((1, 2), vec![r(0); 4]),
                ((0, 2), vec![r(0); 4]),
            ],
        )
        .unwrap();
        assert!(matches!(
            build_rows_cols_decomposition(&model),
            Err(Error::NotAGrid)
        ));
    }

    #[test]
    fn averaging_equalizes_max_marginals() {
        let model = grid_2x2();
        let decomp = build_rows_cols_decomposition(&model).unwrap();
        let mut state = MmaState::new(&decomp);
        for idx in 0..decomp.averaging_edges().len() {
            let edge = &decomp.averaging_edges()[idx];
            let before_s = state.current()[edge.s].max_marginal(edge.s_loc);
            let before_t = state.current()[edge.t].max_marginal(edge.t_loc);
            let d = mma_update(&decomp, &mut state, idx);
            assert_eq!(d, (before_t.clone() - before_s.clone()).half());
            let after_s = state.current()[edge.s].max_marginal(edge.s_loc);
            let after_t = state.current()[edge.t].max_marginal(edge.t_loc);
            assert_eq!(after_s, after_t);
            assert_eq!(after_s, (before_s + before_t).half());
        }
        // Conservation after a full pass.
        let (unary, pairs) = chain_weight_sums(&model, state.current());
        for node in 0..4 {
            for label in 0..2 {
                assert_eq!(unary[node][label], *model.unary_weight(node, label));
            }
        }
        for e in 0..model.edges().len() {
            assert_eq!(pairs[e], model.edge_table(e));
        }
    }

    #[test]
    fn residual_zero_only_at_fixed_points() {
        let model = grid_2x2();
        let decomp = build_rows_cols_decomposition(&model).unwrap();
        let state = MmaState::new(&decomp);
        assert!(!mma_residual(&decomp, &state).is_zero());
        let config = SweepConfig::new(rr(1, 100_000_000));
        let (report, state) = run_mma(&decomp, &config, None).unwrap();
        assert_eq!(report.verdict, Verdict::Converged);
        assert!(mma_residual(&decomp, &state) < rr(1, 1_000_000));
    }

    #[test]
    fn four_chain_star_matches_the_message_template() {
        // Star: center 0, leaves 1..4; four chains all containing node 0.
        let model = PairwiseModel::new(
            5,
            2,
            vec![
                vec![r(8), r(0)],
                vec![r(1), r(0)],
                vec![r(0), r(2)],
                vec![r(3), r(0)],
                vec![r(0), r(0)],
            ],
            vec![
                ((0, 1), vec![r(1), r(0), r(0), r(1)]),
                ((0, 2), vec![r(1), r(0), r(0), r(1)]),
                ((0, 3), vec![r(1), r(0), r(0), r(1)]),
                ((0, 4), vec![r(1), r(0), r(0), r(1)]),
            ],
        )
        .unwrap();
        let paths = vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![0, 4]];
        let decomp = DecomposedModel::with_chains(model.clone(), paths).unwrap();
        let feature = Feature::Unary { node: 0, label: 0 };
        assert_eq!(decomp.chains_sharing(feature), 4);
        let path_edges: Vec<(usize, usize)> = decomp
            .averaging_edges()
            .iter()
            .filter(|e| e.feature == feature)
            .map(|e| (e.s, e.t))
            .collect();
        assert_eq!(path_edges, vec![(0, 1), (1, 2), (2, 3)]);

        // δ on that feature's path: (a, b, c) shifts the four chains by
        // +a, −a+b, −b+c, −c.
        let ids: Vec<usize> = decomp
            .averaging_edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.feature == feature)
            .map(|(i, _)| i)
            .collect();
        let mut delta = vec![r(0); decomp.averaging_edges().len()];
        let (a, b, c) = (r(5), r(-2), r(7));
        delta[ids[0]] = a.clone();
        delta[ids[1]] = b.clone();
        delta[ids[2]] = c.clone();
        let shifted = decomp.apply_messages(&delta).unwrap();
        let base = r(2); // each chain starts with 8/4
        let loc = ChainFeature::Unary { pos: 0, label: 0 };
        let get = |s: usize| match loc {
            ChainFeature::Unary { pos, label } => shifted[s].unary_weight(pos, label).clone(),
            _ => unreachable!(),
        };
        assert_eq!(get(0), base.clone() + a.clone());
        assert_eq!(get(1), base.clone() - a + b.clone());
        assert_eq!(get(2), base.clone() - b + c.clone());
        assert_eq!(get(3), base - c);
        // Sum unchanged.
        let (unary, _) = chain_weight_sums(&model, &shifted);
        assert_eq!(unary[0][0], r(8));
    }

    #[test]
    fn encode_matches_objective() {
        let model = grid_2x2();
        let decomp = build_rows_cols_decomposition(&model).unwrap();
        let enc = encode_to_maxaff(&decomp).unwrap();
        // 4 chains × 4 labelings, 8 averaging variables.
        assert_eq!(enc.instance.num_rows(), 16);
        assert_eq!(enc.instance.num_cols(), 8);
        assert!(enc.instance.is_sign_consistent());
        let mut delta = vec![r(0); 8];
        delta[0] = rr(5, 2);
        delta[3] = r(-1);
        delta[7] = rr(1, 3);
        let (_, f) = enc.instance.evaluate(&delta).unwrap();
        let shifted = decomp.apply_messages(&delta).unwrap();
        let expect = max_iter(shifted.iter().map(ChainSubproblem::value)).unwrap();
        assert_eq!(f, expect);
    }
}
