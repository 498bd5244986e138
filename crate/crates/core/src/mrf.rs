//! Pairwise graphical models: weights, messages, reparameterizations and
//! the two upper bounds they trade against.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scalar::{cmp, max_iter, Scalar};

/// Node/edge weights of a pairwise model over a shared label set.
///
/// Each undirected edge is stored once with its smaller endpoint first;
/// `pair_weight` exposes both orientations (θ_{ij,xy} = θ_{ji,yx}).
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel<T> {
    num_nodes: usize,
    num_labels: usize,
    edges: Vec<(usize, usize)>,
    /// unary[i][x]
    unary: Vec<Vec<T>>,
    /// pairwise[e][x·L + y], x at the smaller endpoint.
    pairwise: Vec<Vec<T>>,
    adjacency: Vec<Vec<usize>>,
    edge_ids: HashMap<(usize, usize), usize>,
    /// Directed-pair offsets into message storage: position of (i, ·) block.
    dir_offsets: Vec<usize>,
}

impl<T: Scalar> PairwiseModel<T> {
    pub fn new(
        num_nodes: usize,
        num_labels: usize,
        unary: Vec<Vec<T>>,
        edges: Vec<((usize, usize), Vec<T>)>,
    ) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::InvalidConfig("label count must be positive".into()));
        }
        if unary.len() != num_nodes {
            return Err(Error::DimensionMismatch {
                expected: num_nodes,
                got: unary.len(),
            });
        }
        for (i, row) in unary.iter().enumerate() {
            if row.len() != num_labels {
                return Err(Error::DimensionMismatch {
                    expected: num_labels,
                    got: row.len(),
                });
            }
            for v in row {
                if !v.is_finite_value() {
                    return Err(Error::NonFinite {
                        context: format!("unary weight at node {i}"),
                    });
                }
            }
        }
        let mut canonical: Vec<((usize, usize), Vec<T>)> = Vec::with_capacity(edges.len());
        for ((i, j), table) in edges {
            if i == j || i >= num_nodes || j >= num_nodes {
                return Err(Error::InvalidConfig(format!("bad edge ({i},{j})")));
            }
            if table.len() != num_labels * num_labels {
                return Err(Error::DimensionMismatch {
                    expected: num_labels * num_labels,
                    got: table.len(),
                });
            }
            for v in &table {
                if !v.is_finite_value() {
                    return Err(Error::NonFinite {
                        context: format!("pairwise weight on edge ({i},{j})"),
                    });
                }
            }
            if i < j {
                canonical.push(((i, j), table));
            } else {
                // Flip storage into canonical orientation.
                let mut flipped = table.clone();
                for x in 0..num_labels {
                    for y in 0..num_labels {
                        flipped[y * num_labels + x] = table[x * num_labels + y].clone();
                    }
                }
                canonical.push(((j, i), flipped));
            }
        }
        canonical.sort_by_key(|(key, _)| *key);
        let mut canon_edges = Vec::with_capacity(canonical.len());
        let mut tables = Vec::with_capacity(canonical.len());
        let mut edge_ids = HashMap::new();
        for (key, table) in canonical {
            if edge_ids.insert(key, canon_edges.len()).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate edge ({},{})",
                    key.0, key.1
                )));
            }
            canon_edges.push(key);
            tables.push(table);
        }
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(i, j) in &canon_edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut dir_offsets = Vec::with_capacity(num_nodes + 1);
        let mut acc = 0usize;
        for list in &adjacency {
            dir_offsets.push(acc);
            acc += list.len();
        }
        dir_offsets.push(acc);
        Ok(PairwiseModel {
            num_nodes,
            num_labels,
            edges: canon_edges,
            unary,
            pairwise: tables,
            adjacency,
            edge_ids,
            dir_offsets,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn edge_id(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edge_ids.get(&key).copied()
    }

    pub fn unary_weight(&self, i: usize, x: usize) -> &T {
        &self.unary[i][x]
    }

    pub fn unary_weight_mut(&mut self, i: usize, x: usize) -> &mut T {
        &mut self.unary[i][x]
    }

    /// θ_{ij,xy} in the caller's orientation.
    pub fn pair_weight(&self, i: usize, j: usize, x: usize, y: usize) -> &T {
        let e = self.edge_id(i, j).expect("edge exists");
        let idx = if i < j {
            x * self.num_labels + y
        } else {
            y * self.num_labels + x
        };
        &self.pairwise[e][idx]
    }

    pub fn pair_weight_mut(&mut self, i: usize, j: usize, x: usize, y: usize) -> &mut T {
        let e = self.edge_id(i, j).expect("edge exists");
        let idx = if i < j {
            x * self.num_labels + y
        } else {
            y * self.num_labels + x
        };
        &mut self.pairwise[e][idx]
    }

    /// Raw canonical table of an edge (x at the smaller endpoint).
    pub fn edge_table(&self, e: usize) -> &[T] {
        &self.pairwise[e]
    }

    /// ⟨θ, φ(labeling)⟩: the objective of one labeling.
    pub fn labeling_value(&self, labeling: &[usize]) -> T {
        let mut acc = T::zero();
        for (i, &x) in labeling.iter().enumerate() {
            acc = acc + self.unary[i][x].clone();
        }
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            acc = acc + self.pairwise[e][labeling[i] * self.num_labels + labeling[j]].clone();
        }
        acc
    }

    /// Number of message triplets |P| = Σ_i |N_i|·|L|.
    pub fn num_triplets(&self) -> usize {
        self.dir_offsets[self.num_nodes] * self.num_labels
    }

    /// Dense index of triplet (i, j, x); triplets are ordered by
    /// (i asc, j ∈ N_i asc, x asc), the canonical sweep order.
    pub fn triplet_id(&self, i: usize, j: usize, x: usize) -> usize {
        let pos = self.adjacency[i]
            .binary_search(&j)
            .expect("j must neighbor i");
        (self.dir_offsets[i] + pos) * self.num_labels + x
    }

    /// All triplets in canonical order.
    pub fn triplets(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.num_triplets());
        for i in 0..self.num_nodes {
            for &j in &self.adjacency[i] {
                for x in 0..self.num_labels {
                    out.push((i, j, x));
                }
            }
        }
        out
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> PairwiseModel<U> {
        PairwiseModel::new(
            self.num_nodes,
            self.num_labels,
            self.unary
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
            self.edges
                .iter()
                .enumerate()
                .map(|(e, &(i, j))| ((i, j), self.pairwise[e].iter().map(&f).collect()))
                .collect(),
        )
        .expect("shape preserved")
    }
}

/// Messages δ ∈ R^P, one value per (node, neighbor, label) triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> MessageVector<T> {
    pub fn zeros(model: &PairwiseModel<T>) -> Self {
        MessageVector {
            values: vec![T::zero(); model.num_triplets()],
        }
    }

    pub fn from_values(model: &PairwiseModel<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != model.num_triplets() {
            return Err(Error::DimensionMismatch {
                expected: model.num_triplets(),
                got: values.len(),
            });
        }
        Ok(MessageVector { values })
    }

    pub fn get(&self, model: &PairwiseModel<T>, i: usize, j: usize, x: usize) -> &T {
        &self.values[model.triplet_id(i, j, x)]
    }

    pub fn add(&mut self, model: &PairwiseModel<T>, i: usize, j: usize, x: usize, d: T) {
        let id = model.triplet_id(i, j, x);
        self.values[id] = self.values[id].clone() + d;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// θ^δ: subtract each message from its unary weight and add it to the
/// matching row/column of its edge table. Preserves every labeling value.
pub fn reparameterize<T: Scalar>(
    model: &PairwiseModel<T>,
    delta: &MessageVector<T>,
) -> PairwiseModel<T> {
    let mut out = model.clone();
    for i in 0..model.num_nodes() {
        for &j in model.neighbors(i) {
            for x in 0..model.num_labels() {
                let d = delta.get(model, i, j, x).clone();
                let u = out.unary_weight_mut(i, x);
                *u = u.clone() - d.clone();
                for y in 0..model.num_labels() {
                    let p = out.pair_weight_mut(i, j, x, y);
                    *p = p.clone() + d.clone();
                }
            }
        }
    }
    out
}

/// U1: sum over nodes and edges of their largest weight.
pub fn bound_u1<T: Scalar>(model: &PairwiseModel<T>) -> T {
    let mut acc = T::zero();
    for i in 0..model.num_nodes() {
        acc = acc
            + max_iter((0..model.num_labels()).map(|x| model.unary_weight(i, x).clone()))
                .expect("labels nonempty");
    }
    for e in 0..model.edges().len() {
        acc = acc
            + max_iter(model.edge_table(e).iter().cloned()).expect("table nonempty");
    }
    acc
}

/// U2: single largest weight anywhere in the model.
pub fn bound_u2<T: Scalar>(model: &PairwiseModel<T>) -> T {
    let unary_max = max_iter(
        (0..model.num_nodes())
            .flat_map(|i| (0..model.num_labels()).map(move |x| model.unary_weight(i, x).clone())),
    );
    let pair_max = max_iter(
        (0..model.edges().len()).flat_map(|e| model.edge_table(e).iter().cloned()),
    );
    match (unary_max, pair_max) {
        (Some(u), Some(p)) => crate::scalar::max_of(u, p),
        (Some(u), None) => u,
        (None, Some(p)) => p,
        (None, None) => T::zero(),
    }
}

/// The message-free scalar |L|·Σ_{i,x} θ^δ_{i,x} + Σ_{{i,j},x,y} θ^δ_{ij,xy},
/// each unary weight and each edge entry counted once. A message d on
/// triplet (i,j,x) moves the unary block by −|L|·d and the edge block by
/// +|L|·d, so the scalar is invariant across updates; being a positive
/// combination of the weights it witnesses their boundedness from below.
pub fn boundedness_witness<T: Scalar>(model: &PairwiseModel<T>) -> T {
    let labels = model.num_labels();
    let scale = T::from_int(labels as i64);
    let mut acc = T::zero();
    for i in 0..model.num_nodes() {
        for x in 0..labels {
            acc = acc + scale.clone() * model.unary_weight(i, x).clone();
        }
    }
    for e in 0..model.edges().len() {
        for v in model.edge_table(e) {
            acc = acc + v.clone();
        }
    }
    acc
}

/// Largest |weight| anywhere; handy for tolerances and budgets.
pub fn max_abs_weight<T: Scalar>(model: &PairwiseModel<T>) -> T {
    let mut acc = T::zero();
    for i in 0..model.num_nodes() {
        for x in 0..model.num_labels() {
            let v = model.unary_weight(i, x).abs();
            if cmp(&v, &acc) == std::cmp::Ordering::Greater {
                acc = v;
            }
        }
    }
    for e in 0..model.edges().len() {
        for v in model.edge_table(e) {
            let v = v.abs();
            if cmp(&v, &acc) == std::cmp::Ordering::Greater {
                acc = v;
            }
        }
    }
    acc
}
