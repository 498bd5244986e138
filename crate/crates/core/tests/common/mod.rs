//! Shared helpers for the property suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use maxaff::mrf::PairwiseModel;
use maxaff::scalar::{Rational, Scalar};

/// Random connected-ish pairwise model with |L|^|V| ≤ 4096 and
/// quarter-integer weights, exact scalars.
pub fn random_model(seed: u64) -> PairwiseModel<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = rng.gen_range(2..=3usize);
    let max_nodes = if labels == 2 { 8 } else { 6 };
    let nodes = rng.gen_range(2..=max_nodes);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    // Spanning path keeps every node involved.
    for i in 1..nodes {
        edges.push((i - 1, i));
    }
    for i in 0..nodes {
        for j in (i + 2)..nodes {
            if rng.gen_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    let mut draw = |rng: &mut ChaCha8Rng| Rational::from_ratio(rng.gen_range(-16..=16), 4);
    let unary: Vec<Vec<Rational>> = (0..nodes)
        .map(|_| (0..labels).map(|_| draw(&mut rng)).collect())
        .collect();
    let edges = edges
        .into_iter()
        .map(|e| {
            let table: Vec<Rational> =
                (0..labels * labels).map(|_| draw(&mut rng)).collect();
            (e, table)
        })
        .collect();
    PairwiseModel::new(nodes, labels, unary, edges).expect("well-formed")
}

/// The same model in f64.
pub fn to_f64(model: &PairwiseModel<Rational>) -> PairwiseModel<f64> {
    model.map_scalar(|v| v.to_f64_lossy())
}

/// Relative gap |a−b| / (1+|b|).
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}
