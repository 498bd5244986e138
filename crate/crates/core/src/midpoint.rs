//! Coordinate descent with the mid-point rule, and the instance on which
//! that rule cycles forever.
//!
//! Unlike the main solver, the mid-point rule minimizes the restriction of
//! the *full* objective (rows constant in the current variable included)
//! and picks the middle of the minimizer interval. The bundled
//! counterexample encodes a 3-dimensional polytope through a max{0, ·}
//! penalty; its twelve vertices make the rule revisit its iterates with
//! period six.

use crate::envelope::{Envelope, Line, MinInterval};
use crate::error::{Error, Result};
use crate::instance::{AffineRow, MaxAffInstance};
use crate::observe::{Block, Coord, StepEvent, StepObserver};
use crate::scalar::{cmp, Rational, Scalar};
use num_traits::Zero;
use crate::solver::IterateState;

/// Minimum of x_j ↦ f(x) over the current point, all rows included.
pub fn minimizer_interval<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &IterateState<T>,
    j: usize,
) -> Result<MinInterval<T>> {
    let x = state.x();
    let lines: Vec<Line<T>> = instance
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| match row.coefficient(j) {
            Some(a) => Line::new(a.clone(), state.y()[i].clone() - a.clone() * x[j].clone()),
            None => Line::new(T::zero(), state.y()[i].clone()),
        })
        .collect();
    Envelope::build(lines).min_interval(j)
}

/// One mid-point update: x_j ← (l+u)/2. Returns the step taken.
pub fn midpoint_update<T: Scalar>(
    instance: &MaxAffInstance<T>,
    state: &mut IterateState<T>,
    j: usize,
) -> Result<T> {
    let interval = minimizer_interval(instance, state, j)?;
    Ok(state.assign(instance, j, interval.midpoint()))
}

/// Result of a mid-point run.
#[derive(Debug, Clone)]
pub struct MidpointRun<T> {
    /// x after every update; index 0 is the initial point.
    pub iterates: Vec<Vec<T>>,
    pub deltas: Vec<T>,
    /// Detected exact recurrence: (first_update, period).
    pub cycle: Option<(usize, usize)>,
    /// All steps in some sweep were zero.
    pub fixed_point: bool,
}

/// Cyclic mid-point descent with exact recurrence detection.
///
/// A state recurs when both the iterate and its phase within the sweep
/// match; detection is only meaningful with exact scalars.
pub fn run_midpoint<T: Scalar>(
    instance: &MaxAffInstance<T>,
    x0: &[T],
    max_updates: usize,
    mut observer: Option<&mut dyn StepObserver<T>>,
) -> Result<MidpointRun<T>> {
    let n = instance.num_cols();
    if n == 0 {
        return Err(Error::EmptyInstance);
    }
    let mut state = IterateState::new(instance, x0)?;
    let mut run = MidpointRun {
        iterates: vec![x0.to_vec()],
        deltas: Vec::new(),
        cycle: None,
        fixed_point: false,
    };
    let mut zero_streak = 0usize;
    let mut eta = T::zero();
    for t in 1..=max_updates {
        let j = (t - 1) % n;
        if j == 0 {
            eta = T::zero();
        }
        let d = midpoint_update(instance, &mut state, j)?;
        if cmp(&d.abs(), &eta) == std::cmp::Ordering::Greater {
            eta = d.abs();
        }
        if d.is_zero() {
            zero_streak += 1;
        } else {
            zero_streak = 0;
        }
        run.iterates.push(state.x().to_vec());
        run.deltas.push(d.clone());
        if let Some(obs) = observer.as_deref_mut() {
            obs.on_step(&StepEvent {
                block: Block::Midpoint,
                sweep: ((t - 1) / n + 1) as u64,
                update: t as u64,
                coord: Coord::Var(j),
                delta: d,
                eta: eta.clone(),
                objective: state.objective(),
                energy: None,
            });
        }
        if zero_streak >= n {
            run.fixed_point = true;
            return Ok(run);
        }
        if T::EXACT {
            // Compare against same-phase earlier iterates.
            let mut u = t;
            while u > n {
                u -= n;
                if run.iterates[u] == run.iterates[t] {
                    run.cycle = Some((u, t - u));
                    return Ok(run);
                }
            }
        }
    }
    Ok(run)
}

/// The twelve extreme points of the cycling polytope.
pub fn cycle_points() -> Vec<[Rational; 3]> {
    let p = |a: i64, b: i64, c: i64| {
        [
            Rational::from_int(a),
            Rational::from_int(b),
            Rational::from_int(c),
        ]
    };
    vec![
        p(-2, 0, 0),
        p(2, 0, 0),
        p(0, -1, 0),
        p(0, 3, 0),
        p(0, 1, -1),
        p(0, 1, 3),
        p(-1, 1, 1),
        p(3, 1, 1),
        p(1, -2, 1),
        p(1, 2, 1),
        p(1, 0, -2),
        p(1, 0, 2),
    ]
}

/// The twelve supporting halfspaces a·x ≤ b, listed so that halfspace k is
/// tight exactly at point k of [`cycle_points`]. Halves are exact (7/2).
pub fn cycle_halfspaces() -> Vec<([Rational; 3], Rational)> {
    // Coefficients scaled by 2 to stay integral: a·x ≤ b ⟺ 2a·x ≤ 2b.
    let rows: [[i64; 4]; 12] = [
        [-2, 0, 0, 4],    // −x1 ≤ 2
        [16, -10, -7, 32], // 8x1 − 5x2 − 3.5x3 ≤ 16
        [-7, -16, -10, 16], // −3.5x1 − 8x2 − 5x3 ≤ 8
        [0, 2, 0, 6],     // x2 ≤ 3
        [-10, 7, -16, 23], // −5x1 + 3.5x2 − 8x3 ≤ 11.5
        [0, 0, 2, 6],     // x3 ≤ 3
        [-16, 10, 7, 33], // −8x1 + 5x2 + 3.5x3 ≤ 16.5
        [2, 0, 0, 6],     // x1 ≤ 3
        [0, -2, 0, 4],    // −x2 ≤ 2
        [7, 16, 10, 49],  // 3.5x1 + 8x2 + 5x3 ≤ 24.5
        [0, 0, -2, 4],    // −x3 ≤ 2
        [10, -7, 16, 42], // 5x1 − 3.5x2 + 8x3 ≤ 21
    ];
    rows.iter()
        .map(|row| {
            (
                [
                    Rational::from_ratio(row[0], 2),
                    Rational::from_ratio(row[1], 2),
                    Rational::from_ratio(row[2], 2),
                ],
                Rational::from_ratio(row[3], 2),
            )
        })
        .collect()
}

/// f(x) = max{0, max_k (a_k·x − b_k)}: zero on the polytope, positive
/// outside it.
pub fn cycle_instance() -> MaxAffInstance<Rational> {
    let mut rows = vec![AffineRow::new(Rational::from_int(0), vec![])];
    for (a, b) in cycle_halfspaces() {
        let terms = a
            .iter()
            .enumerate()
            .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
            .map(|(j, c)| (j, c.clone()))
            .collect();
        rows.push(AffineRow::new(-b, terms));
    }
    MaxAffInstance::new(3, rows).expect("well-formed by construction")
}

/// One line of the verification report.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub label: String,
    pub pass: bool,
}

/// Full verification of the counterexample data and trajectory.
#[derive(Debug, Clone)]
pub struct CycleVerification {
    pub checks: Vec<CheckLine>,
    /// x after each of the first six updates from the origin.
    pub trajectory: Vec<Vec<Rational>>,
    pub period: Option<(usize, usize)>,
}

impl CycleVerification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks, exactly: every point satisfies every halfspace; halfspace k is
/// tight at point k and only there; and cyclic mid-point descent from the
/// origin walks the six tabulated iterates and returns.
pub fn verify_cycle_instance() -> CycleVerification {
    let points = cycle_points();
    let halfspaces = cycle_halfspaces();
    let mut checks = Vec::new();

    let dot = |a: &[Rational; 3], p: &[Rational; 3]| -> Rational {
        a[0].clone() * p[0].clone() + a[1].clone() * p[1].clone() + a[2].clone() * p[2].clone()
    };

    for (ki, (a, b)) in halfspaces.iter().enumerate() {
        let mut feasible = true;
        let mut tight_at: Vec<usize> = Vec::new();
        for (pi, p) in points.iter().enumerate() {
            let lhs = dot(a, p);
            if lhs > *b {
                feasible = false;
            }
            if lhs == *b {
                tight_at.push(pi);
            }
        }
        checks.push(CheckLine {
            label: format!("halfspace {ki} holds at all 12 points"),
            pass: feasible,
        });
        checks.push(CheckLine {
            label: format!("halfspace {ki} tight exactly at point {ki}"),
            pass: tight_at == vec![ki],
        });
    }

    let instance = cycle_instance();
    let origin = vec![Rational::from_int(0); 3];
    let run = run_midpoint(&instance, &origin, 24, None).expect("run succeeds");
    let expected: Vec<Vec<Rational>> = [
        [0, 0, 0],
        [0, 1, 0],
        [0, 1, 1],
        [1, 1, 1],
        [1, 0, 1],
        [1, 0, 0],
    ]
    .iter()
    .map(|p| p.iter().map(|&v| Rational::from_int(v)).collect())
    .collect();
    let traj: Vec<Vec<Rational>> = run.iterates.iter().skip(1).take(6).cloned().collect();
    checks.push(CheckLine {
        label: "trajectory matches the tabulated six iterates".into(),
        pass: traj == expected,
    });
    checks.push(CheckLine {
        label: "exact recurrence with period 6".into(),
        pass: run.cycle.map(|(_, len)| len) == Some(6),
    });
    checks.push(CheckLine {
        label: "objective stays 0 along the cycle".into(),
        pass: run
            .iterates
            .iter()
            .all(|x| instance.evaluate(x).map(|(_, f)| f.is_zero()).unwrap_or(false)),
    });

    CycleVerification {
        checks,
        trajectory: traj,
        period: run.cycle,
    }
}
