//! Upper envelopes of univariate affine functions.
//!
//! A coordinate update restricts f to one variable; the restricted rows are
//! lines `slope·t + intercept`. The envelope is built by the standard
//! slope-sorted scan and solved exactly on the segment of interest, so the
//! same code is deterministic in float mode and exact in rational mode.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::{cmp, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Line<T> {
    pub slope: T,
    pub intercept: T,
}

impl<T: Scalar> Line<T> {
    pub fn new(slope: T, intercept: T) -> Self {
        Line { slope, intercept }
    }

    pub fn eval(&self, t: &T) -> T {
        self.slope.clone() * t.clone() + self.intercept.clone()
    }
}

/// t-coordinate where two non-parallel lines meet.
fn intersect<T: Scalar>(a: &Line<T>, b: &Line<T>) -> T {
    (a.intercept.clone() - b.intercept.clone()) / (b.slope.clone() - a.slope.clone())
}

/// Upper envelope max_k (slope_k·t + intercept_k).
///
/// `lines[k]` is active on `[breaks[k-1], breaks[k]]`; slopes strictly
/// increase and breakpoints strictly increase.
#[derive(Debug, Clone)]
pub struct Envelope<T> {
    pub lines: Vec<Line<T>>,
    pub breaks: Vec<T>,
}

impl<T: Scalar> Envelope<T> {
    /// Builds the envelope of a nonempty set of lines.
    pub fn build(mut lines: Vec<Line<T>>) -> Self {
        assert!(!lines.is_empty(), "envelope of no lines");
        lines.sort_by(|a, b| match cmp(&a.slope, &b.slope) {
            Ordering::Equal => cmp(&a.intercept, &b.intercept),
            o => o,
        });
        // Among parallel lines only the highest matters.
        let mut dedup: Vec<Line<T>> = Vec::with_capacity(lines.len());
        for line in lines {
            if let Some(last) = dedup.last_mut() {
                if last.slope == line.slope {
                    *last = line;
                    continue;
                }
            }
            dedup.push(line);
        }

        let mut hull: Vec<Line<T>> = Vec::with_capacity(dedup.len());
        let mut breaks: Vec<T> = Vec::new();
        for line in dedup {
            loop {
                match hull.len() {
                    0 => break,
                    1 => {
                        // A line with larger slope but never exceeding the
                        // current one cannot happen: larger slope always wins
                        // for large t.
                        break;
                    }
                    _ => {
                        let prev = &hull[hull.len() - 2];
                        let x_new = intersect(prev, &line);
                        // Break where the current top took over from prev.
                        let x_old = breaks.last().expect("break per interior line");
                        if cmp(&x_new, x_old) != Ordering::Greater {
                            hull.pop();
                            breaks.pop();
                        } else {
                            break;
                        }
                    }
                }
            }
            if let Some(top) = hull.last() {
                breaks.push(intersect(top, &line));
            }
            hull.push(line);
        }
        Envelope {
            lines: hull,
            breaks,
        }
    }

    pub fn eval(&self, t: &T) -> T {
        self.lines[self.piece_at(t)].eval(t)
    }

    /// Index of the active piece at t (leftmost on ties).
    fn piece_at(&self, t: &T) -> usize {
        let mut k = 0;
        while k < self.breaks.len() && cmp(t, &self.breaks[k]) == Ordering::Greater {
            k += 1;
        }
        k
    }

    /// Minimum value and the closed interval of minimizers.
    ///
    /// Errors when the envelope decreases without end in either direction
    /// (no minimizer) or is flat toward infinity (minimizer set unbounded).
    pub fn min_interval(&self, col: usize) -> Result<MinInterval<T>> {
        let first = &self.lines[0];
        let last = &self.lines[self.lines.len() - 1];
        let zero = T::zero();
        match cmp(&first.slope, &zero) {
            Ordering::Greater => return Err(Error::UnboundedBelow { col }),
            Ordering::Equal => {
                if self.lines.len() == 1 {
                    return Err(Error::UnboundedMinimizerSet { col });
                }
                // Flat leftmost piece: minimizers extend to −∞.
                return Err(Error::UnboundedMinimizerSet { col });
            }
            Ordering::Less => {}
        }
        match cmp(&last.slope, &zero) {
            Ordering::Less => return Err(Error::UnboundedBelow { col }),
            Ordering::Equal => return Err(Error::UnboundedMinimizerSet { col }),
            Ordering::Greater => {}
        }
        // Slopes increase; locate the sign change.
        for (k, line) in self.lines.iter().enumerate() {
            match cmp(&line.slope, &zero) {
                Ordering::Equal => {
                    // Interior flat piece spanning [breaks[k-1], breaks[k]].
                    let lower = self.breaks[k - 1].clone();
                    let upper = self.breaks[k].clone();
                    return Ok(MinInterval {
                        value: line.intercept.clone(),
                        lower,
                        upper,
                    });
                }
                Ordering::Greater => {
                    // Pieces k-1 (negative slope) and k meet at the minimum.
                    let t = self.breaks[k - 1].clone();
                    let value = line.eval(&t);
                    return Ok(MinInterval {
                        value,
                        lower: t.clone(),
                        upper: t,
                    });
                }
                Ordering::Less => {}
            }
        }
        unreachable!("positive final slope guarantees a sign change")
    }
}

/// Minimum of a univariate piecewise-linear convex function.
#[derive(Debug, Clone, PartialEq)]
pub struct MinInterval<T> {
    pub value: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> MinInterval<T> {
    pub fn midpoint(&self) -> T {
        (self.lower.clone() + self.upper.clone()).half()
    }

    pub fn contains(&self, t: &T) -> bool {
        cmp(&self.lower, t) != Ordering::Greater && cmp(t, &self.upper) != Ordering::Greater
    }
}

/// Unique root of `pos(t) = neg(t)` where `pos` is an increasing and `neg`
/// a decreasing envelope.
///
/// Their difference is strictly increasing and spans both signs, so exactly
/// one merged segment brackets the root; the linear equation on that
/// segment is solved directly.
pub fn envelope_crossing<T: Scalar>(pos: &Envelope<T>, neg: &Envelope<T>) -> T {
    debug_assert!(pos.lines.iter().all(|l| cmp(&l.slope, &T::zero()) == Ordering::Greater));
    debug_assert!(neg.lines.iter().all(|l| cmp(&l.slope, &T::zero()) == Ordering::Less));

    let mut kp = 0; // current piece of pos
    let mut kn = 0; // current piece of neg
    loop {
        let lp = &pos.lines[kp];
        let ln = &neg.lines[kn];
        // Candidate root of the two active lines.
        let t = intersect(ln, lp);
        // Segment upper end: next breakpoint of either envelope.
        let next_p = pos.breaks.get(kp);
        let next_n = neg.breaks.get(kn);
        let upper: Option<&T> = match (next_p, next_n) {
            (Some(a), Some(b)) => Some(if cmp(a, b) != Ordering::Greater { a } else { b }),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        };
        match upper {
            None => return t,
            Some(u) => {
                if cmp(&t, u) != Ordering::Greater {
                    return t;
                }
                // Root lies to the right; advance whichever envelope breaks first.
                let advance_p = match (next_p, next_n) {
                    (Some(a), Some(b)) => cmp(a, b) != Ordering::Greater,
                    (Some(_), None) => true,
                    _ => false,
                };
                if advance_p {
                    kp += 1;
                } else {
                    kn += 1;
                }
            }
        }
    }
}
