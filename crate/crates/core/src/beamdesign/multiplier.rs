//! Lagrange multiplier search for a monotone constraint.
//!
//! `usage(λ)` is non-increasing in the multiplier. The search runs
//! projected subgradient ascent on the dual, `λ ← λ + Δ·(usage − target)/target`,
//! doubling `Δ` while the residual keeps its sign and halving it when the
//! sign flips. Steps that would leave the bracket established so far fall
//! back to its midpoint, so the search cannot cycle.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Search {
    pub initial: f64,
    pub step: f64,
    /// Absolute tolerance on `usage − target`.
    pub tol: f64,
    pub max_iters: usize,
    /// Lowest admissible multiplier.
    pub floor: Floor,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Floor {
    /// Projection onto `λ ≥ value`; at the floor an under-used constraint is slack.
    Inclusive(f64),
    /// Open lower limit where usage diverges (equality constraints).
    Exclusive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub multiplier: f64,
    pub usage: f64,
    pub iters: usize,
    pub converged: bool,
}

impl Search {
    pub fn run(&self, target: f64, mut usage: impl FnMut(f64) -> f64) -> Outcome {
        let scale = target.abs().max(f64::MIN_POSITIVE);
        let (floor, inclusive) = match self.floor {
            Floor::Inclusive(v) => (v, true),
            Floor::Exclusive(v) => (v, false),
        };
        let mut lam = self.initial;
        if inclusive {
            lam = lam.max(floor);
        } else if lam <= floor {
            lam = floor + floor.abs().max(1.0);
        }
        // Tested multipliers with positive (lo) and negative (hi) residual.
        let mut lo: Option<f64> = None;
        let mut hi = f64::INFINITY;
        let mut step = self.step;
        let mut last_sign = 0.0;
        let mut best = Outcome { multiplier: lam, usage: f64::NAN, iters: 0, converged: false };
        for it in 1..=self.max_iters {
            let u = usage(lam);
            let res = u - target;
            if best.usage.is_nan() || res.abs() < (best.usage - target).abs() {
                best = Outcome { multiplier: lam, usage: u, iters: it, converged: false };
            }
            if res.abs() <= self.tol || (inclusive && lam <= floor && res <= 0.0) {
                return Outcome { multiplier: lam, usage: u, iters: it, converged: true };
            }
            if res > 0.0 {
                lo = Some(lam);
            } else {
                hi = lam;
            }
            let sign = res.signum();
            if last_sign == sign {
                step *= 2.0;
            } else if last_sign != 0.0 {
                step *= 0.5;
            }
            last_sign = sign;

            let mut next = lam + step * res / scale;
            if inclusive {
                next = next.max(floor);
            }
            let above_lo = match lo {
                Some(l) => next > l,
                None if inclusive => next >= floor,
                None => next > floor,
            };
            if !(above_lo && next < hi) {
                next = match lo {
                    Some(l) if hi.is_finite() => 0.5 * (l + hi),
                    Some(l) => l + (l - floor).abs().max(1.0),
                    None if inclusive => floor,
                    None => 0.5 * (floor + hi),
                };
            }
            if next == lam {
                best.iters = it;
                return best;
            }
            lam = next;
        }
        best.iters = self.max_iters;
        best
    }
}
