//! Beam design: three WMMSE-style solvers with decreasing beamspace freedom
//! and three classical baselines.
//!
//! All solvers maximise the per-beam rate bound by alternating between MMSE
//! receivers, MSE weights and a power update in closed form, with the power
//! budget enforced through a Lagrange multiplier.

mod baselines;
mod multiplier;
mod selection;
mod single_beam;
mod wmmse;

pub use baselines::{baseline_mf, baseline_sdma, baseline_tdma, best_beam, mf_beam, SdmaDesign};
pub use selection::{beam_cluster_rate, select_beams};
pub use single_beam::{solve_single_beam, SingleBeamSolution};
pub use wmmse::{solve_full_space, solve_partial_space};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::BeamDesign;

/// Iteration limits, tolerances and multiplier step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    /// Cap on multiplier steps per inner loop.
    pub max_inner_iters: usize,
    /// Outer loop stops once the weighted-sum-rate objective changes by less
    /// than this fraction between iterations.
    pub outer_tol: f64,
    /// Budget residual tolerance as a fraction of `P_max`.
    pub multiplier_tol: f64,
    /// Initial step of the power-budget multipliers (on the budget residual normalised by `P_max`).
    pub step_mu: f64,
    /// Initial step of the partial-space multiplier.
    pub step_mu2: f64,
    /// Initial step of the per-cluster fraction multipliers.
    pub step_omega: f64,
    pub initial_multiplier: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 50,
            max_inner_iters: 500,
            outer_tol: 1e-4,
            multiplier_tol: 1e-6,
            step_mu: 0.01,
            step_mu2: 0.01,
            step_omega: 0.01,
            initial_multiplier: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters < 1 || self.max_inner_iters < 1 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        let positive = [
            ("outer_tol", self.outer_tol),
            ("multiplier_tol", self.multiplier_tol),
            ("step_mu", self.step_mu),
            ("step_mu2", self.step_mu2),
            ("step_omega", self.step_omega),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.initial_multiplier >= 0.0) {
            return Err(Error::Config("initial_multiplier must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-outer-iteration record of a solver run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverTrace {
    /// Surrogate `Σ α (β·MSE − ln β)` at the starting point, before any update.
    pub initial_surrogate: f64,
    /// Surrogate after each outer iteration, at the optimal receivers and weights.
    pub surrogate_per_outer_iter: Vec<f64>,
    /// Weighted sum of per-beam rates `Σ α log2(1 + γ)` at the starting point.
    pub initial_rate_bound: f64,
    /// The same objective after each outer iteration.
    pub rate_bound_per_outer_iter: Vec<f64>,
    /// `max|Δp| / max p` of each outer iteration.
    pub power_change_per_outer_iter: Vec<f64>,
    /// `Σ s·p / P_max` after each outer iteration.
    pub budget_usage_per_iter: Vec<f64>,
    /// Multiplier steps used by each inner loop.
    pub inner_iters_per_outer: Vec<usize>,
    pub outer_iters_used: usize,
    pub converged: bool,
    /// Number of optimisation variables updated per sweep.
    pub num_variables: usize,
    /// Elementary term evaluations across the whole run.
    pub op_count: u64,
}

impl SolverTrace {
    pub fn ops_per_outer_iter(&self) -> f64 {
        if self.outer_iters_used == 0 {
            0.0
        } else {
            self.op_count as f64 / self.outer_iters_used as f64
        }
    }

    /// Largest increase between consecutive surrogate values (0 if monotone).
    pub fn max_surrogate_increase(&self) -> f64 {
        std::iter::once(self.initial_surrogate)
            .chain(self.surrogate_per_outer_iter.iter().copied())
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// A solver's output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub design: BeamDesign,
    pub trace: SolverTrace,
}

/// Surrogate `Σ α (1 + ln mse)` at optimal receivers (`v = MMSE`) and
/// weights (`β = 1/mse`), and the rate objective `−Σ α log2 mse`, over every
/// UE and beam. Inactive pairs have mse 1.
pub(crate) fn objectives(weights: &[f64], mse: &[f64], num_beams: usize) -> (f64, f64) {
    let mut surrogate = 0.0;
    let mut rate = 0.0;
    for (row, a) in mse.chunks(num_beams).zip(weights) {
        for m in row {
            surrogate += a * (1.0 + m.ln());
            rate -= a * m.log2();
        }
    }
    (surrogate, rate)
}

/// Relative change of the objective between two outer iterations.
pub(crate) fn objective_change(old: f64, new: f64) -> f64 {
    let scale = old.abs().max(new.abs());
    if scale == 0.0 {
        0.0
    } else {
        (new - old).abs() / scale
    }
}

/// Appends one outer iteration to `trace`; returns whether the objective has settled.
pub(crate) fn record_iteration(
    trace: &mut SolverTrace,
    config: &SolverConfig,
    (surrogate, rate): (f64, f64),
    power_change: f64,
    budget_usage: f64,
    inner_iters: usize,
) -> bool {
    let previous = trace.rate_bound_per_outer_iter.last().copied().unwrap_or(trace.initial_rate_bound);
    trace.outer_iters_used += 1;
    trace.surrogate_per_outer_iter.push(surrogate);
    trace.rate_bound_per_outer_iter.push(rate);
    trace.power_change_per_outer_iter.push(power_change);
    trace.budget_usage_per_iter.push(budget_usage);
    trace.inner_iters_per_outer.push(inner_iters);
    trace.converged = objective_change(previous, rate) < config.outer_tol;
    trace.converged
}

/// `max|new − old| / max|old|`.
pub(crate) fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let scale = old.iter().chain(new).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    old.iter().zip(new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { outer_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { max_outer_iters: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn relative_change_is_scale_free() {
        assert_eq!(relative_change(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((relative_change(&[1.0, 2.0], &[1.0, 2.2]) - 0.1 / 1.1).abs() < 1e-12);
        assert_eq!(relative_change(&[0.0], &[0.0]), 0.0);
    }

    #[test]
    fn objectives_at_known_mse() {
        let (sur, rate) = objectives(&[1.0, 2.0], &[0.5, 1.0, 0.25, 1.0], 2);
        assert!((rate - (1.0 + 2.0 * 2.0)).abs() < 1e-12);
        let expected = (1.0 + 0.5f64.ln()) + 1.0 + 2.0 * (1.0 + 0.25f64.ln()) + 2.0;
        assert!((sur - expected).abs() < 1e-12);
        assert_eq!(objective_change(0.0, 0.0), 0.0);
        assert!((objective_change(10.0, 11.0) - 1.0 / 11.0).abs() < 1e-12);
    }
}
