//! Experiment harness: scenario generation from a config, one-shot solves,
//! parameter sweeps with CSV output and convergence traces.

mod config;
mod sweep;

pub use config::{load_scenario, ScenarioConfig, Weights};
pub use sweep::{run_sweep, write_csv, Axis, SweepRow, SweepSpec, CSV_HEADER};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::beamdesign::{
    baseline_mf, baseline_sdma, baseline_tdma, solve_full_space, solve_partial_space, solve_single_beam, SolverTrace,
};
use crate::channel::{draw_ue, profile_from_drop, UeId};
use crate::clustering::ClusteredScenario;
use crate::error::{Error, Result};
use crate::rates::{ergodic_weighted_sum_rate, RateReport};
use crate::rng::{stream, Domain};

/// Beam design schemes, in CSV sort order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    /// Full-space multi-beam.
    Alg1,
    /// Partial-space multi-beam.
    Alg2,
    /// Partial-space single-beam.
    Alg3,
    Mf,
    Sdma,
    Tdma,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3, Algorithm::Mf, Algorithm::Sdma, Algorithm::Tdma];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
            Algorithm::Mf => "mf",
            Algorithm::Sdma => "sdma",
            Algorithm::Tdma => "tdma",
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, Algorithm::Alg1 | Algorithm::Alg2 | Algorithm::Alg3)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Argument(format!("unknown algorithm \"{s}\" (expected alg1, alg2, alg3, mf, sdma or tdma)")))
    }
}

/// Drops `config.k` UEs and clusters them. UE `i` always comes from the
/// `i`-th drop stream of the seed, so smaller `k` gives a prefix of the same
/// population and other arrays see the same geometry.
pub fn build_scenario(config: &ScenarioConfig) -> Result<ClusteredScenario> {
    config.validate()?;
    let params = config.channel_params();
    let array = config.array()?;
    let profiles = (0..config.k)
        .map(|i| {
            let mut rng = stream(config.seed, Domain::UeDrop, i as u64);
            let drop = draw_ue(&mut rng, &params)?;
            profile_from_drop(&drop, &array, UeId(i as u32), config.weights.weight(i))
        })
        .collect::<Result<Vec<_>>>()?;
    ClusteredScenario::build(profiles, config.num_sectors())
}

/// Rates of one algorithm on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub algorithm: Algorithm,
    pub report: RateReport,
    /// Present for the iterative solvers.
    pub trace: Option<SolverTrace>,
    pub wall_time_ms: f64,
}

impl Outcome {
    pub fn converged(&self) -> bool {
        self.trace.as_ref().is_none_or(|t| t.converged)
    }

    pub fn outer_iters(&self) -> usize {
        self.trace.as_ref().map_or(0, |t| t.outer_iters_used)
    }
}

/// Designs with `algorithm` on a prepared scenario and evaluates the design
/// over `config.mc_realizations` fading draws.
pub fn evaluate(scenario: &ClusteredScenario, config: &ScenarioConfig, algorithm: Algorithm) -> Result<Outcome> {
    let start = Instant::now();
    let p = config.p_max();
    let (r, seed) = (config.mc_realizations, config.seed);
    let (report, trace) = match algorithm {
        Algorithm::Alg1 => {
            let s = solve_full_space(scenario, &config.solver, p)?;
            (ergodic_weighted_sum_rate(&s.design, scenario, r, seed)?, Some(s.trace))
        }
        Algorithm::Alg2 => {
            let s = solve_partial_space(scenario, &config.solver, p)?;
            (ergodic_weighted_sum_rate(&s.design, scenario, r, seed)?, Some(s.trace))
        }
        Algorithm::Alg3 => {
            let s = solve_single_beam(scenario, &config.solver, p)?;
            (ergodic_weighted_sum_rate(&s.design, scenario, r, seed)?, Some(s.trace))
        }
        Algorithm::Mf => (ergodic_weighted_sum_rate(&baseline_mf(scenario, p)?, scenario, r, seed)?, None),
        Algorithm::Sdma => {
            let s = baseline_sdma(scenario, p)?;
            (ergodic_weighted_sum_rate(&s.design, &s.evaluation_scenario, r, seed)?, None)
        }
        Algorithm::Tdma => (baseline_tdma(scenario, p, r, seed)?, None),
    };
    Ok(Outcome { algorithm, report, trace, wall_time_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// Generates the config's scenario and evaluates one algorithm on it.
pub fn solve(config: &ScenarioConfig, algorithm: Algorithm) -> Result<Outcome> {
    evaluate(&build_scenario(config)?, config, algorithm)
}

/// One outer iteration of a solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub surrogate: f64,
    pub budget_usage: f64,
}

/// Per-iteration surrogate and budget usage of an iterative solver, with the
/// full trace. Iteration 0 is the starting point.
pub fn convergence_trace(config: &ScenarioConfig, algorithm: Algorithm) -> Result<(Vec<TraceRow>, SolverTrace)> {
    if !algorithm.is_iterative() {
        return Err(Error::Argument(format!("{algorithm} is not an iterative solver")));
    }
    let scenario = build_scenario(config)?;
    let p = config.p_max();
    let trace = match algorithm {
        Algorithm::Alg1 => solve_full_space(&scenario, &config.solver, p)?.trace,
        Algorithm::Alg2 => solve_partial_space(&scenario, &config.solver, p)?.trace,
        _ => solve_single_beam(&scenario, &config.solver, p)?.trace,
    };
    // All three solvers start from a point that spends the whole budget.
    let mut rows = vec![TraceRow { iteration: 0, surrogate: trace.initial_surrogate, budget_usage: 1.0 }];
    rows.extend(
        trace
            .surrogate_per_outer_iter
            .iter()
            .zip(&trace.budget_usage_per_iter)
            .enumerate()
            .map(|(i, (s, b))| TraceRow { iteration: i + 1, surrogate: *s, budget_usage: *b }),
    );
    Ok((rows, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig { mc_realizations: 50, ..ScenarioConfig::new(8, 6, 10.0, 3) }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("alg4".parse::<Algorithm>().is_err());
    }

    #[test]
    fn k_prefix_keeps_the_same_drops() {
        let big = build_scenario(&ScenarioConfig { k: 10, ..small() }).unwrap();
        let few = build_scenario(&small()).unwrap();
        for p in &few.profiles {
            let q = &big.profiles[big.index_of(p.id).unwrap()];
            assert_eq!(p, q);
        }
    }

    #[test]
    fn every_algorithm_runs() {
        let config = small();
        let scenario = build_scenario(&config).unwrap();
        for a in Algorithm::ALL {
            let out = evaluate(&scenario, &config, a).unwrap();
            assert!(out.report.weighted_sum_rate > 0.0, "{a}");
            assert!(out.report.weighted_sum_rate.is_finite());
            assert_eq!(out.trace.is_some(), a.is_iterative());
        }
    }

    #[test]
    fn trace_rows_follow_the_solver() {
        let (rows, trace) = convergence_trace(&small(), Algorithm::Alg1).unwrap();
        assert_eq!(rows.len(), trace.outer_iters_used + 1);
        assert!(rows.len() <= small().solver.max_outer_iters + 1);
        assert!(convergence_trace(&small(), Algorithm::Mf).is_err());
    }
}
