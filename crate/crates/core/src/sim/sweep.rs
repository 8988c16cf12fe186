//! Parameter sweeps and their CSV rows.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use super::{build_scenario, evaluate, Algorithm, ScenarioConfig};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "algorithm,axis_name,axis_value,n_t,k,snr_db,mc_realizations,seed,\
weighted_sum_rate,sum_rate_stderr,upper_bound,outer_iters,converged,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SnrDb,
    K,
    NT,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::K => "k",
            Axis::NT => "n_t",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::Argument(format!("{} values must be positive integers, got {value}", self.name())))
            }
        };
        let mut c = base.clone();
        match self {
            Axis::SnrDb => c.p_max_db = value,
            Axis::K => c.k = count()?,
            Axis::NT => c.n_t = count()?,
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr_db" => Ok(Axis::SnrDb),
            "k" => Ok(Axis::K),
            "n_t" => Ok(Axis::NT),
            other => Err(Error::Argument(format!("unknown axis \"{other}\" (expected snr_db, k or n_t)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub output_path: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Argument("sweep values must not be empty".into()));
        }
        if self.values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Argument("sweep values must be sorted ascending".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Argument("sweep needs at least one algorithm".into()));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub axis: Axis,
    pub axis_value: f64,
    pub n_t: usize,
    pub k: usize,
    pub snr_db: f64,
    pub mc_realizations: usize,
    pub seed: u64,
    pub weighted_sum_rate: f64,
    pub sum_rate_stderr: f64,
    pub upper_bound: f64,
    pub outer_iters: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
}

impl SweepRow {
    /// CSV line without the trailing newline. `wall_time_ms` is written as 0
    /// unless `timing` is set, so that repeated runs are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let wall = if timing { self.wall_time_ms } else { 0.0 };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.axis,
            self.axis_value,
            self.n_t,
            self.k,
            self.snr_db,
            self.mc_realizations,
            self.seed,
            self.weighted_sum_rate,
            self.sum_rate_stderr,
            self.upper_bound,
            self.outer_iters,
            self.converged,
            wall
        )
    }
}

/// Evaluates every (axis value, algorithm) pair, in parallel. Rows come back
/// sorted by algorithm, then axis value. A solver error yields a row with
/// NaN rates and `converged = false`; invalid configs abort the sweep.
pub fn run_sweep(config: &ScenarioConfig, sweep: &SweepSpec) -> Result<Vec<SweepRow>> {
    config.validate()?;
    sweep.validate()?;
    let configs = sweep.values.iter().map(|&v| sweep.axis.apply(config, v)).collect::<Result<Vec<_>>>()?;
    let scenarios = configs.par_iter().map(build_scenario).collect::<Result<Vec<_>>>()?;
    let mut jobs: Vec<(Algorithm, usize)> =
        sweep.algorithms.iter().flat_map(|&a| (0..configs.len()).map(move |i| (a, i))).collect();
    jobs.sort_by(|a, b| a.0.cmp(&b.0).then(sweep.values[a.1].total_cmp(&sweep.values[b.1])));
    Ok(jobs
        .par_iter()
        .map(|&(algorithm, i)| {
            let c = &configs[i];
            let mut row = SweepRow {
                algorithm,
                axis: sweep.axis,
                axis_value: sweep.values[i],
                n_t: c.n_t,
                k: c.k,
                snr_db: c.p_max_db,
                mc_realizations: c.mc_realizations,
                seed: c.seed,
                weighted_sum_rate: f64::NAN,
                sum_rate_stderr: f64::NAN,
                upper_bound: f64::NAN,
                outer_iters: 0,
                converged: false,
                wall_time_ms: 0.0,
            };
            if let Ok(out) = evaluate(&scenarios[i], c, algorithm) {
                row.weighted_sum_rate = out.report.weighted_sum_rate;
                row.sum_rate_stderr = out.report.sum_rate_stderr;
                row.upper_bound = out.report.upper_bound;
                row.outer_iters = out.outer_iters();
                row.converged = out.converged();
                row.wall_time_ms = out.wall_time_ms;
            }
            row
        })
        .collect())
}

/// Writes the header and rows.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W, timing: bool) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv(timing))?;
    }
    out.flush()
}
