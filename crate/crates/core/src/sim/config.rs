//! Scenario configuration files.
//!
//! A config is a flat TOML document:
//!
//! ```toml
//! n_t = 16
//! k = 12
//! p_max_db = 10.0
//! seed = 7
//! # optional
//! mc_realizations = 1000
//! weights = "uniform"        # or a list, one entry per UE
//! max_outer_iters = 50
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::beamdesign::SolverConfig;
use crate::channel::{ArrayConfig, ChannelParams};
use crate::error::{Error, Result};

/// UE rate weights `α`.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform,
    /// One weight per UE index; sweeps over `k` use a prefix.
    Custom(Vec<f64>),
}

impl Weights {
    pub fn weight(&self, ue: usize) -> f64 {
        match self {
            Weights::Uniform => 1.0,
            Weights::Custom(w) => w[ue],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_t: usize,
    pub k: usize,
    pub p_max_db: f64,
    pub seed: u64,
    pub cell_radius_m: f64,
    pub num_paths: usize,
    pub angular_spread_deg: f64,
    pub pathloss_exponent: f64,
    pub weights: Weights,
    /// Defaults to `n_t` when unset.
    pub num_sectors: Option<usize>,
    pub mc_realizations: usize,
    pub min_distance_m: f64,
    pub path_power_decay: f64,
    pub median_gain: f64,
    pub max_excess_distance_m: f64,
    pub solver: SolverConfig,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawWeights {
    Named(String),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_t: usize,
    k: usize,
    p_max_db: f64,
    seed: u64,
    cell_radius_m: Option<f64>,
    num_paths: Option<usize>,
    angular_spread_deg: Option<f64>,
    pathloss_exponent: Option<f64>,
    weights: Option<RawWeights>,
    num_sectors: Option<usize>,
    mc_realizations: Option<usize>,
    min_distance_m: Option<f64>,
    path_power_decay: Option<f64>,
    median_gain: Option<f64>,
    max_excess_distance_m: Option<f64>,
    max_outer_iters: Option<usize>,
    max_inner_iters: Option<usize>,
    outer_tol: Option<f64>,
    multiplier_tol: Option<f64>,
    step_mu: Option<f64>,
    step_mu2: Option<f64>,
    step_omega: Option<f64>,
    initial_multiplier: Option<f64>,
}

impl ScenarioConfig {
    /// Config with every optional field at its default.
    pub fn new(n_t: usize, k: usize, p_max_db: f64, seed: u64) -> Self {
        let channel = ChannelParams::default();
        Self {
            n_t,
            k,
            p_max_db,
            seed,
            cell_radius_m: channel.cell_radius,
            num_paths: channel.num_paths,
            angular_spread_deg: channel.angular_spread.to_degrees(),
            pathloss_exponent: channel.pathloss_exponent,
            weights: Weights::Uniform,
            num_sectors: None,
            mc_realizations: 1000,
            min_distance_m: channel.min_distance,
            path_power_decay: channel.path_power_decay,
            median_gain: channel.median_gain,
            max_excess_distance_m: channel.max_excess_distance,
            solver: SolverConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        let mut c = Self::new(raw.n_t, raw.k, raw.p_max_db, raw.seed);
        macro_rules! take {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = raw.$field { $target = v; })*
            };
        }
        take! {
            cell_radius_m => c.cell_radius_m,
            num_paths => c.num_paths,
            angular_spread_deg => c.angular_spread_deg,
            pathloss_exponent => c.pathloss_exponent,
            mc_realizations => c.mc_realizations,
            min_distance_m => c.min_distance_m,
            path_power_decay => c.path_power_decay,
            median_gain => c.median_gain,
            max_excess_distance_m => c.max_excess_distance_m,
            max_outer_iters => c.solver.max_outer_iters,
            max_inner_iters => c.solver.max_inner_iters,
            outer_tol => c.solver.outer_tol,
            multiplier_tol => c.solver.multiplier_tol,
            step_mu => c.solver.step_mu,
            step_mu2 => c.solver.step_mu2,
            step_omega => c.solver.step_omega,
            initial_multiplier => c.solver.initial_multiplier,
        }
        c.num_sectors = raw.num_sectors;
        c.weights = match raw.weights {
            None => Weights::Uniform,
            Some(RawWeights::Named(name)) if name == "uniform" => Weights::Uniform,
            Some(RawWeights::Named(name)) => {
                return Err(Error::Config(format!("weights: expected \"uniform\" or a list, got \"{name}\"")))
            }
            Some(RawWeights::List(w)) => Weights::Custom(w),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.n_t < 2 {
            return fail("n_t", format!("must be at least 2, got {}", self.n_t));
        }
        if self.k < 1 {
            return fail("k", format!("must be at least 1, got {}", self.k));
        }
        if self.mc_realizations < 1 {
            return fail("mc_realizations", format!("must be at least 1, got {}", self.mc_realizations));
        }
        if !self.p_max_db.is_finite() {
            return fail("p_max_db", format!("must be finite, got {}", self.p_max_db));
        }
        if self.num_sectors == Some(0) {
            return fail("num_sectors", "must be at least 1".into());
        }
        if let Weights::Custom(w) = &self.weights {
            if w.len() < self.k {
                return fail("weights", format!("{} entries for k = {}", w.len(), self.k));
            }
            if let Some(x) = w.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return fail("weights", format!("entries must be positive, got {x}"));
            }
        }
        if self.num_paths < 1 {
            return fail("num_paths", format!("must be at least 1, got {}", self.num_paths));
        }
        for (field, v) in [
            ("cell_radius_m", self.cell_radius_m),
            ("min_distance_m", self.min_distance_m),
            ("median_gain", self.median_gain),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(field, format!("must be positive, got {v}"));
            }
        }
        for (field, v) in [
            ("angular_spread_deg", self.angular_spread_deg),
            ("pathloss_exponent", self.pathloss_exponent),
            ("path_power_decay", self.path_power_decay),
            ("max_excess_distance_m", self.max_excess_distance_m),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(field, format!("must be non-negative, got {v}"));
            }
        }
        self.solver.validate()
    }

    pub fn num_sectors(&self) -> usize {
        self.num_sectors.unwrap_or(self.n_t)
    }

    /// `P_max` in units of the noise power.
    pub fn p_max(&self) -> f64 {
        10f64.powf(self.p_max_db / 10.0)
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        ArrayConfig::half_wavelength(self.n_t)
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            num_paths: self.num_paths,
            angular_spread: self.angular_spread_deg.to_radians(),
            path_power_decay: self.path_power_decay,
            pathloss_exponent: self.pathloss_exponent,
            cell_radius: self.cell_radius_m,
            min_distance: self.min_distance_m,
            median_gain: self.median_gain,
            max_excess_distance: self.max_excess_distance_m,
        }
    }
}

/// Reads and validates a config file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::from_toml(&text)
}
