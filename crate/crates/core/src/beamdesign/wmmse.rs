//! Multi-beam WMMSE power allocation over a fixed beam selection.
//!
//! Every selected (UE, beam) pair is treated as a scalar link whose
//! interference comes from the same beam: all UEs of other clusters and the
//! stronger UEs of its own cluster. For fixed receivers `v` and weights `β`
//! the surrogate is separable in the powers, and its constrained minimiser is
//! `p = (b / (a + μ))²` with
//!
//! * `b_{k,c} = α_k β_{k,c} v_{k,c} √η_{k,c}`
//! * `a_{k,c} = Σ_j α_j β_{j,c} v_{j,c}² η_{j,c}` over `j = k` and every `j`
//!   that `k` interferes with (other clusters, weaker UEs of its cluster).

use crate::clustering::ClusteredScenario;
use crate::error::{Error, Result};
use crate::rates::{mmse_receiver_and_mse, BeamDesign};

use super::multiplier::{Floor, Search};
use super::selection::select_beams;
use super::{objectives, record_iteration, relative_change, Solution, SolverConfig, SolverTrace};

/// Receivers, weights and MSEs at the MMSE point of a power allocation.
/// Inactive pairs keep `v = 0`, `β = 1`, `mse = 1`.
pub(crate) struct LinkState {
    pub receiver: Vec<f64>,
    pub weight: Vec<f64>,
    pub mse: Vec<f64>,
}

pub(crate) struct Problem<'a> {
    scenario: &'a ClusteredScenario,
    /// Selected (UE, beam) pairs, row-major.
    active: Vec<bool>,
    /// Per beam, per cluster: active members in SIC order.
    groups: Vec<Vec<Vec<usize>>>,
    active_idx: Vec<usize>,
    power_budget: f64,
    config: SolverConfig,
}

impl<'a> Problem<'a> {
    pub fn new(scenario: &'a ClusteredScenario, active: Vec<bool>, power_budget: f64, config: SolverConfig) -> Self {
        let nb = scenario.num_beams();
        let groups = (0..nb)
            .map(|c| {
                scenario
                    .clusters
                    .iter()
                    .map(|cl| cl.members.iter().copied().filter(|&k| active[k * nb + c]).collect::<Vec<_>>())
                    .filter(|g| !g.is_empty())
                    .collect()
            })
            .collect();
        let active_idx = active.iter().enumerate().filter(|(_, a)| **a).map(|(i, _)| i).collect();
        Self { scenario, active, groups, active_idx, power_budget, config }
    }

    fn nb(&self) -> usize {
        self.scenario.num_beams()
    }

    pub fn num_active(&self) -> usize {
        self.active_idx.len()
    }

    pub fn into_active(self) -> Vec<bool> {
        self.active
    }

    /// MMSE receivers and weights of every active pair; each beam's
    /// interference comes from running sums over its active groups.
    pub fn link_state(&self, powers: &[f64], ops: &mut u64) -> LinkState {
        let s = self.scenario;
        let nb = self.nb();
        let n = powers.len();
        let mut st = LinkState { receiver: vec![0.0; n], weight: vec![1.0; n], mse: vec![1.0; n] };
        for (c, groups) in self.groups.iter().enumerate() {
            let sums: Vec<f64> = groups.iter().map(|g| g.iter().map(|&k| powers[k * nb + c]).sum()).collect();
            let total: f64 = sums.iter().sum();
            for (g, own) in groups.iter().zip(&sums) {
                let mut stronger = 0.0;
                for &k in g {
                    let i = k * nb + c;
                    let m = mmse_receiver_and_mse(powers[i], s.gain(k, c), (total - own).max(0.0) + stronger);
                    st.receiver[i] = m.receiver;
                    st.mse[i] = m.mse;
                    st.weight[i] = 1.0 / m.mse;
                    stronger += powers[i];
                }
            }
        }
        *ops += self.num_active() as u64;
        st
    }

    /// Closed-form numerators `b` and denominators `a` of the power update.
    fn update_terms(&self, st: &LinkState, ops: &mut u64) -> (Vec<f64>, Vec<f64>) {
        let s = self.scenario;
        let nb = self.nb();
        let n = st.receiver.len();
        let mut num = vec![0.0; n];
        let mut den = vec![0.0; n];
        let mut load = vec![0.0; n];
        for &i in &self.active_idx {
            let (k, c) = (i / nb, i % nb);
            let alpha = s.weight(k);
            let eta = s.gain(k, c);
            let v = st.receiver[i];
            num[i] = alpha * st.weight[i] * v * eta.sqrt();
            load[i] = alpha * st.weight[i] * v * v * eta;
        }
        for (c, groups) in self.groups.iter().enumerate() {
            let sums: Vec<f64> = groups.iter().map(|g| g.iter().map(|&k| load[k * nb + c]).sum()).collect();
            let total: f64 = sums.iter().sum();
            for (g, own) in groups.iter().zip(&sums) {
                let mut weaker = 0.0;
                for &k in g.iter().rev() {
                    let i = k * nb + c;
                    weaker += load[i];
                    den[i] = (total - own).max(0.0) + weaker;
                }
            }
        }
        *ops += 2 * self.num_active() as u64;
        (num, den)
    }

    fn powers_at(&self, num: &[f64], den: &[f64], mu: f64, out: &mut [f64]) {
        for &i in &self.active_idx {
            out[i] = if num[i] > 0.0 && den[i] + mu > 0.0 { (num[i] / (den[i] + mu)).powi(2) } else { 0.0 };
        }
    }

    /// One outer iteration: MMSE receivers and weights at `powers`, then the
    /// budget-constrained power update. Returns the new powers and the
    /// multiplier steps used.
    pub fn step(&self, powers: &[f64], ops: &mut u64) -> (Vec<f64>, usize) {
        let st = self.link_state(powers, ops);
        let (num, den) = self.update_terms(&st, ops);
        let mut out = vec![0.0; powers.len()];
        let search = Search {
            initial: self.config.initial_multiplier,
            step: self.config.step_mu,
            tol: self.config.multiplier_tol * self.power_budget,
            max_iters: self.config.max_inner_iters,
            floor: Floor::Inclusive(0.0),
        };
        let outcome = search.run(self.power_budget, |mu| {
            *ops += self.num_active() as u64;
            self.powers_at(&num, &den, mu, &mut out);
            out.iter().sum()
        });
        self.powers_at(&num, &den, outcome.multiplier, &mut out);
        let total: f64 = out.iter().sum();
        if total > self.power_budget {
            let shrink = self.power_budget / total;
            out.iter_mut().for_each(|p| *p *= shrink);
        }
        (out, outcome.iters)
    }

    /// Surrogate and rate objective at `powers`.
    pub fn objectives(&self, powers: &[f64]) -> (f64, f64) {
        let weights: Vec<f64> = (0..self.scenario.num_ues()).map(|k| self.scenario.weight(k)).collect();
        let st = self.link_state(powers, &mut 0);
        objectives(&weights, &st.mse, self.nb())
    }

    pub fn initial_trace(&self, powers: &[f64], num_variables: usize) -> SolverTrace {
        let (initial_surrogate, initial_rate_bound) = self.objectives(powers);
        SolverTrace { initial_surrogate, initial_rate_bound, num_variables, ..Default::default() }
    }

    /// Alternating optimisation from `initial` until the objective settles.
    pub fn solve(&self, initial: Vec<f64>) -> (Vec<f64>, SolverTrace) {
        let mut trace = self.initial_trace(&initial, self.num_active());
        let mut powers = initial;
        for _ in 0..self.config.max_outer_iters {
            let (next, inner) = self.step(&powers, &mut trace.op_count);
            let change = relative_change(&powers, &next);
            powers = next;
            let usage = powers.iter().sum::<f64>() / self.power_budget;
            if record_iteration(&mut trace, &self.config, self.objectives(&powers), change, usage, inner) {
                break;
            }
        }
        (powers, trace)
    }
}

pub(crate) fn check_inputs(scenario: &ClusteredScenario, config: &SolverConfig, p_max: f64) -> Result<()> {
    config.validate()?;
    if !(p_max > 0.0) || !p_max.is_finite() {
        return Err(Error::Argument(format!("power budget must be positive, got {p_max}")));
    }
    if scenario.num_ues() == 0 {
        return Err(Error::Argument("empty scenario".into()));
    }
    Ok(())
}

fn into_design(scenario: &ClusteredScenario, active: Vec<bool>, powers: Vec<f64>, p_max: f64) -> Result<BeamDesign> {
    BeamDesign::from_parts(scenario.num_ues(), scenario.num_beams(), active, powers, p_max)
}

/// Full-space multi-beam design: every UE may use every base beam.
pub fn solve_full_space(scenario: &ClusteredScenario, config: &SolverConfig, p_max: f64) -> Result<Solution> {
    check_inputs(scenario, config, p_max)?;
    let n = scenario.num_ues() * scenario.num_beams();
    let problem = Problem::new(scenario, vec![true; n], p_max, *config);
    let (powers, trace) = problem.solve(vec![p_max / n as f64; n]);
    Ok(Solution { design: into_design(scenario, problem.into_active(), powers, p_max)?, trace })
}

/// Initial per-UE powers `P_max / (N_m N_t)` on every beam.
pub(crate) fn cluster_uniform_powers(scenario: &ClusteredScenario, p_max: f64) -> Vec<f64> {
    let nb = scenario.num_beams();
    let mut powers = vec![0.0; scenario.num_ues() * nb];
    for cluster in &scenario.clusters {
        let p = p_max / (cluster.members.len() * nb) as f64;
        for &k in &cluster.members {
            powers[k * nb..(k + 1) * nb].fill(p);
        }
    }
    powers
}

/// Selection mask giving every beam to the UEs of its assigned cluster.
pub(crate) fn mask_from_assignment(scenario: &ClusteredScenario, owner: &[usize]) -> Vec<bool> {
    let nb = scenario.num_beams();
    let mut active = vec![false; scenario.num_ues() * nb];
    for (c, &m) in owner.iter().enumerate() {
        for &k in &scenario.clusters[m].members {
            active[k * nb + c] = true;
        }
    }
    active
}

/// Partial-space multi-beam design: beams are first partitioned among
/// clusters, then powers are optimised per UE on its cluster's beams.
pub fn solve_partial_space(scenario: &ClusteredScenario, config: &SolverConfig, p_max: f64) -> Result<Solution> {
    check_inputs(scenario, config, p_max)?;
    let candidate = cluster_uniform_powers(scenario, p_max);
    let owner = select_beams(&candidate, scenario)?;
    let active = mask_from_assignment(scenario, &owner);
    let initial: Vec<f64> = candidate.iter().zip(&active).map(|(p, a)| if *a { *p } else { 0.0 }).collect();
    let problem = Problem::new(scenario, active, p_max, *config);
    let (powers, trace) = problem.solve(initial);
    Ok(Solution { design: into_design(scenario, problem.into_active(), powers, p_max)?, trace })
}
