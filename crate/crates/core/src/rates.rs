//! Rate evaluation for a beam design: instantaneous SINR after SIC, Monte
//! Carlo ergodic rates, the per-beam closed-form upper bound and its
//! interference-limited limit, plus the scalar MMSE/MSE relations the
//! solvers are built on.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{BeamspaceBasis, ChannelVector, SmallScaleFading, UeId};
use crate::clustering::ClusteredScenario;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Relative slack allowed on the total power constraint.
pub const BUDGET_SLACK: f64 = 1e-6;

/// Beam selection indicators and per-beam powers of every UE (row-major,
/// one row of `num_beams` entries per UE in scenario order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamDesign {
    num_ues: usize,
    num_beams: usize,
    pub selection: Vec<bool>,
    pub powers: Vec<f64>,
    pub power_budget: f64,
}

impl BeamDesign {
    pub fn zeros(num_ues: usize, num_beams: usize, power_budget: f64) -> Self {
        Self {
            num_ues,
            num_beams,
            selection: vec![false; num_ues * num_beams],
            powers: vec![0.0; num_ues * num_beams],
            power_budget,
        }
    }

    pub fn from_parts(
        num_ues: usize,
        num_beams: usize,
        selection: Vec<bool>,
        powers: Vec<f64>,
        power_budget: f64,
    ) -> Result<Self> {
        let n = num_ues * num_beams;
        if selection.len() != n {
            return Err(Error::Dimension { expected: n, actual: selection.len() });
        }
        if powers.len() != n {
            return Err(Error::Dimension { expected: n, actual: powers.len() });
        }
        if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Argument("powers must be finite and non-negative".into()));
        }
        if !(power_budget > 0.0) {
            return Err(Error::Argument(format!("power budget must be positive, got {power_budget}")));
        }
        Ok(Self { num_ues, num_beams, selection, powers, power_budget })
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_beams(&self) -> usize {
        self.num_beams
    }

    fn idx(&self, ue: usize, beam: usize) -> usize {
        ue * self.num_beams + beam
    }

    pub fn selected(&self, ue: usize, beam: usize) -> bool {
        self.selection[self.idx(ue, beam)]
    }

    pub fn power(&self, ue: usize, beam: usize) -> f64 {
        self.powers[self.idx(ue, beam)]
    }

    /// `s·p` for one UE and beam.
    pub fn effective_power(&self, ue: usize, beam: usize) -> f64 {
        let i = self.idx(ue, beam);
        if self.selection[i] {
            self.powers[i]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, ue: usize, beam: usize, selected: bool, power: f64) {
        let i = self.idx(ue, beam);
        self.selection[i] = selected;
        self.powers[i] = power;
    }

    /// `Σ s·p` over every UE and beam.
    pub fn total_power(&self) -> f64 {
        self.selection.iter().zip(&self.powers).filter(|(s, _)| **s).map(|(_, p)| p).sum()
    }

    /// Budget constraint with the crate-wide relative slack.
    pub fn within_budget(&self) -> bool {
        self.total_power() <= self.power_budget * (1.0 + BUDGET_SLACK)
    }

    /// Every beam serves UEs of at most one cluster.
    pub fn beams_exclusive(&self, scenario: &ClusteredScenario) -> bool {
        (0..self.num_beams).all(|c| {
            let mut owner = None;
            (0..self.num_ues).filter(|&k| self.selected(k, c)).all(|k| {
                let m = scenario.cluster_of(k);
                *owner.get_or_insert(m) == m
            })
        })
    }

    /// Transmit beam `w = U P^{1/2} s` of one UE in the antenna domain.
    pub fn transmit_beam(&self, ue: usize, basis: &BeamspaceBasis) -> Result<Vec<Complex64>> {
        let amps: Vec<Complex64> =
            (0..self.num_beams).map(|c| Complex64::new(self.effective_power(ue, c).sqrt(), 0.0)).collect();
        basis.from_beamspace(&amps)
    }

    /// The same selection with every power multiplied by `factor` and the budget rescaled.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            powers: self.powers.iter().map(|p| p * factor).collect(),
            power_budget: self.power_budget * factor,
            ..self.clone()
        }
    }

    fn check_scenario(&self, scenario: &ClusteredScenario) -> Result<()> {
        if self.num_ues != scenario.num_ues() {
            return Err(Error::Dimension { expected: scenario.num_ues(), actual: self.num_ues });
        }
        if self.num_beams != scenario.num_beams() {
            return Err(Error::Dimension { expected: scenario.num_beams(), actual: self.num_beams });
        }
        Ok(())
    }
}

/// Monte Carlo rate summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub per_ue_rates: Vec<(UeId, f64)>,
    pub weighted_sum_rate: f64,
    /// Standard error of the weighted-sum-rate estimate.
    pub sum_rate_stderr: f64,
    pub upper_bound: f64,
    pub num_realizations: usize,
    pub rng_seed: u64,
}

/// Per-UE SINR for one fading realization, given beamspace channels
/// `g_k = Λ_k^{1/2} h̄_k = Uᴴ h_k`. Which UEs interfere follows the
/// scenario's cluster and SIC structure.
fn sinrs_from_beamspace(
    sqrt_powers: &[f64],
    scenario: &ClusteredScenario,
    support: &[Vec<usize>],
    g: &[Vec<Complex64>],
) -> Vec<f64> {
    let k_count = scenario.num_ues();
    let nb = scenario.num_beams();
    let mut out = Vec::with_capacity(k_count);
    for rx in 0..k_count {
        let gk = &g[rx];
        let mut desired = 0.0;
        let mut interference = 0.0;
        for tx in 0..k_count {
            let row = &sqrt_powers[tx * nb..(tx + 1) * nb];
            let amp: Complex64 = support[rx].iter().map(|&c| gk[c].conj() * row[c]).sum();
            if tx == rx {
                desired = amp.norm_sqr();
            } else if scenario.interferes(tx, rx) {
                interference += amp.norm_sqr();
            }
        }
        out.push(desired / (interference + 1.0));
    }
    out
}

fn sqrt_power_table(design: &BeamDesign) -> Vec<f64> {
    (0..design.num_ues())
        .flat_map(|k| (0..design.num_beams()).map(move |c| (k, c)))
        .map(|(k, c)| design.effective_power(k, c).sqrt())
        .collect()
}

fn gain_support(scenario: &ClusteredScenario) -> Vec<Vec<usize>> {
    scenario
        .profiles
        .iter()
        .map(|p| p.beam_gains.iter().enumerate().filter(|(_, g)| **g > 0.0).map(|(c, _)| c).collect())
        .collect()
}

/// Instantaneous rates `log2(1 + γ)` of all UEs from their beamspace channels.
pub fn instantaneous_rates_beamspace(
    design: &BeamDesign,
    scenario: &ClusteredScenario,
    channels: &[Vec<Complex64>],
) -> Result<Vec<f64>> {
    design.check_scenario(scenario)?;
    if channels.len() != scenario.num_ues() {
        return Err(Error::Dimension { expected: scenario.num_ues(), actual: channels.len() });
    }
    if let Some(g) = channels.iter().find(|g| g.len() != scenario.num_beams()) {
        return Err(Error::Dimension { expected: scenario.num_beams(), actual: g.len() });
    }
    let support: Vec<Vec<usize>> = (0..scenario.num_ues()).map(|_| (0..scenario.num_beams()).collect()).collect();
    let sinr = sinrs_from_beamspace(&sqrt_power_table(design), scenario, &support, channels);
    Ok(sinr.into_iter().map(|g| (1.0 + g).log2()).collect())
}

/// Instantaneous rate of one UE from antenna-domain channels of every UE.
/// Evaluated in the beamspace domain through `Uᴴh`.
pub fn instantaneous_rate(
    design: &BeamDesign,
    channels: &[ChannelVector],
    basis: &BeamspaceBasis,
    scenario: &ClusteredScenario,
    ue: UeId,
) -> Result<f64> {
    let k = scenario.index_of(ue).ok_or_else(|| Error::Argument(format!("{ue} is not in the scenario")))?;
    let g = channels.iter().map(|h| basis.to_beamspace(&h.h)).collect::<Result<Vec<_>>>()?;
    Ok(instantaneous_rates_beamspace(design, scenario, &g)?[k])
}

/// Fading draw of realization `index`: one `N_t` vector per UE, in UE order.
pub fn draw_fading(seed: u64, index: u64, num_ues: usize, num_beams: usize) -> Vec<SmallScaleFading> {
    let mut rng = stream(seed, Domain::Fading, index);
    (0..num_ues).map(|_| SmallScaleFading::draw(&mut rng, num_beams)).collect()
}

/// Per-realization per-UE values of `f` over `num_realizations` fading draws.
/// `f` receives the beamspace channels of every UE. Output is in realization
/// order regardless of scheduling.
pub fn monte_carlo<F>(
    scenario: &ClusteredScenario,
    num_realizations: usize,
    seed: u64,
    f: F,
) -> Vec<Vec<f64>>
where
    F: Fn(&[Vec<Complex64>]) -> Vec<f64> + Sync,
{
    let nb = scenario.num_beams();
    (0..num_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let fading = draw_fading(seed, r, scenario.num_ues(), nb);
            let g: Vec<Vec<Complex64>> = scenario
                .profiles
                .iter()
                .zip(&fading)
                .map(|(p, f)| p.beam_gains.iter().zip(&f.coeffs).map(|(e, h)| h * e.sqrt()).collect())
                .collect();
            f(&g)
        })
        .collect()
}

/// Averages per-realization per-UE rates into a report.
pub fn summarize(
    scenario: &ClusteredScenario,
    samples: &[Vec<f64>],
    upper_bound: f64,
    seed: u64,
) -> RateReport {
    let r = samples.len();
    let k = scenario.num_ues();
    let mut means = vec![0.0; k];
    let mut weighted = Vec::with_capacity(r);
    for s in samples {
        let mut w = 0.0;
        for (i, v) in s.iter().enumerate() {
            means[i] += v;
            w += scenario.weight(i) * v;
        }
        weighted.push(w);
    }
    for m in &mut means {
        *m /= r as f64;
    }
    let (mean, stderr) = mean_and_stderr(&weighted);
    let per_ue_rates: Vec<(UeId, f64)> = scenario.profiles.iter().map(|p| p.id).zip(means).collect();
    let weighted_sum_rate: f64 = per_ue_rates.iter().zip(&scenario.profiles).map(|((_, v), p)| p.weight * v).sum();
    debug_assert!((weighted_sum_rate - mean).abs() <= 1e-9 * mean.abs().max(1.0));
    RateReport {
        per_ue_rates,
        weighted_sum_rate,
        sum_rate_stderr: stderr,
        upper_bound,
        num_realizations: r,
        rng_seed: seed,
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of the weighted sum of ergodic rates.
pub fn ergodic_weighted_sum_rate(
    design: &BeamDesign,
    scenario: &ClusteredScenario,
    num_realizations: usize,
    seed: u64,
) -> Result<RateReport> {
    design.check_scenario(scenario)?;
    if num_realizations < 1 {
        return Err(Error::Argument("need at least one realization".into()));
    }
    let sqrt_powers = sqrt_power_table(design);
    let support = gain_support(scenario);
    let samples = monte_carlo(scenario, num_realizations, seed, |g| {
        sinrs_from_beamspace(&sqrt_powers, scenario, &support, g)
            .into_iter()
            .map(|s| (1.0 + s).log2())
            .collect()
    });
    Ok(summarize(scenario, &samples, upper_bound(design, scenario)?, seed))
}

/// Per-beam SINR `γ_{k,c}` of the equivalent orthogonal-resource model for
/// every UE and beam (row-major), built from per-beam running totals.
pub fn per_beam_sinrs(design: &BeamDesign, scenario: &ClusteredScenario) -> Result<Vec<f64>> {
    design.check_scenario(scenario)?;
    let nb = scenario.num_beams();
    let mut out = vec![0.0; scenario.num_ues() * nb];
    for c in 0..nb {
        let total: f64 = (0..scenario.num_ues()).map(|k| design.effective_power(k, c)).sum();
        for cluster in &scenario.clusters {
            let own: f64 = cluster.members.iter().map(|&k| design.effective_power(k, c)).sum();
            let inter = (total - own).max(0.0);
            let mut stronger = 0.0;
            for &k in &cluster.members {
                let p = design.effective_power(k, c);
                let eta = scenario.gain(k, c);
                out[k * nb + c] = p * eta / ((inter + stronger) * eta + 1.0);
                stronger += p;
            }
        }
    }
    Ok(out)
}

/// Closed-form upper bound on the weighted sum of ergodic rates:
/// `Σ_k Σ_c α_k log2(1 + γ_{k,c})`.
pub fn upper_bound(design: &BeamDesign, scenario: &ClusteredScenario) -> Result<f64> {
    let nb = scenario.num_beams();
    let sinr = per_beam_sinrs(design, scenario)?;
    Ok(sinr
        .chunks(nb)
        .enumerate()
        .map(|(k, row)| scenario.weight(k) * row.iter().map(|g| (1.0 + g).log2()).sum::<f64>())
        .sum())
}

/// Per-beam SINR of one UE on one beam, evaluated term by term.
pub fn equivalent_beam_sinr(
    design: &BeamDesign,
    scenario: &ClusteredScenario,
    ue: usize,
    beam: usize,
) -> Result<f64> {
    design.check_scenario(scenario)?;
    if ue >= scenario.num_ues() || beam >= scenario.num_beams() {
        return Err(Error::Argument(format!("no UE {ue} / beam {beam} in scenario")));
    }
    if !design.selected(ue, beam) {
        return Ok(0.0);
    }
    let eta = scenario.gain(ue, beam);
    let interference: f64 = (0..scenario.num_ues())
        .filter(|&j| j != ue && scenario.interferes(j, ue))
        .map(|j| design.effective_power(j, beam) * eta)
        .sum();
    Ok(design.effective_power(ue, beam) * eta / (interference + 1.0))
}

/// Interference-limited bound with noise dropped. Terms whose interference
/// vanishes while carrying signal have no finite value and are listed in
/// `unbounded`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturatedBound {
    pub finite: f64,
    /// `(ue, beam)` pairs with zero interference and positive signal.
    pub unbounded: Vec<(usize, usize)>,
}

impl SaturatedBound {
    pub fn is_bounded(&self) -> bool {
        self.unbounded.is_empty()
    }

    pub fn value(&self) -> f64 {
        if self.is_bounded() {
            self.finite
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates the noise-free bound for power fractions given as a design
/// (only ratios matter, so the scale of `powers` is irrelevant).
pub fn saturated_bound(fractions: &BeamDesign, scenario: &ClusteredScenario) -> Result<SaturatedBound> {
    fractions.check_scenario(scenario)?;
    let nb = scenario.num_beams();
    let mut finite = 0.0;
    let mut unbounded = Vec::new();
    for c in 0..nb {
        let total: f64 = (0..scenario.num_ues()).map(|k| fractions.effective_power(k, c)).sum();
        for cluster in &scenario.clusters {
            let own: f64 = cluster.members.iter().map(|&k| fractions.effective_power(k, c)).sum();
            let inter = (total - own).max(0.0);
            let mut stronger = 0.0;
            for &k in &cluster.members {
                let nu = fractions.effective_power(k, c);
                let interference = inter + stronger;
                stronger += nu;
                if nu == 0.0 || scenario.gain(k, c) == 0.0 {
                    continue;
                }
                if interference == 0.0 {
                    unbounded.push((k, c));
                } else {
                    finite += scenario.weight(k) * (1.0 + nu / interference).log2();
                }
            }
        }
    }
    Ok(SaturatedBound { finite, unbounded })
}

/// MMSE receiver of a scalar equivalent link and its MSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mmse {
    /// Received power `Φ = η (I + p) + 1`.
    pub received_power: f64,
    pub receiver: f64,
    pub mse: f64,
}

impl Mmse {
    /// SINR implied by the MSE, `1/mse − 1`.
    pub fn sinr(&self) -> f64 {
        1.0 / self.mse - 1.0
    }
}

/// `Φ = η(I + p) + 1`, `v = √(ηp)/Φ`, `mse = 1 − ηp/Φ`, evaluated as
/// `(ηI + 1)/Φ` to avoid cancellation at high SINR.
pub fn mmse_receiver_and_mse(power: f64, gain: f64, interference_power: f64) -> Mmse {
    let phi = gain * (interference_power + power) + 1.0;
    let signal = gain * power;
    Mmse { received_power: phi, receiver: signal.sqrt() / phi, mse: (gain * interference_power + 1.0) / phi }
}

/// MSE of a fixed scalar receiver `v` on the same link.
pub fn mse_with_receiver(receiver: f64, power: f64, gain: f64, interference_power: f64) -> f64 {
    let phi = gain * (interference_power + power) + 1.0;
    receiver * phi * receiver - 2.0 * (gain * power).sqrt() * receiver + 1.0
}
