//! Orthogonal and single-beam reference schemes.

use crate::channel::nearest_beam;
use crate::clustering::{sector_interval, ClusteredScenario};
use crate::error::{Error, Result};
use crate::rates::{monte_carlo, summarize, BeamDesign, RateReport};

/// Strongest base beam of a UE; ties go to the lower index.
pub fn best_beam(scenario: &ClusteredScenario, ue: usize) -> usize {
    let gains = &scenario.profiles[ue].beam_gains;
    let mut best = 0;
    for (c, g) in gains.iter().enumerate() {
        if *g > gains[best] {
            best = c;
        }
    }
    best
}

/// Base beam whose sampled angle is closest (in sine) to the centre of a sector.
pub fn mf_beam(sector: usize, num_sectors: usize, num_beams: usize) -> usize {
    let (lo, hi) = sector_interval(sector, num_sectors);
    nearest_beam((0.5 * (lo + hi)).sin(), num_beams)
}

fn check_budget(p_max: f64) -> Result<()> {
    if !(p_max > 0.0) || !p_max.is_finite() {
        return Err(Error::Argument(format!("power budget must be positive, got {p_max}")));
    }
    Ok(())
}

/// Each cluster on the base beam pointing at its sector, `P_max / M` per
/// cluster split equally among its UEs.
pub fn baseline_mf(scenario: &ClusteredScenario, p_max: f64) -> Result<BeamDesign> {
    check_budget(p_max)?;
    let nb = scenario.num_beams();
    let mut design = BeamDesign::zeros(scenario.num_ues(), nb, p_max);
    let per_cluster = p_max / scenario.num_clusters() as f64;
    for cluster in &scenario.clusters {
        let c = mf_beam(cluster.sector, scenario.num_sectors, nb);
        let p = per_cluster / cluster.members.len() as f64;
        for &k in &cluster.members {
            design.set(k, c, true, p);
        }
    }
    Ok(design)
}

/// SDMA design and the scenario to evaluate it in (no SIC: every UE is its
/// own cluster).
#[derive(Debug, Clone, PartialEq)]
pub struct SdmaDesign {
    pub design: BeamDesign,
    pub evaluation_scenario: ClusteredScenario,
}

/// Every UE on its best base beam with `P_max / K`, all simultaneous.
pub fn baseline_sdma(scenario: &ClusteredScenario, p_max: f64) -> Result<SdmaDesign> {
    check_budget(p_max)?;
    let k_count = scenario.num_ues();
    let mut design = BeamDesign::zeros(k_count, scenario.num_beams(), p_max);
    for k in 0..k_count {
        design.set(k, best_beam(scenario, k), true, p_max / k_count as f64);
    }
    Ok(SdmaDesign { design, evaluation_scenario: scenario.without_sic() })
}

/// Each UE alone for a `1/K` time share with full power on its best beam.
/// The bound entry holds `(1/K) Σ α log2(1 + P_max η_best)`.
pub fn baseline_tdma(
    scenario: &ClusteredScenario,
    p_max: f64,
    num_realizations: usize,
    seed: u64,
) -> Result<RateReport> {
    check_budget(p_max)?;
    if num_realizations < 1 {
        return Err(Error::Argument("need at least one realization".into()));
    }
    let k_count = scenario.num_ues();
    let share = 1.0 / k_count as f64;
    let best: Vec<usize> = (0..k_count).map(|k| best_beam(scenario, k)).collect();
    let samples = monte_carlo(scenario, num_realizations, seed, |g| {
        (0..k_count).map(|k| share * (1.0 + p_max * g[k][best[k]].norm_sqr()).log2()).collect()
    });
    let bound = (0..k_count)
        .map(|k| scenario.weight(k) * share * (1.0 + p_max * scenario.gain(k, best[k])).log2())
        .sum();
    Ok(summarize(scenario, &samples, bound, seed))
}
