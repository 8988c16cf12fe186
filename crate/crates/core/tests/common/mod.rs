#![allow(dead_code)]

use beamspace::channel::{UeId, UeProfile};
use beamspace::clustering::ClusteredScenario;
use beamspace::rates::BeamDesign;
use rand::Rng;

/// Scenario from explicit gains, with clusters given in SIC order.
pub fn scenario(gains: Vec<Vec<f64>>, groups: Vec<Vec<usize>>) -> ClusteredScenario {
    weighted_scenario(gains, groups, None)
}

pub fn weighted_scenario(gains: Vec<Vec<f64>>, groups: Vec<Vec<usize>>, weights: Option<Vec<f64>>) -> ClusteredScenario {
    let num_sectors = gains[0].len().max(groups.len());
    let profiles = gains
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let w = weights.as_ref().map_or(1.0, |w| w[i]);
            UeProfile::new(UeId(i as u32), 0.0, g, w).unwrap()
        })
        .collect();
    let sectors = (0..groups.len()).collect();
    ClusteredScenario::from_ordered(profiles, groups, sectors, num_sectors).unwrap()
}

/// Random gains in `[0, 1)` with a random partition into SIC-ordered clusters.
pub fn random_scenario<R: Rng>(rng: &mut R, num_ues: usize, num_beams: usize, num_clusters: usize) -> ClusteredScenario {
    let gains: Vec<Vec<f64>> =
        (0..num_ues).map(|_| (0..num_beams).map(|_| rng.random::<f64>() + 1e-3).collect()).collect();
    let mut groups = vec![Vec::new(); num_clusters];
    for k in 0..num_ues {
        let m = if k < num_clusters { k } else { rng.random_range(0..num_clusters) };
        groups[m].push(k);
    }
    scenario(gains, groups)
}

/// Random feasible design: each pair selected with probability 1/2, powers
/// uniform then scaled to a random fraction of the budget.
pub fn random_design<R: Rng>(rng: &mut R, scenario: &ClusteredScenario, p_max: f64) -> BeamDesign {
    let (k, nb) = (scenario.num_ues(), scenario.num_beams());
    let mut design = BeamDesign::zeros(k, nb, p_max);
    for ue in 0..k {
        for c in 0..nb {
            design.set(ue, c, rng.random_bool(0.5), rng.random::<f64>());
        }
    }
    let total = design.total_power();
    if total > 0.0 {
        let scale = p_max * rng.random_range(0.2..=1.0) / total;
        design = BeamDesign::from_parts(
            k,
            nb,
            design.selection.clone(),
            design.powers.iter().map(|p| p * scale).collect(),
            p_max,
        )
        .unwrap();
    }
    design
}

/// Every pair with positive gain selected, budget split equally.
pub fn uniform_design(scenario: &ClusteredScenario, p_max: f64) -> BeamDesign {
    let (k, nb) = (scenario.num_ues(), scenario.num_beams());
    let active: Vec<bool> = (0..k).flat_map(|ue| (0..nb).map(move |c| (ue, c))).map(|(ue, c)| scenario.gain(ue, c) > 0.0).collect();
    let n = active.iter().filter(|a| **a).count() as f64;
    let powers = active.iter().map(|a| if *a { p_max / n } else { 0.0 }).collect();
    BeamDesign::from_parts(k, nb, active, powers, p_max).unwrap()
}
