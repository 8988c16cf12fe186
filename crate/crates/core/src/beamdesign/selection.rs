//! Greedy beam-to-cluster assignment.

use crate::clustering::ClusteredScenario;
use crate::error::{Error, Result};

/// Weighted rate of cluster `m` alone on beam `c` under the given per-UE
/// powers (row-major), with only its own stronger UEs interfering.
pub fn beam_cluster_rate(powers: &[f64], scenario: &ClusteredScenario, m: usize, c: usize) -> f64 {
    let nb = scenario.num_beams();
    let mut stronger = 0.0;
    let mut rate = 0.0;
    for &k in &scenario.clusters[m].members {
        let p = powers[k * nb + c];
        let eta = scenario.gain(k, c);
        rate += scenario.weight(k) * (1.0 + p * eta / (stronger * eta + 1.0)).log2();
        stronger += p;
    }
    rate
}

/// Assigns every beam to the cluster with the largest weighted rate on it.
/// Ties go to the lowest cluster index.
pub fn select_beams(powers: &[f64], scenario: &ClusteredScenario) -> Result<Vec<usize>> {
    let n = scenario.num_ues() * scenario.num_beams();
    if powers.len() != n {
        return Err(Error::Dimension { expected: n, actual: powers.len() });
    }
    Ok((0..scenario.num_beams())
        .map(|c| {
            let mut best = (0, f64::NEG_INFINITY);
            for m in 0..scenario.num_clusters() {
                let r = beam_cluster_rate(powers, scenario, m, c);
                if r > best.1 {
                    best = (m, r);
                }
            }
            best.0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{UeId, UeProfile};

    fn scenario(gains: Vec<Vec<f64>>, groups: Vec<Vec<usize>>) -> ClusteredScenario {
        let profiles = gains
            .into_iter()
            .enumerate()
            .map(|(i, g)| UeProfile::new(UeId(i as u32), 0.0, g, 1.0).unwrap())
            .collect();
        let sectors = (0..groups.len()).collect();
        ClusteredScenario::from_ordered(profiles, groups, sectors, 4).unwrap()
    }

    #[test]
    fn stronger_cluster_wins() {
        let s = scenario(vec![vec![3.0], vec![1.0]], vec![vec![0], vec![1]]);
        assert!((beam_cluster_rate(&[1.0, 1.0], &s, 0, 0) - 2.0).abs() < 1e-12);
        assert!((beam_cluster_rate(&[1.0, 1.0], &s, 1, 0) - 1.0).abs() < 1e-12);
        assert_eq!(select_beams(&[1.0, 1.0], &s).unwrap(), vec![0]);
    }

    #[test]
    fn dead_beam_goes_to_first_cluster() {
        let s = scenario(vec![vec![0.0, 1.0], vec![0.0, 2.0]], vec![vec![0], vec![1]]);
        assert_eq!(select_beams(&[1.0; 4], &s).unwrap(), vec![0, 1]);
    }

    #[test]
    fn single_cluster_takes_all() {
        let s = scenario(vec![vec![0.1, 0.0, 5.0], vec![1.0, 0.0, 0.0]], vec![vec![1, 0]]);
        assert_eq!(select_beams(&[1.0; 6], &s).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn intra_cluster_interference_counts() {
        let s = scenario(vec![vec![1.0], vec![1.0]], vec![vec![0, 1]]);
        let expected = 1.0 + (1.0f64 + 1.0 / 2.0).log2();
        assert!((beam_cluster_rate(&[1.0, 1.0], &s, 0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let s = scenario(vec![vec![1.0]], vec![vec![0]]);
        assert!(select_beams(&[1.0, 2.0], &s).is_err());
    }
}
