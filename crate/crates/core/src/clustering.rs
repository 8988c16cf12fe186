//! Angular user clustering and SIC decoding order.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::channel::{UeId, UeProfile};
use crate::error::{Error, Result};

/// Sector boundaries: sector `i` (0-based) covers `[−π/2 + iπ/S, −π/2 + (i+1)π/S)`,
/// the last one closed at `π/2`.
pub fn sector_interval(sector: usize, num_sectors: usize) -> (f64, f64) {
    let width = PI / num_sectors as f64;
    (-FRAC_PI_2 + sector as f64 * width, -FRAC_PI_2 + (sector + 1) as f64 * width)
}

/// 0-based sector containing `aod`.
pub fn sector_of(aod: f64, num_sectors: usize) -> Result<usize> {
    if num_sectors == 0 {
        return Err(Error::Config("num_sectors must be at least 1".into()));
    }
    if !aod.is_finite() || aod.abs() > FRAC_PI_2 + 1e-12 {
        return Err(Error::AngleOutOfRange(aod));
    }
    let aod = aod.clamp(-FRAC_PI_2, FRAC_PI_2);
    let raw = ((aod + FRAC_PI_2) / (PI / num_sectors as f64)).floor() as usize;
    let mut sector = raw.min(num_sectors - 1);
    // Floating-point guard: keep the half-open contract exact at boundaries.
    let (lo, hi) = sector_interval(sector, num_sectors);
    if aod < lo && sector > 0 {
        sector -= 1;
    } else if aod >= hi && sector + 1 < num_sectors {
        sector += 1;
    }
    Ok(sector)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub num_sectors: usize,
    /// Non-empty clusters in ascending sector order.
    pub clusters: Vec<Vec<UeId>>,
    /// Sector index of each cluster.
    pub sector_of_cluster: Vec<usize>,
}

impl ClusterAssignment {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }
}

/// Groups UEs by the angular sector of their dominant AoD; empty sectors are dropped.
pub fn assign_clusters(profiles: &[UeProfile], num_sectors: usize) -> Result<ClusterAssignment> {
    if profiles.is_empty() {
        return Err(Error::Argument("no UEs to cluster".into()));
    }
    let mut by_sector: BTreeMap<usize, Vec<UeId>> = BTreeMap::new();
    for p in profiles {
        by_sector.entry(sector_of(p.aod, num_sectors)?).or_default().push(p.id);
    }
    let (sector_of_cluster, clusters) = by_sector.into_iter().unzip();
    Ok(ClusterAssignment { num_sectors, clusters, sector_of_cluster })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderedCluster {
    /// Strongest first: position `n` still sees interference from positions `< n`.
    pub ue_order: Vec<UeId>,
    pub ordering_gains: Vec<f64>,
}

/// Sorts a cluster by descending ordering gain, ties by ascending id.
pub fn sic_order(cluster: &[UeId], ordering_gains: &HashMap<UeId, f64>) -> Result<OrderedCluster> {
    let mut entries = cluster
        .iter()
        .map(|id| {
            ordering_gains
                .get(id)
                .map(|g| (*id, *g))
                .ok_or_else(|| Error::Argument(format!("no ordering gain for {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let (ue_order, ordering_gains) = entries.into_iter().unzip();
    Ok(OrderedCluster { ue_order, ordering_gains })
}

/// One cluster of a [`ClusteredScenario`], members as indices into the profile list.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub sector: usize,
    /// SIC order, strongest first.
    pub members: Vec<usize>,
}

/// UE profiles together with their clusters and per-cluster SIC order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredScenario {
    pub profiles: Vec<UeProfile>,
    pub clusters: Vec<Cluster>,
    pub num_sectors: usize,
    /// `(cluster, position)` of every UE.
    membership: Vec<(usize, usize)>,
    num_beams: usize,
}

impl ClusteredScenario {
    /// Clusters by sector and orders each cluster by expected gain `tr Λ`.
    pub fn build(profiles: Vec<UeProfile>, num_sectors: usize) -> Result<Self> {
        let assignment = assign_clusters(&profiles, num_sectors)?;
        let gains: HashMap<UeId, f64> = profiles.iter().map(|p| (p.id, p.expected_gain())).collect();
        let index: HashMap<UeId, usize> = profiles.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        if index.len() != profiles.len() {
            return Err(Error::Argument("duplicate UE ids".into()));
        }
        let mut groups = Vec::with_capacity(assignment.num_clusters());
        for ids in &assignment.clusters {
            let ordered = sic_order(ids, &gains)?;
            groups.push(ordered.ue_order.iter().map(|id| index[id]).collect());
        }
        Self::from_ordered(profiles, groups, assignment.sector_of_cluster, num_sectors)
    }

    /// Uses the given groups verbatim as clusters and SIC orders.
    pub fn from_ordered(
        profiles: Vec<UeProfile>,
        groups: Vec<Vec<usize>>,
        sectors: Vec<usize>,
        num_sectors: usize,
    ) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Argument("no UEs".into()));
        }
        let num_beams = profiles[0].num_beams();
        if let Some(p) = profiles.iter().find(|p| p.num_beams() != num_beams) {
            return Err(Error::Dimension { expected: num_beams, actual: p.num_beams() });
        }
        if sectors.len() != groups.len() {
            return Err(Error::Dimension { expected: groups.len(), actual: sectors.len() });
        }
        let mut membership = vec![None; profiles.len()];
        for (m, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::Argument(format!("cluster {m} is empty")));
            }
            for (n, &ue) in g.iter().enumerate() {
                match membership.get_mut(ue) {
                    Some(slot @ None) => *slot = Some((m, n)),
                    Some(Some(_)) => return Err(Error::Argument(format!("UE index {ue} in two clusters"))),
                    None => return Err(Error::Argument(format!("UE index {ue} out of range"))),
                }
            }
        }
        let membership = membership
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| Error::Argument(format!("UE index {i} is unclustered"))))
            .collect::<Result<Vec<_>>>()?;
        let clusters = groups
            .into_iter()
            .zip(sectors)
            .map(|(members, sector)| Cluster { sector, members })
            .collect();
        Ok(Self { profiles, clusters, num_sectors, membership, num_beams })
    }

    /// Every UE in its own cluster: all other UEs are uncancelled interference.
    pub fn without_sic(&self) -> Self {
        let groups = (0..self.num_ues()).map(|k| vec![k]).collect();
        let sectors = (0..self.num_ues()).map(|k| self.clusters[self.membership[k].0].sector).collect();
        Self::from_ordered(self.profiles.clone(), groups, sectors, self.num_sectors)
            .expect("singleton clustering of a valid scenario is valid")
    }

    pub fn num_ues(&self) -> usize {
        self.profiles.len()
    }

    pub fn num_beams(&self) -> usize {
        self.num_beams
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of(&self, ue: usize) -> usize {
        self.membership[ue].0
    }

    pub fn position_of(&self, ue: usize) -> usize {
        self.membership[ue].1
    }

    pub fn index_of(&self, id: UeId) -> Option<usize> {
        self.profiles.iter().position(|p| p.id == id)
    }

    /// Whether `tx`'s signal remains as interference at `rx` after SIC.
    pub fn interferes(&self, tx: usize, rx: usize) -> bool {
        let (mt, nt) = self.membership[tx];
        let (mr, nr) = self.membership[rx];
        mt != mr || nt < nr
    }

    /// Gain `η` of UE `ue` on beam `c`.
    pub fn gain(&self, ue: usize, c: usize) -> f64 {
        self.profiles[ue].beam_gains[c]
    }

    pub fn weight(&self, ue: usize) -> f64 {
        self.profiles[ue].weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn ue(id: u32, aod: f64, gain: f64) -> UeProfile {
        UeProfile::new(UeId(id), aod, vec![gain, 0.0], 1.0).unwrap()
    }

    #[test]
    fn lower_boundary_is_first_sector() {
        assert_eq!(sector_of(-FRAC_PI_2, 4).unwrap(), 0);
    }

    #[test]
    fn broadside_falls_in_third_of_four() {
        assert_eq!(sector_of(0.0, 4).unwrap(), 2);
        let (lo, hi) = sector_interval(2, 4);
        assert_eq!(lo, 0.0);
        assert!((hi - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn top_sector_is_closed() {
        assert_eq!(sector_of(FRAC_PI_2, 4).unwrap(), 3);
        assert_eq!(sector_of(FRAC_PI_4, 4).unwrap(), 3);
    }

    #[test]
    fn out_of_range_angle_is_rejected() {
        assert!(matches!(sector_of(2.0, 4), Err(Error::AngleOutOfRange(_))));
        assert!(sector_of(0.0, 0).is_err());
    }

    #[test]
    fn nearby_ues_share_a_cluster() {
        let a = assign_clusters(&[ue(0, 0.1, 1.0), ue(1, 0.11, 1.0)], 4).unwrap();
        assert_eq!(a.num_clusters(), 1);
        assert_eq!(a.clusters[0], vec![UeId(0), UeId(1)]);
        assert_eq!(a.sector_of_cluster, vec![2]);
    }

    #[test]
    fn empty_sectors_are_dropped() {
        let a = assign_clusters(&[ue(0, -1.5, 1.0), ue(1, 1.5, 1.0), ue(2, -1.4, 1.0)], 8).unwrap();
        assert_eq!(a.num_clusters(), 2);
        assert_eq!(a.clusters[0], vec![UeId(0), UeId(2)]);
        assert_eq!(a.sector_of_cluster, vec![0, 7]);
    }

    #[test]
    fn sic_order_sorts_descending() {
        let gains: HashMap<UeId, f64> = [(UeId(0), 0.5), (UeId(1), 2.0), (UeId(2), 1.0)].into();
        let o = sic_order(&[UeId(0), UeId(1), UeId(2)], &gains).unwrap();
        assert_eq!(o.ue_order, vec![UeId(1), UeId(2), UeId(0)]);
        assert_eq!(o.ordering_gains, vec![2.0, 1.0, 0.5]);
    }

    #[test]
    fn sic_order_single_and_ties() {
        let gains: HashMap<UeId, f64> = [(UeId(3), 1.0), (UeId(1), 1.0)].into();
        assert_eq!(sic_order(&[UeId(3)], &gains).unwrap().ue_order, vec![UeId(3)]);
        assert_eq!(sic_order(&[UeId(3), UeId(1)], &gains).unwrap().ue_order, vec![UeId(1), UeId(3)]);
    }

    #[test]
    fn sic_order_missing_gain() {
        let gains: HashMap<UeId, f64> = [(UeId(0), 1.0)].into();
        assert!(matches!(sic_order(&[UeId(0), UeId(9)], &gains), Err(Error::Argument(_))));
    }

    #[test]
    fn scenario_orders_by_expected_gain() {
        let s = ClusteredScenario::build(vec![ue(0, 0.1, 0.5), ue(1, 0.12, 3.0), ue(2, -1.0, 1.0)], 4).unwrap();
        assert_eq!(s.num_clusters(), 2);
        assert_eq!(s.clusters[1].members, vec![1, 0]);
        assert!(s.interferes(1, 0));
        assert!(!s.interferes(0, 1));
        assert!(s.interferes(2, 0) && s.interferes(0, 2));
        let flat = s.without_sic();
        assert_eq!(flat.num_clusters(), 3);
        assert!(flat.interferes(0, 1) && flat.interferes(1, 0));
    }

    #[test]
    fn from_ordered_rejects_bad_partitions() {
        let ps = vec![ue(0, 0.0, 1.0), ue(1, 0.0, 1.0)];
        assert!(ClusteredScenario::from_ordered(ps.clone(), vec![vec![0]], vec![0], 2).is_err());
        assert!(ClusteredScenario::from_ordered(ps.clone(), vec![vec![0, 1], vec![1]], vec![0, 1], 2).is_err());
        assert!(ClusteredScenario::from_ordered(ps.clone(), vec![vec![0, 1], vec![]], vec![0, 1], 2).is_err());
        assert!(ClusteredScenario::from_ordered(ps, vec![vec![1, 0]], vec![0], 2).is_ok());
    }
}
