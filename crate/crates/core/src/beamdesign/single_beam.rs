//! Single-beam design: every cluster transmits one shared beam built from
//! its assigned base beams, and each UE receives a fraction `ι` of it.
//!
//! With `p_{k,c} = ι_k p_c` the surrogate is minimised block-wise: beam
//! powers `p_c` under `Σ p_c ≤ P_max`, then per-cluster fractions under
//! `Σ ι = 1`, each in closed form up to its multiplier.

use crate::clustering::ClusteredScenario;
use crate::error::Result;
use crate::rates::BeamDesign;

use super::multiplier::{Floor, Search};
use super::selection::select_beams;
use super::wmmse::{check_inputs, cluster_uniform_powers, mask_from_assignment, LinkState, Problem};
use super::{record_iteration, relative_change, Solution, SolverConfig, SolverTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct SingleBeamSolution {
    pub design: BeamDesign,
    pub trace: SolverTrace,
    /// Power `p_c` of every base beam.
    pub beam_powers: Vec<f64>,
    /// Fraction `ι` of its cluster beam received by every UE.
    pub fractions: Vec<f64>,
    /// Cluster owning each base beam.
    pub beam_owner: Vec<usize>,
}

impl SingleBeamSolution {
    pub fn into_solution(self) -> Solution {
        Solution { design: self.design, trace: self.trace }
    }
}

struct State<'a> {
    scenario: &'a ClusteredScenario,
    config: SolverConfig,
    p_max: f64,
    owner: Vec<usize>,
    beams_of: Vec<Vec<usize>>,
}

impl State<'_> {
    fn per_ue(&self, pc: &[f64], iota: &[f64]) -> Vec<f64> {
        let nb = self.scenario.num_beams();
        let mut p = vec![0.0; self.scenario.num_ues() * nb];
        for (c, &m) in self.owner.iter().enumerate() {
            for &k in &self.scenario.clusters[m].members {
                p[k * nb + c] = iota[k] * pc[c];
            }
        }
        p
    }

    /// `α β v² η` and `α β v √η` of one pair.
    fn coeffs(&self, st: &LinkState, k: usize, c: usize) -> (f64, f64) {
        let i = k * self.scenario.num_beams() + c;
        let ab = self.scenario.weight(k) * st.weight[i];
        let eta = self.scenario.gain(k, c);
        let v = st.receiver[i];
        (ab * v * v * eta, ab * v * eta.sqrt())
    }

    /// Beam powers for fixed fractions, receivers and weights.
    fn beam_block(&self, st: &LinkState, iota: &[f64], ops: &mut u64) -> (Vec<f64>, usize) {
        let nb = self.scenario.num_beams();
        let mut num = vec![0.0; nb];
        let mut den = vec![0.0; nb];
        for (c, &m) in self.owner.iter().enumerate() {
            let mut cumulative = 0.0;
            for &k in &self.scenario.clusters[m].members {
                cumulative += iota[k];
                let (load, gain) = self.coeffs(st, k, c);
                num[c] += gain * iota[k].sqrt();
                den[c] += load * cumulative;
                *ops += 1;
            }
        }
        let at = |mu: f64, c: usize| {
            if num[c] > 0.0 && den[c] + mu > 0.0 {
                (num[c] / (den[c] + mu)).powi(2)
            } else {
                0.0
            }
        };
        let search = Search {
            initial: self.config.initial_multiplier,
            step: self.config.step_mu2,
            tol: self.config.multiplier_tol * self.p_max,
            max_iters: self.config.max_inner_iters,
            floor: Floor::Inclusive(0.0),
        };
        let outcome = search.run(self.p_max, |mu| {
            *ops += nb as u64;
            (0..nb).map(|c| at(mu, c)).sum()
        });
        let mut pc: Vec<f64> = (0..nb).map(|c| at(outcome.multiplier, c)).collect();
        let total: f64 = pc.iter().sum();
        if total > self.p_max {
            pc.iter_mut().for_each(|p| *p *= self.p_max / total);
        }
        (pc, outcome.iters)
    }

    /// Fractions of one cluster for fixed beam powers, receivers and weights.
    fn fraction_block(&self, st: &LinkState, pc: &[f64], m: usize, iota: &mut [f64], ops: &mut u64) -> usize {
        let members = &self.scenario.clusters[m].members;
        if members.len() == 1 {
            iota[members[0]] = 1.0;
            return 0;
        }
        let mut num = vec![0.0; members.len()];
        let mut den = vec![0.0; members.len()];
        for &c in &self.beams_of[m] {
            let mut weaker = 0.0;
            for (n, &k) in members.iter().enumerate().rev() {
                let (load, gain) = self.coeffs(st, k, c);
                weaker += load;
                num[n] += gain * pc[c].sqrt();
                den[n] += pc[c] * weaker;
                *ops += 1;
            }
        }
        let (fractions, iters) = solve_fractions(&num, &den, &self.config, ops);
        for (&k, r) in members.iter().zip(fractions) {
            iota[k] = r;
        }
        iters
    }
}

/// Minimises `Σ a_n r_n² − 2 b_n r_n` over `Σ r_n² = 1` and returns the
/// fractions `r_n²` and the multiplier steps used. The global minimiser is
/// `r_n = b_n / (a_n + ω)` with `ω > −min a`.
fn solve_fractions(num: &[f64], den: &[f64], config: &SolverConfig, ops: &mut u64) -> (Vec<f64>, usize) {
    let n = num.len();
    if num.iter().all(|b| *b <= 0.0) {
        return (vec![1.0 / n as f64; n], 0);
    }
    // The minimiser is unchanged by a common scaling of `a` and `b`; working
    // at unit scale keeps the multiplier search away from underflow when a
    // cluster's beam power has nearly vanished.
    let scale = num.iter().chain(den).copied().fold(0.0, f64::max);
    let num: Vec<f64> = num.iter().map(|b| b / scale).collect();
    let den: Vec<f64> = den.iter().map(|a| a / scale).collect();
    let a_min = den.iter().copied().fold(f64::INFINITY, f64::min);
    let at = |w: f64, i: usize| if num[i] > 0.0 { (num[i] / (den[i] + w)).powi(2) } else { 0.0 };
    let pinned = (0..n).any(|i| num[i] > 0.0 && den[i] == a_min);
    if !pinned {
        // No signal term at the smallest curvature: the sum stays bounded as
        // ω → −min a, and any leftover mass goes to that UE.
        let limit: Vec<f64> = (0..n)
            .map(|i| if num[i] > 0.0 { (num[i] / (den[i] - a_min)).powi(2) } else { 0.0 })
            .collect();
        let total: f64 = limit.iter().sum();
        if total < 1.0 {
            let mut r = limit;
            let j = (0..n).find(|&i| den[i] == a_min).expect("minimum is attained");
            r[j] += 1.0 - total;
            return (r, 0);
        }
    }
    let search = Search {
        initial: config.initial_multiplier,
        step: config.step_omega,
        tol: config.multiplier_tol,
        max_iters: config.max_inner_iters,
        floor: Floor::Exclusive(-a_min),
    };
    let outcome = search.run(1.0, |w| {
        *ops += n as u64;
        (0..n).map(|i| at(w, i)).sum()
    });
    let mut r: Vec<f64> = (0..n).map(|i| at(outcome.multiplier, i)).collect();
    let total: f64 = r.iter().sum();
    r.iter_mut().for_each(|x| *x /= total);
    (r, outcome.iters)
}

/// Single-beam design over the same beam partition as the partial-space
/// multi-beam solver.
pub fn solve_single_beam(scenario: &ClusteredScenario, config: &SolverConfig, p_max: f64) -> Result<SingleBeamSolution> {
    check_inputs(scenario, config, p_max)?;
    let nb = scenario.num_beams();
    let owner = select_beams(&cluster_uniform_powers(scenario, p_max), scenario)?;
    let mut beams_of = vec![Vec::new(); scenario.num_clusters()];
    for (c, &m) in owner.iter().enumerate() {
        beams_of[m].push(c);
    }
    let active = mask_from_assignment(scenario, &owner);
    let problem = Problem::new(scenario, active, p_max, *config);
    let state = State { scenario, config: *config, p_max, owner, beams_of };

    let mut pc = vec![p_max / nb as f64; nb];
    let mut iota = vec![0.0; scenario.num_ues()];
    for cluster in &scenario.clusters {
        for &k in &cluster.members {
            iota[k] = 1.0 / cluster.members.len() as f64;
        }
    }
    let mut powers = state.per_ue(&pc, &iota);
    let mut trace = problem.initial_trace(&powers, nb + scenario.num_ues());
    for _ in 0..config.max_outer_iters {
        let ops = &mut trace.op_count;
        let st = problem.link_state(&powers, ops);
        let (next_pc, mut inner) = state.beam_block(&st, &iota, ops);
        pc = next_pc;
        for m in 0..scenario.num_clusters() {
            inner += state.fraction_block(&st, &pc, m, &mut iota, ops);
        }
        let next = state.per_ue(&pc, &iota);
        let change = relative_change(&powers, &next);
        powers = next;
        let usage = pc.iter().sum::<f64>() / p_max;
        if record_iteration(&mut trace, config, problem.objectives(&powers), change, usage, inner) {
            break;
        }
    }
    let design = BeamDesign::from_parts(scenario.num_ues(), nb, problem.into_active(), powers, p_max)?;
    Ok(SingleBeamSolution { design, trace, beam_powers: pc, fractions: iota, beam_owner: state.owner })
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
        ClusteredScenario::from_ordered(profiles, groups, sectors, 8).unwrap()
    }

    /// Cosine similarity of two non-negative amplitude profiles given as powers.
    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| (x * y).sqrt()).sum();
        dot / (a.iter().sum::<f64>() * b.iter().sum::<f64>()).sqrt()
    }

    #[test]
    fn lone_ue_gets_everything() {
        let s = scenario(vec![vec![2.0]], vec![vec![0]]);
        let sol = solve_single_beam(&s, &SolverConfig::default(), 3.0).unwrap();
        assert_eq!(sol.fractions, vec![1.0]);
        assert!((sol.beam_powers[0] - 3.0).abs() < 1e-4);
    }

    #[test]
    fn fractions_and_alignment() {
        let s = scenario(
            vec![vec![1.0, 0.4, 0.0, 0.1], vec![0.5, 0.3, 0.0, 0.0], vec![0.2, 0.1, 0.0, 0.05], vec![0.0, 0.0, 2.0, 0.3]],
            vec![vec![0, 1, 2], vec![3]],
        );
        let sol = solve_single_beam(&s, &SolverConfig::default(), 10.0).unwrap();
        assert!((sol.fractions[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(sol.fractions[3], 1.0);
        assert!(sol.design.within_budget());
        assert!(sol.design.beams_exclusive(&s));
        assert!(sol.trace.max_surrogate_increase() <= 1e-8, "{:?}", sol.trace);
        let row = |k: usize| sol.design.powers[k * 4..(k + 1) * 4].to_vec();
        for k in 1..3 {
            assert!((cosine(&row(0), &row(k)) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fraction_solver_bounded_case() {
        let mut ops = 0;
        let (r, _) = solve_fractions(&[0.1, 0.0], &[1.0, 0.5], &SolverConfig::default(), &mut ops);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(r[1] > 0.9);
        let (r, _) = solve_fractions(&[0.0, 0.0], &[1.0, 0.5], &SolverConfig::default(), &mut ops);
        assert_eq!(r, vec![0.5, 0.5]);
    }

    #[test]
    fn fraction_solver_is_scale_free() {
        let mut ops = 0;
        let (unit, _) = solve_fractions(&[0.3, 0.2], &[1.0, 3.0], &SolverConfig::default(), &mut ops);
        let (tiny, _) = solve_fractions(&[0.3e-250, 0.2e-250], &[1e-250, 3e-250], &SolverConfig::default(), &mut ops);
        for (a, b) in unit.iter().zip(&tiny) {
            assert!(b.is_finite() && (a - b).abs() < 1e-9, "{unit:?} vs {tiny:?}");
        }
    }

    #[test]
    fn fraction_solver_negative_multiplier() {
        let mut ops = 0;
        let (r, _) = solve_fractions(&[0.1, 0.1], &[1.0, 1.0], &SolverConfig::default(), &mut ops);
        assert!((r[0] - 0.5).abs() < 1e-9 && (r[1] - 0.5).abs() < 1e-9);
    }
}
