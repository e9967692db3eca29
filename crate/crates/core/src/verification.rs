//! Independent checks of the vertex rule.
//!
//! Blue's objective within a stage is the pair (min `C1`, max `C2`) of the
//! energy relation. Weighting the two with `gamma` gives
//! `F_gamma(x) = gamma * sum_i a_i x_0 x_i - (1 - gamma) * sum_j b_j x_j`,
//! which these routines minimize by brute force over a simplex lattice.
//! [`dominance_check`] tests the behavioral claim directly by simulation.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate_stage, IntegratorConfig, Trajectory};
use crate::error::{invalid, Result};
use crate::lanchester::{
    energy_coefficients, threat_rates, threat_rates_at, Allocation, EffectiveScenario, ForceState,
    Scenario, ThreatRates,
};
use crate::strategy::optimal_allocation;

/// Slack allowed between the claimed vertex and the lattice minimum.
pub const SCALARIZATION_TOL: f64 = 1e-9;
/// Relative tolerance for `C2 = sum_j b_j p_j`.
pub const LINEARITY_TOL: f64 = 1e-12;
/// Dominance slack, as a fraction of Blue's initial strength.
pub const DOMINANCE_REL_TOL: f64 = 1e-6;

/// Cross-term weights `a_i = r_R r_i (alpha_c - alpha_d) / A_0^i`, zero for
/// destroyed agents.
pub fn cross_coefficients(eff: &EffectiveScenario) -> Vec<f64> {
    let r_red = eff.base().r_red();
    let mut a = vec![0.0; eff.n_agents()];
    for (id, agent) in eff.remaining() {
        a[id - 1] = r_red * agent.r * agent.span() / agent.a0;
    }
    a
}

/// `gamma * sum_i a_i x_0 x_i - (1 - gamma) * sum_j b_j x_j`.
pub fn scalarized_objective(gamma: f64, a: &[f64], b: &ThreatRates, x: &[f64]) -> f64 {
    let cross: f64 = a.iter().zip(&x[1..]).map(|(ai, xi)| ai * x[0] * xi).sum();
    let linear: f64 = b.as_slice().iter().zip(x).map(|(bj, xj)| bj * xj).sum();
    gamma * cross - (1.0 - gamma) * linear
}

/// Points of the simplex in `dim` dimensions whose coordinates are multiples
/// of `step`. `step` must divide 1.
pub fn simplex_lattice(dim: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    let m = lattice_divisions(step)?;
    if dim == 0 {
        return Err(invalid("dim", "must be at least 1"));
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; dim];
    compositions(m, 0, &mut counts, &mut |c| {
        out.push(c.iter().map(|&k| k as f64 / m as f64).collect());
    });
    Ok(out)
}

fn lattice_divisions(step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(invalid("grid_step", format!("{step} must lie in (0, 1]")));
    }
    let m = (1.0 / step).round();
    if (m * step - 1.0).abs() > 1e-9 {
        return Err(invalid("grid_step", format!("{step} does not divide 1")));
    }
    Ok(m as usize)
}

fn compositions(left: usize, pos: usize, counts: &mut [usize], emit: &mut impl FnMut(&[usize])) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        emit(counts);
        return;
    }
    for k in (0..=left).rev() {
        counts[pos] = k;
        compositions(left - k, pos + 1, counts, emit);
    }
}

/// `count` equispaced values on `[0, 1]` including both ends.
pub fn gamma_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|k| k as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaResult {
    pub gamma: f64,
    pub grid_min: f64,
    pub argmin: Vec<f64>,
    pub vertex_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarizationReport {
    /// Vertex picked by the threat-rate rule.
    pub vertex: Allocation,
    pub simplex_step: f64,
    pub lattice_points: usize,
    pub per_gamma: Vec<GammaResult>,
    pub passed: bool,
}

/// Brute-force minimization of `F_gamma` over the simplex lattice for each
/// `gamma`; passes iff the argmax-`b` vertex attains the lattice minimum
/// within [`SCALARIZATION_TOL`] every time.
pub fn verify_scalarized_min(
    a: &[f64],
    b: &ThreatRates,
    gammas: &[f64],
    simplex_step: f64,
) -> Result<ScalarizationReport> {
    if b.len() != a.len() + 1 {
        return Err(invalid(
            "rates",
            format!("{} rates for {} cross coefficients", b.len(), a.len()),
        ));
    }
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(invalid("gamma", format!("{g} outside [0, 1]")));
    }
    let lattice = simplex_lattice(b.len(), simplex_step)?;
    let vertex = optimal_allocation(b, &Default::default()).allocation;

    let per_gamma: Vec<GammaResult> = gammas
        .par_iter()
        .map(|&gamma| {
            let (mut grid_min, mut argmin) = (f64::INFINITY, 0);
            for (k, x) in lattice.iter().enumerate() {
                let v = scalarized_objective(gamma, a, b, x);
                if v < grid_min {
                    grid_min = v;
                    argmin = k;
                }
            }
            GammaResult {
                gamma,
                grid_min,
                argmin: lattice[argmin].clone(),
                vertex_value: scalarized_objective(gamma, a, b, vertex.as_slice()),
            }
        })
        .collect();
    let passed = per_gamma
        .iter()
        .all(|g| g.vertex_value <= g.grid_min + SCALARIZATION_TOL);
    Ok(ScalarizationReport {
        vertex,
        simplex_step,
        lattice_points: lattice.len(),
        per_gamma,
        passed,
    })
}

/// Structural facts about `C1` and `C2` on a simplex lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MooStructure {
    /// `C1 = 0` at every vertex.
    pub c1_zero_at_vertices: bool,
    /// `C1 >= 0` at every lattice point.
    pub c1_nonnegative: bool,
    /// Largest `|C2 - sum_j b_j p_j| / |C2|` seen.
    pub c2_max_rel_error: f64,
    /// `C2` is maximal at the argmax-`b` vertex.
    pub c2_max_at_leader: bool,
    pub lattice_points: usize,
}

impl MooStructure {
    pub fn holds(&self) -> bool {
        self.c1_zero_at_vertices
            && self.c1_nonnegative
            && self.c2_max_rel_error <= LINEARITY_TOL
            && self.c2_max_at_leader
    }
}

/// Checks that `C1` vanishes at the vertices and is nonnegative, and that
/// `C2` coincides with the linear form of `rates` and peaks at its leader.
///
/// Coefficients are evaluated at the stage-start state of `eff` (initial
/// strengths with destroyed agents at zero).
pub fn verify_moo_structure(
    eff: &EffectiveScenario,
    rates: &ThreatRates,
    simplex_step: f64,
) -> Result<MooStructure> {
    let n = eff.n_agents();
    if rates.len() != n + 1 {
        return Err(invalid(
            "rates",
            format!("{} rates for {n} agents", rates.len()),
        ));
    }
    let start = ForceState::initial_effective(eff);
    let lattice = simplex_lattice(n + 1, simplex_step)?;
    let leader = optimal_allocation(rates, eff.eliminated()).allocation;
    let c2_leader = energy_coefficients(eff, &leader, &start)?.c2;

    let mut out = MooStructure {
        c1_zero_at_vertices: true,
        c1_nonnegative: true,
        c2_max_rel_error: 0.0,
        c2_max_at_leader: true,
        lattice_points: lattice.len(),
    };
    for slot in 0..=n {
        let c = energy_coefficients(eff, &Allocation::vertex(n, slot), &start)?;
        out.c1_zero_at_vertices &= c.c1 == 0.0;
    }
    for x in lattice {
        let p = Allocation::new(x)?;
        let c = energy_coefficients(eff, &p, &start)?;
        out.c1_nonnegative &= c.c1 >= 0.0;
        let linear = rates.dot(&p);
        let err = (c.c2 - linear).abs();
        let rel = if c.c2 == 0.0 { err } else { err / c.c2.abs() };
        out.c2_max_rel_error = out.c2_max_rel_error.max(rel);
        out.c2_max_at_leader &= c.c2 <= c2_leader * (1.0 + LINEARITY_TOL);
    }
    Ok(out)
}

/// Worst-case gap between the reference and one alternative allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationMargin {
    pub allocation: Allocation,
    /// `min_t [B_ref(t) - B(t)]` over the shared comparison window.
    pub margin: f64,
    /// End of the comparison window: the earlier first elimination.
    pub window_end: f64,
    pub compared_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub grid_step: f64,
    pub optimal: Allocation,
    pub tolerance: f64,
    pub margins: Vec<AllocationMargin>,
    pub worst_margin: f64,
    pub passed: bool,
}

fn margin_between(
    reference: &Trajectory,
    other: &Trajectory,
    allocation: Allocation,
) -> AllocationMargin {
    let window_end = match (reference.last(), other.last()) {
        (Some(a), Some(b)) => a.t.min(b.t),
        _ => 0.0,
    };
    let mut margin = 0.0f64;
    let mut compared = 0;
    let mut first = true;
    // Uniform samples are produced at identical times by both runs.
    for (s, o) in reference.samples.iter().zip(&other.samples).skip(1) {
        if s.t != o.t || s.t > window_end {
            continue;
        }
        let gap = s.b - o.b;
        margin = if first { gap } else { margin.min(gap) };
        first = false;
        compared += 1;
    }
    AllocationMargin {
        allocation,
        margin,
        window_end,
        compared_points: compared,
    }
}

/// First-stage Blue margin of `reference` over `other`.
pub fn compare_stage_one(
    scn: &Scenario,
    reference: &Allocation,
    other: &Allocation,
    cfg: &IntegratorConfig,
) -> Result<AllocationMargin> {
    let eff = EffectiveScenario::new(scn.clone());
    let start = ForceState::initial(scn);
    let ref_traj = integrate_stage(&eff, reference, &start, cfg)?;
    let traj = integrate_stage(&eff, other, &start, cfg)?;
    Ok(margin_between(&ref_traj, &traj, other.clone()))
}

/// Simulates the first stage under every lattice allocation and under the
/// vertex rule, and checks that the rule keeps Blue at least as strong up to
/// the first elimination in either run.
pub fn dominance_check(
    scn: &Scenario,
    grid_step: f64,
    cfg: &IntegratorConfig,
) -> Result<DominanceReport> {
    let eff = EffectiveScenario::new(scn.clone());
    let start = ForceState::initial(scn);
    let optimal = optimal_allocation(&threat_rates(&eff), eff.eliminated()).allocation;
    let reference = integrate_stage(&eff, &optimal, &start, cfg)?;
    let lattice = simplex_lattice(scn.n_agents() + 1, grid_step)?;

    let margins = lattice
        .into_par_iter()
        .map(|x| {
            let p = Allocation::new(x)?;
            let traj = integrate_stage(&eff, &p, &start, cfg)?;
            Ok(margin_between(&reference, &traj, p))
        })
        .collect::<Result<Vec<_>>>()?;

    let tolerance = DOMINANCE_REL_TOL * scn.blue();
    let worst_margin = margins
        .iter()
        .map(|m| m.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(DominanceReport {
        grid_step,
        optimal,
        tolerance,
        passed: margins.iter().all(|m| m.margin >= -tolerance),
        worst_margin,
        margins,
    })
}

/// `C2` at `start` agrees with the rates evaluated at `start`; exposed for
/// callers checking later stages.
pub fn c2_linearity_error(
    eff: &EffectiveScenario,
    p: &Allocation,
    start: &ForceState,
) -> Result<f64> {
    let c2 = energy_coefficients(eff, p, start)?.c2;
    let linear = threat_rates_at(eff, start).dot(p);
    Ok((c2 - linear).abs())
}
