//! Stage integration and the closed-form relations that hold within a stage.
//!
//! A stage is an interval of constant allocation. It ends when Blue, Red, or
//! an agent under fire reaches zero. Within a stage every strength under
//! fire is affine in the exposure `X = integral of B`, which yields the
//! energy relation `B^2 = -(2/3) c1 X^3 + c2 X^2 - 2 c3 X + c4` used here as
//! an oracle for the integrator.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lanchester::{
    threat_rates_at, Allocation, EffectiveScenario, EnergyCoefficients, Entity, ForceState,
};
use crate::quadrature;

/// Fixed-step integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    /// Step size.
    pub dt: f64,
    /// Time tolerance for locating an elimination inside a step.
    pub event_tol: f64,
    /// Absolute time horizon.
    pub t_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-3,
            event_tol: 1e-9,
            t_max: 100.0,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, event_tol: f64, t_max: f64) -> Result<Self> {
        let cfg = IntegratorConfig {
            dt,
            event_tol,
            t_max,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("event_tol", self.event_tol),
            ("t_max", self.t_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("{v} must be finite and > 0")));
            }
        }
        Ok(())
    }
}

/// Time derivative of a [`ForceState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub db: f64,
    pub dr: f64,
    pub da: Vec<f64>,
    pub dx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StageEnd {
    /// An entity reached zero.
    Elimination,
    /// The time horizon was reached first.
    Horizon,
    /// Blue or Red was already at zero at the start.
    Immediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Elimination {
    pub t: f64,
    /// Stage exposure at the event.
    pub x: f64,
    pub entity: Entity,
    /// Strength before clamping to zero.
    pub residual: f64,
}

/// Change of the leading threat rate during a stage. The allocation is not
/// revised; these are recorded for inspection only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCrossing {
    pub t: f64,
    pub from: Entity,
    pub to: Entity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<ForceState>,
    pub events: Vec<Elimination>,
    pub allocation: Allocation,
    pub end: StageEnd,
    pub rate_crossings: Vec<RateCrossing>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&ForceState> {
        self.samples.last()
    }

    pub fn eliminated(&self, e: Entity) -> bool {
        self.events.iter().any(|ev| ev.entity == e)
    }

    /// Time of the first elimination, if any.
    pub fn event_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.t)
    }
}

// Flat layout used by the stepper: [b, r, x, a_1 .. a_n].
const B: usize = 0;
const R: usize = 1;
const X: usize = 2;
const A: usize = 3;

fn flatten(s: &ForceState) -> Vec<f64> {
    let mut y = Vec::with_capacity(A + s.a.len());
    y.extend_from_slice(&[s.b, s.r, s.x]);
    y.extend_from_slice(&s.a);
    y
}

fn unflatten(t: f64, y: &[f64]) -> ForceState {
    ForceState {
        t,
        b: y[B],
        r: y[R],
        a: y[A..].to_vec(),
        x: y[X],
    }
}

fn derivative(eff: &EffectiveScenario, p: &Allocation, y: &[f64], out: &mut [f64]) {
    let scn = eff.base();
    let b = y[B];
    out[B] = -eff.red_kill_rate(&y[A..]) * y[R];
    out[R] = -p.get(0) * scn.r_red() * b;
    out[X] = b;
    for (i, agent) in scn.agents().iter().enumerate() {
        let id = i + 1;
        out[A + i] = if eff.is_eliminated(id) {
            0.0
        } else {
            -p.get(id) * agent.r * b
        };
    }
}

/// Right-hand side of the battle equations.
///
/// # Panics
///
/// If `p` or `s` do not match the scenario's agent count.
pub fn rhs(eff: &EffectiveScenario, p: &Allocation, s: &ForceState) -> StateRate {
    let n = eff.n_agents();
    assert_eq!(p.len(), n + 1, "allocation arity");
    assert_eq!(s.a.len(), n, "state arity");
    let y = flatten(s);
    let mut d = vec![0.0; y.len()];
    derivative(eff, p, &y, &mut d);
    StateRate {
        db: d[B],
        dr: d[R],
        da: d[A..].to_vec(),
        dx: d[X],
    }
}

struct Stepper<'a> {
    eff: &'a EffectiveScenario,
    p: &'a Allocation,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(eff: &'a EffectiveScenario, p: &'a Allocation, dim: usize) -> Self {
        Stepper {
            eff,
            p,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    /// One classical RK4 step of size `h` from `y` into `out`.
    fn step(&mut self, y: &[f64], h: f64, out: &mut [f64]) {
        let (eff, p) = (self.eff, self.p);
        derivative(eff, p, y, &mut self.k[0]);
        for stage in 1..4 {
            let c = if stage == 3 { h } else { 0.5 * h };
            for ((t, yj), kj) in self.tmp.iter_mut().zip(y).zip(&self.k[stage - 1]) {
                *t = yj + c * kj;
            }
            let (_, rest) = self.k.split_at_mut(stage);
            derivative(eff, p, &self.tmp, &mut rest[0]);
        }
        let [k1, k2, k3, k4] = &self.k;
        for j in 0..y.len() {
            out[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
}

/// Entities whose strength can reach zero in this stage, with the flat index
/// of their strength.
fn tracked(eff: &EffectiveScenario, p: &Allocation) -> Vec<(Entity, usize)> {
    let mut out = vec![(Entity::Blue, B), (Entity::Red, R)];
    for (id, _) in eff.remaining() {
        if p.get(id) > 0.0 {
            out.push((Entity::Agent(id), A + id - 1));
        }
    }
    out
}

fn crossed(tracked: &[(Entity, usize)], y: &[f64]) -> bool {
    tracked.iter().any(|&(_, j)| y[j] <= 0.0)
}

/// Integrates one stage with constant allocation `p` from `start`.
///
/// Stops at the first elimination, located by bisection inside the step, or
/// at `cfg.t_max`. The exposure is reset to zero at the start of the stage.
pub fn integrate_stage(
    eff: &EffectiveScenario,
    p: &Allocation,
    start: &ForceState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    p.check_arity(eff.n_agents())?;
    if start.a.len() != eff.n_agents() {
        return Err(invalid(
            "state.a",
            format!(
                "{} agent strengths for {} agents",
                start.a.len(),
                eff.n_agents()
            ),
        ));
    }
    let mut traj = Trajectory {
        samples: Vec::new(),
        events: Vec::new(),
        allocation: p.clone(),
        end: StageEnd::Immediate,
        rate_crossings: Vec::new(),
    };
    if start.b <= 0.0 || start.r <= 0.0 {
        return Ok(traj);
    }
    for (id, _) in eff.remaining() {
        if start.a[id - 1] <= 0.0 {
            return Err(invalid(
                format!("state.a[{}]", id - 1),
                "remaining agent must have positive strength",
            ));
        }
    }

    let mut y = flatten(start);
    y[X] = 0.0;
    let dim = y.len();
    let watch = tracked(eff, p);
    let scale: Vec<f64> = watch.iter().map(|&(_, j)| y[j]).collect();
    let mut stepper = Stepper::new(eff, p, dim);
    let mut next = vec![0.0; dim];
    let t0 = start.t;
    let mut leader = leader_at(eff, &unflatten(t0, &y));
    traj.samples.push(unflatten(t0, &y));

    let mut k: u64 = 0;
    loop {
        let t = t0 + k as f64 * cfg.dt;
        let remaining = cfg.t_max - t;
        if remaining <= cfg.event_tol {
            traj.end = StageEnd::Horizon;
            return Ok(traj);
        }
        let h = cfg.dt.min(remaining);
        stepper.step(&y, h, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t + h });
        }

        if crossed(&watch, &next) {
            let (hit, state) = locate_event(&mut stepper, &y, h, cfg.event_tol, &watch, &scale);
            let t_event = t + hit;
            let mut s = unflatten(t_event, &state);
            for &(entity, j) in &watch {
                if state[j] <= 0.0 {
                    traj.events.push(Elimination {
                        t: t_event,
                        x: state[X],
                        entity,
                        residual: state[j],
                    });
                    match entity {
                        Entity::Blue => s.b = 0.0,
                        Entity::Red => s.r = 0.0,
                        Entity::Agent(id) => s.a[id - 1] = 0.0,
                    }
                }
            }
            traj.samples.push(s);
            traj.end = StageEnd::Elimination;
            return Ok(traj);
        }

        std::mem::swap(&mut y, &mut next);
        k += 1;
        let t_next = if h < cfg.dt {
            cfg.t_max
        } else {
            t0 + k as f64 * cfg.dt
        };
        let s = unflatten(t_next, &y);
        let now = leader_at(eff, &s);
        if now != leader {
            traj.rate_crossings.push(RateCrossing {
                t: t_next,
                from: leader,
                to: now,
            });
            leader = now;
        }
        traj.samples.push(s);
    }
}

fn leader_at(eff: &EffectiveScenario, s: &ForceState) -> Entity {
    Entity::from_slot(threat_rates_at(eff, s).leading_slot(eff.eliminated()))
}

/// Bisects the step size in `(0, h]` for the first crossing. Returns the
/// step length and the state just past the crossing.
fn locate_event(
    stepper: &mut Stepper<'_>,
    y: &[f64],
    h: f64,
    event_tol: f64,
    watch: &[(Entity, usize)],
    scale: &[f64],
) -> (f64, Vec<f64>) {
    let mut probe = vec![0.0; y.len()];
    let mut hi_state = vec![0.0; y.len()];
    stepper.step(y, h, &mut hi_state);
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        let settled = watch
            .iter()
            .zip(scale)
            .filter(|(&(_, j), _)| hi_state[j] <= 0.0)
            .all(|(&(_, j), &s)| hi_state[j].abs() <= 1e-10 * s);
        if hi - lo <= event_tol && settled {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        stepper.step(y, mid, &mut probe);
        if crossed(watch, &probe) {
            hi = mid;
            std::mem::swap(&mut hi_state, &mut probe);
        } else {
            lo = mid;
        }
    }
    (hi, hi_state)
}

/// Exposure at which each entity under fire reaches zero, for Red and every
/// remaining agent. Entities receiving no fire map to `+inf`.
pub fn elimination_exposure(
    eff: &EffectiveScenario,
    p: &Allocation,
    start: &ForceState,
) -> Result<Vec<(Entity, f64)>> {
    p.check_arity(eff.n_agents())?;
    let scn = eff.base();
    let at = |strength: f64, fire: f64| {
        if fire > 0.0 {
            strength / fire
        } else {
            f64::INFINITY
        }
    };
    let mut out = vec![(Entity::Red, at(start.r, p.get(0) * scn.r_red()))];
    for (id, agent) in eff.remaining() {
        out.push((Entity::Agent(id), at(start.a[id - 1], p.get(id) * agent.r)));
    }
    Ok(out)
}

/// Largest relative deviation of the samples from the energy relation,
/// `max |B^2 - poly(X)| / c4`.
pub fn energy_invariant_residual(traj: &Trajectory, coeff: &EnergyCoefficients) -> f64 {
    if coeff.c4 == 0.0 {
        return 0.0;
    }
    traj.samples
        .iter()
        .map(|s| (s.b * s.b - coeff.blue_squared(s.x)).abs() / coeff.c4)
        .fold(0.0, f64::max)
}

/// Relative tolerance of [`stage_time_oracle`].
pub const ORACLE_REL_TOL: f64 = 1e-8;

/// Elapsed time for Blue's exposure to grow from 0 to `x_end`, from
/// `dt = dX / B(X)` and the energy relation.
///
/// Fails with [`Error::BlueAnnihilated`] if `B(X)` vanishes strictly before
/// `x_end`. A simple root exactly at `x_end` is allowed.
pub fn stage_time_oracle(coeff: &EnergyCoefficients, x_end: f64) -> Result<f64> {
    if !(x_end.is_finite() && x_end >= 0.0) {
        return Err(invalid("x_end", format!("{x_end} must be finite and >= 0")));
    }
    if x_end == 0.0 {
        return Ok(0.0);
    }
    if coeff.c4 <= 0.0 {
        return Err(Error::BlueAnnihilated {
            root: 0.0,
            target: x_end,
        });
    }
    let end_tol = 1e-12 * coeff.c4;
    if let Some(root) = interior_root(coeff, x_end, end_tol) {
        return Err(Error::BlueAnnihilated {
            root,
            target: x_end,
        });
    }

    // Expand B^2 around x_end: q(x_end - v) = q0 + v * (-q1 + v * (q2 / 2 - v * q3 / 6)).
    let q0 = coeff.blue_squared(x_end);
    let q0 = if q0.abs() <= end_tol { 0.0 } else { q0 };
    let q1 = coeff.blue_squared_slope(x_end);
    let q2 = -4.0 * coeff.c1 * x_end + 2.0 * coeff.c2;
    let q3 = -4.0 * coeff.c1;
    let tail = move |v: f64| -q1 + v * (0.5 * q2 - v * q3 / 6.0);

    // Substituting X = x_end - u^2 removes the 1/sqrt singularity at a root.
    let integrand = move |u: f64| {
        let v = u * u;
        if q0 == 0.0 {
            2.0 / tail(v).sqrt()
        } else {
            2.0 * u / (q0 + v * tail(v)).sqrt()
        }
    };
    quadrature::integrate(integrand, 0.0, x_end.sqrt(), ORACLE_REL_TOL)
}

/// First root of `B(X)^2` in `(0, x_end)`, if any.
fn interior_root(coeff: &EnergyCoefficients, x_end: f64, end_tol: f64) -> Option<f64> {
    let q = |x: f64| coeff.blue_squared(x);
    // Critical points solve c1 X^2 - c2 X + c3 = 0.
    let mut candidates = Vec::new();
    if coeff.c1 == 0.0 {
        if coeff.c2 != 0.0 {
            candidates.push(coeff.c3 / coeff.c2);
        }
    } else {
        let disc = coeff.c2 * coeff.c2 - 4.0 * coeff.c1 * coeff.c3;
        if disc >= 0.0 {
            let s = disc.sqrt();
            candidates.push((coeff.c2 - s) / (2.0 * coeff.c1));
            candidates.push((coeff.c2 + s) / (2.0 * coeff.c1));
        }
    }
    candidates.retain(|&c| c > 0.0 && c < x_end);
    candidates.sort_by(f64::total_cmp);

    let mut bad = candidates.into_iter().find(|&c| q(c) <= 0.0);
    if bad.is_none() && q(x_end) < -end_tol {
        bad = Some(x_end);
    }
    let mut hi = bad?;
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}
