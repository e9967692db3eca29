//! Domain model for a Blue force fighting a Red force that is backed by `n`
//! supply agents.
//!
//! Each agent `A^i` boosts Red's per-trooper kill rate against Blue through an
//! affine *complementing attrition* function that slides from `alpha_c`
//! (agent at full strength, fully connected) down to `alpha_d` (agent
//! destroyed, disconnected). Blue splits its fire between Red and the agents
//! according to an [`Allocation`].
//!
//! Indexing convention: slot `0` of an allocation or a threat-rate vector is
//! Red, slot `i >= 1` is agent `A^i`. Agent ids are therefore 1-based
//! everywhere in the public API; storage is `agents[i - 1]`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance for an allocation's components to sum to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A participant in the battle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Entity {
    Blue,
    Red,
    /// Supply agent, 1-based.
    Agent(usize),
}

impl Entity {
    /// Allocation slot targeting this entity. Blue has none.
    pub fn slot(self) -> Option<usize> {
        match self {
            Entity::Blue => None,
            Entity::Red => Some(0),
            Entity::Agent(i) => Some(i),
        }
    }

    pub fn from_slot(slot: usize) -> Self {
        if slot == 0 {
            Entity::Red
        } else {
            Entity::Agent(slot)
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Blue => f.write_str("Blue"),
            Entity::Red => f.write_str("Red"),
            Entity::Agent(i) => write!(f, "A{i}"),
        }
    }
}

/// Parameters of one supply agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentSpec {
    /// Red's kill rate contribution once the agent is gone.
    pub alpha_d: f64,
    /// Red's kill rate contribution while the agent is at full strength.
    pub alpha_c: f64,
    /// Initial strength.
    pub a0: f64,
    /// Blue's kill rate against this agent.
    pub r: f64,
}

impl AgentSpec {
    pub fn new(alpha_d: f64, alpha_c: f64, a0: f64, r: f64) -> Result<Self> {
        let spec = AgentSpec {
            alpha_d,
            alpha_c,
            a0,
            r,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let all = [self.alpha_d, self.alpha_c, self.a0, self.r];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("agent", "all parameters must be finite"));
        }
        if self.alpha_d < 0.0 {
            return Err(invalid("alpha_d", format!("{} < 0", self.alpha_d)));
        }
        if self.alpha_c < self.alpha_d {
            return Err(invalid(
                "alpha_c",
                format!("alpha_c ({}) < alpha_d ({})", self.alpha_c, self.alpha_d),
            ));
        }
        if self.a0 <= 0.0 {
            return Err(invalid("a0", format!("{} must be > 0", self.a0)));
        }
        if self.r < 0.0 {
            return Err(invalid("r", format!("{} < 0", self.r)));
        }
        Ok(())
    }

    /// Span `alpha_c - alpha_d` of the complementing attrition function.
    pub fn span(&self) -> f64 {
        self.alpha_c - self.alpha_d
    }

    /// Complementing attrition `alpha_d + (alpha_c - alpha_d) * a / a0`.
    pub fn complementing_attrition(&self, a: f64) -> Result<f64> {
        if !(0.0..=self.a0).contains(&a) {
            return Err(Error::OutOfDomain {
                value: a,
                a0: self.a0,
            });
        }
        Ok(self.attrition_at(a))
    }

    #[inline]
    pub(crate) fn attrition_at(&self, a: f64) -> f64 {
        self.alpha_d + self.span() * a / self.a0
    }
}

/// Full parameterization of one battle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    blue: f64,
    red: f64,
    r_red: f64,
    agents: Vec<AgentSpec>,
}

impl Scenario {
    /// `blue`, `red`: initial strengths. `r_red`: Blue's kill rate against Red.
    pub fn new(blue: f64, red: f64, r_red: f64, agents: Vec<AgentSpec>) -> Result<Self> {
        for (name, v) in [("blue", blue), ("red", red), ("r_red", r_red)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("{v} must be finite and > 0")));
            }
        }
        for (i, agent) in agents.iter().enumerate() {
            agent.validate().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                    field: format!("agents[{i}].{field}"),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(Scenario {
            blue,
            red,
            r_red,
            agents,
        })
    }

    pub fn blue(&self) -> f64 {
        self.blue
    }

    pub fn red(&self) -> f64 {
        self.red
    }

    pub fn r_red(&self) -> f64 {
        self.r_red
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.agents
    }

    /// Number of supply agents `n`.
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    /// Agent by 1-based id.
    pub fn agent(&self, id: usize) -> Result<&AgentSpec> {
        id.checked_sub(1)
            .and_then(|i| self.agents.get(i))
            .ok_or(Error::UnknownAgent(id))
    }

    /// Returns a copy with a different Blue-to-agent rate for agent `id`.
    pub fn with_agent_rate(&self, id: usize, r: f64) -> Result<Self> {
        self.agent(id)?;
        let mut agents = self.agents.clone();
        agents[id - 1].r = r;
        Scenario::new(self.blue, self.red, self.r_red, agents)
    }
}

/// A scenario after some agents have been destroyed.
///
/// Destroyed agents no longer follow the affine law; their residual
/// `alpha_d` is folded into the constant offset `delta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveScenario {
    base: Scenario,
    eliminated: BTreeSet<usize>,
    delta: f64,
}

impl EffectiveScenario {
    pub fn new(base: Scenario) -> Self {
        EffectiveScenario {
            base,
            eliminated: BTreeSet::new(),
            delta: 0.0,
        }
    }

    pub fn base(&self) -> &Scenario {
        &self.base
    }

    pub fn eliminated(&self) -> &BTreeSet<usize> {
        &self.eliminated
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_agents(&self) -> usize {
        self.base.n_agents()
    }

    pub fn is_eliminated(&self, id: usize) -> bool {
        self.eliminated.contains(&id)
    }

    /// Remaining agents as `(id, spec)`, in id order.
    pub fn remaining(&self) -> impl Iterator<Item = (usize, &AgentSpec)> + '_ {
        self.base
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| (i + 1, a))
            .filter(move |(id, _)| !self.eliminated.contains(id))
    }

    /// Marks agent `id` destroyed and folds its `alpha_d` into `delta`.
    pub fn fold_eliminated(&self, id: usize) -> Result<Self> {
        let agent = self.base.agent(id)?;
        if self.eliminated.contains(&id) {
            return Err(Error::AlreadyEliminated(id));
        }
        let mut next = self.clone();
        next.eliminated.insert(id);
        next.delta += agent.alpha_d;
        Ok(next)
    }

    /// `(alpha_d + delta, alpha_c + delta)` for a remaining agent: the rate
    /// pair it would carry if the folded offset were attributed to it.
    pub fn effective_pair(&self, id: usize) -> Result<(f64, f64)> {
        let agent = self.base.agent(id)?;
        if self.eliminated.contains(&id) {
            return Err(Error::AlreadyEliminated(id));
        }
        Ok((agent.alpha_d + self.delta, agent.alpha_c + self.delta))
    }

    /// Red's current per-trooper kill rate against Blue given agent strengths.
    pub(crate) fn red_kill_rate(&self, agents: &[f64]) -> f64 {
        self.remaining()
            .map(|(id, spec)| spec.attrition_at(agents[id - 1].clamp(0.0, spec.a0)))
            .sum::<f64>()
            + self.delta
    }

    /// Allocation slots that may be targeted: Red and every remaining agent.
    pub fn selectable(&self, slot: usize) -> bool {
        slot == 0 || (slot <= self.n_agents() && !self.is_eliminated(slot))
    }
}

/// Snapshot of all strengths, plus Blue's accumulated exposure within the
/// current stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceState {
    pub t: f64,
    pub b: f64,
    pub r: f64,
    /// Agent strengths, indexed by `id - 1`.
    pub a: Vec<f64>,
    /// `X(t)`: integral of Blue strength since the stage began.
    pub x: f64,
}

impl ForceState {
    pub fn initial(scn: &Scenario) -> Self {
        ForceState {
            t: 0.0,
            b: scn.blue,
            r: scn.red,
            a: scn.agents.iter().map(|a| a.a0).collect(),
            x: 0.0,
        }
    }

    /// Initial strengths, with eliminated agents at zero.
    pub fn initial_effective(eff: &EffectiveScenario) -> Self {
        let mut s = ForceState::initial(&eff.base);
        for &id in &eff.eliminated {
            s.a[id - 1] = 0.0;
        }
        s
    }

    pub fn strength(&self, e: Entity) -> f64 {
        match e {
            Entity::Blue => self.b,
            Entity::Red => self.r,
            Entity::Agent(i) => self.a[i - 1],
        }
    }
}

/// Blue's fire proportions: slot 0 for Red, slot `i` for agent `A^i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    /// Validates and renormalizes. Components must lie in `[0, 1]` and sum
    /// to one within [`SIMPLEX_TOL`].
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::NotOnSimplex {
                reason: "no components".into(),
            });
        }
        if let Some((k, v)) = p
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::NotOnSimplex {
                reason: format!("p[{k}] = {v} outside [0, 1]"),
            });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotOnSimplex {
                reason: format!("components sum to {sum}"),
            });
        }
        Ok(Allocation(p.into_iter().map(|v| v / sum).collect()))
    }

    /// Indicator vector of `slot` in a scenario with `n_agents` agents.
    pub fn vertex(n_agents: usize, slot: usize) -> Self {
        assert!(
            slot <= n_agents,
            "slot {slot} out of range for {n_agents} agents"
        );
        let mut p = vec![0.0; n_agents + 1];
        p[slot] = 1.0;
        Allocation(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.0[slot]
    }

    /// Slot carrying all of the fire, if this is a vertex of the simplex.
    pub fn vertex_slot(&self) -> Option<usize> {
        let mut hit = None;
        for (k, &v) in self.0.iter().enumerate() {
            if v == 1.0 {
                hit = Some(k);
            } else if v != 0.0 {
                return None;
            }
        }
        hit
    }

    pub(crate) fn check_arity(&self, n_agents: usize) -> Result<()> {
        if self.0.len() != n_agents + 1 {
            return Err(Error::AllocationArity {
                expected: n_agents + 1,
                found: self.0.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            // Hide normalization noise such as 0.7000000000000001.
            let shown = (v * 1e12).round() / 1e12;
            write!(f, "{shown}")?;
        }
        f.write_str(")")
    }
}

/// Threatening rates `(b_0, b_1, ..., b_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ThreatRates(Vec<f64>);

impl ThreatRates {
    pub fn new(b: Vec<f64>) -> Self {
        ThreatRates(b)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.0[slot]
    }

    /// Slot with the largest rate among Red and the agents not in
    /// `eliminated`. Ties go to the lowest slot, so Red wins any tie.
    pub fn leading_slot(&self, eliminated: &BTreeSet<usize>) -> usize {
        let mut best = 0;
        for (slot, &b) in self.0.iter().enumerate().skip(1) {
            if !eliminated.contains(&slot) && b > self.0[best] {
                best = slot;
            }
        }
        best
    }

    /// `sum_j b_j p_j`.
    pub fn dot(&self, p: &Allocation) -> f64 {
        self.0.iter().zip(p.as_slice()).map(|(b, p)| b * p).sum()
    }
}

/// Threatening rates at the scenario's initial strengths.
///
/// `b_0 = (sum of remaining alpha_c + delta) * r_R` and
/// `b_i = r_i (alpha_c - alpha_d) R_0 / A_0^i`; destroyed agents score 0.
pub fn threat_rates(eff: &EffectiveScenario) -> ThreatRates {
    let scn = eff.base();
    let n = scn.n_agents();
    let mut b = vec![0.0; n + 1];
    let alpha_c_sum: f64 = eff.remaining().map(|(_, a)| a.alpha_c).sum();
    b[0] = (alpha_c_sum + eff.delta()) * scn.r_red();
    for (id, agent) in eff.remaining() {
        b[id] = agent.r * agent.span() * scn.red() / agent.a0;
    }
    ThreatRates(b)
}

/// Threatening rates evaluated at an arbitrary state.
///
/// Red's entry uses the current kill rate and the agents' entries use the
/// current Red strength. At the initial state this agrees with
/// [`threat_rates`]; in general `C_2 = sum_j b_j p_j` holds against the
/// rates at the stage-start state.
pub fn threat_rates_at(eff: &EffectiveScenario, s: &ForceState) -> ThreatRates {
    let scn = eff.base();
    let mut b = vec![0.0; scn.n_agents() + 1];
    b[0] = eff.red_kill_rate(&s.a) * scn.r_red();
    for (id, agent) in eff.remaining() {
        b[id] = agent.r * agent.span() * s.r / agent.a0;
    }
    ThreatRates(b)
}

/// Coefficients of the per-stage energy relation
/// `B^2 = -(2/3) c1 X^3 + c2 X^2 - 2 c3 X + c4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl EnergyCoefficients {
    /// Right-hand side of the energy relation, i.e. `B(X)^2`.
    pub fn blue_squared(&self, x: f64) -> f64 {
        ((-2.0 / 3.0 * self.c1 * x + self.c2) * x - 2.0 * self.c3) * x + self.c4
    }

    /// Derivative of [`Self::blue_squared`] with respect to `X`.
    pub fn blue_squared_slope(&self, x: f64) -> f64 {
        (-2.0 * self.c1 * x + 2.0 * self.c2) * x - 2.0 * self.c3
    }
}

/// Energy coefficients for a stage starting at `start` under allocation `p`.
///
/// With `K = sum_i p_i r_i (alpha_c - alpha_d) / A_0^i` and `F` Red's kill
/// rate at `start`:
/// `c1 = p_0 r_R K`, `c2 = p_0 r_R F + K R`, `c3 = F R`, `c4 = B^2`.
/// When agents sit at their initial strength this is the textbook sum form.
pub fn energy_coefficients(
    eff: &EffectiveScenario,
    p: &Allocation,
    start: &ForceState,
) -> Result<EnergyCoefficients> {
    p.check_arity(eff.n_agents())?;
    let r_red = eff.base().r_red();
    let p0 = p.get(0);
    let k: f64 = eff
        .remaining()
        .map(|(id, a)| p.get(id) * a.r * a.span() / a.a0)
        .sum();
    let f = eff.red_kill_rate(&start.a);
    Ok(EnergyCoefficients {
        c1: p0 * r_red * k,
        c2: p0 * r_red * f + k * start.r,
        c3: f * start.r,
        c4: start.b * start.b,
    })
}
