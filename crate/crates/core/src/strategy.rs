//! Stage-by-stage fire allocation.
//!
//! At the start of every stage Blue puts all of its fire on the entity with
//! the largest threatening rate. The stage runs until something is
//! eliminated; a destroyed agent is folded into Red's constant attrition and
//! the rates are recomputed. The battle ends when Red or Blue is gone.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::dynamics::{integrate_stage, IntegratorConfig, StageEnd, Trajectory};
use crate::error::{Error, Result};
use crate::lanchester::{
    threat_rates, Allocation, EffectiveScenario, Entity, ForceState, Scenario, ThreatRates,
};

/// Allocation chosen for one stage and the rates it was chosen from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StagePlan {
    /// Entity receiving all of Blue's fire. `None` for a mixed allocation
    /// supplied by a caller-defined policy.
    pub target: Option<Entity>,
    pub allocation: Allocation,
    /// Threatening rates at the start of the stage.
    pub rates: ThreatRates,
}

/// Vertex allocation on the leading threat. Ties go to Red, then to the
/// lowest agent id.
pub fn optimal_allocation(rates: &ThreatRates, eliminated: &BTreeSet<usize>) -> StagePlan {
    let slot = rates.leading_slot(eliminated);
    StagePlan {
        target: Some(Entity::from_slot(slot)),
        allocation: Allocation::vertex(rates.len() - 1, slot),
        rates: rates.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Outcome {
    BlueWins,
    BlueAnnihilated,
    /// Horizon reached with both sides standing.
    Stalemate {
        horizon: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignStage {
    /// Scenario in force during the stage (eliminations so far folded in).
    pub scenario: EffectiveScenario,
    pub plan: StagePlan,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignResult {
    pub stages: Vec<CampaignStage>,
    pub outcome: Outcome,
    pub final_state: ForceState,
}

impl CampaignResult {
    /// Targets of the vertex stages, in order.
    pub fn targets(&self) -> Vec<Entity> {
        self.stages.iter().filter_map(|s| s.plan.target).collect()
    }
}

/// Runs the battle, choosing each stage's allocation by the threat-rate rule.
pub fn plan_campaign(scn: &Scenario, cfg: &IntegratorConfig) -> Result<CampaignResult> {
    run_campaign(scn, cfg, |_, eff, rates| {
        Ok(optimal_allocation(rates, eff.eliminated()))
    })
}

/// Runs the battle with caller-supplied allocations, one per stage. The last
/// allocation is reused if the battle has more stages than the policy.
///
/// Fire assigned to an agent that is already destroyed is wasted.
pub fn simulate_policy(
    scn: &Scenario,
    policy: &[Allocation],
    cfg: &IntegratorConfig,
) -> Result<CampaignResult> {
    let last = policy.last().ok_or(Error::EmptyPolicy)?;
    for p in policy {
        p.check_arity(scn.n_agents())?;
    }
    run_campaign(scn, cfg, |stage, _, rates| {
        let allocation = policy.get(stage).unwrap_or(last).clone();
        Ok(StagePlan {
            target: allocation.vertex_slot().map(Entity::from_slot),
            allocation,
            rates: rates.clone(),
        })
    })
}

fn run_campaign<F>(scn: &Scenario, cfg: &IntegratorConfig, mut choose: F) -> Result<CampaignResult>
where
    F: FnMut(usize, &EffectiveScenario, &ThreatRates) -> Result<StagePlan>,
{
    cfg.validate()?;
    let mut eff = EffectiveScenario::new(scn.clone());
    let mut state = ForceState::initial(scn);
    let mut stages = Vec::new();

    // Every continuing stage eliminates at least one agent.
    for stage in 0..=scn.n_agents() {
        let rates = threat_rates(&eff);
        let plan = choose(stage, &eff, &rates)?;
        let trajectory = integrate_stage(&eff, &plan.allocation, &state, cfg)?;
        if let Some(last) = trajectory.last() {
            state = last.clone();
        }
        let end = trajectory.end;
        let blue_dead = trajectory.eliminated(Entity::Blue);
        let red_dead = trajectory.eliminated(Entity::Red);
        let fallen: Vec<usize> = trajectory
            .events
            .iter()
            .filter_map(|e| match e.entity {
                Entity::Agent(id) => Some(id),
                _ => None,
            })
            .collect();
        stages.push(CampaignStage {
            scenario: eff.clone(),
            plan,
            trajectory,
        });

        let outcome = match end {
            StageEnd::Horizon => Some(Outcome::Stalemate { horizon: cfg.t_max }),
            StageEnd::Immediate => Some(if state.b > 0.0 {
                Outcome::BlueWins
            } else {
                Outcome::BlueAnnihilated
            }),
            StageEnd::Elimination if blue_dead => Some(Outcome::BlueAnnihilated),
            StageEnd::Elimination if red_dead => Some(Outcome::BlueWins),
            StageEnd::Elimination => None,
        };
        if let Some(outcome) = outcome {
            return Ok(CampaignResult {
                stages,
                outcome,
                final_state: state,
            });
        }
        for id in fallen {
            eff = eff.fold_eliminated(id)?;
        }
    }
    unreachable!("every stage either ends the battle or eliminates an agent")
}

/// Result of the constant-coefficient endgame once every agent is gone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SquareLawOutcome {
    /// Blue destroys Red and keeps this many troops.
    BlueSurvives(f64),
    /// Red destroys Blue and keeps this many troops.
    RedSurvives(f64),
    MutualAnnihilation,
}

/// Endgame with all agents eliminated and Blue firing only at Red.
///
/// `dB/dt = -delta R`, `dR/dt = -r_R B` conserve `r_R B^2 - delta R^2`.
pub fn square_law_final(b: f64, r: f64, r_red: f64, delta: f64) -> SquareLawOutcome {
    let blue_side = r_red * b * b;
    let red_side = delta * r * r;
    if blue_side > red_side {
        SquareLawOutcome::BlueSurvives((b * b - delta / r_red * r * r).sqrt())
    } else if blue_side < red_side {
        SquareLawOutcome::RedSurvives((r * r - r_red / delta * b * b).sqrt())
    } else {
        SquareLawOutcome::MutualAnnihilation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lanchester::AgentSpec;

    fn exp(r: [f64; 3], blue: f64) -> Scenario {
        Scenario::new(
            blue,
            120.0,
            r[0],
            vec![
                AgentSpec::new(0.15, 0.4, 30.0, r[1]).unwrap(),
                AgentSpec::new(0.1, 0.3, 20.0, r[2]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn optimal_allocation_examples() {
        let none = BTreeSet::new();
        let plan = optimal_allocation(&ThreatRates::new(vec![0.35, 0.3, 0.24]), &none);
        assert_eq!(plan.target, Some(Entity::Red));
        assert_eq!(plan.allocation.as_slice(), &[1.0, 0.0, 0.0]);

        let plan = optimal_allocation(&ThreatRates::new(vec![0.35, 0.15, 0.48]), &none);
        assert_eq!(plan.target, Some(Entity::Agent(2)));
        assert_eq!(plan.allocation.as_slice(), &[0.0, 0.0, 1.0]);

        let plan = optimal_allocation(&ThreatRates::new(vec![0.5, 0.5, 0.2]), &none);
        assert_eq!(plan.target, Some(Entity::Red));
    }

    #[test]
    fn ties_between_agents_pick_lowest_id() {
        let plan = optimal_allocation(&ThreatRates::new(vec![0.1, 0.5, 0.5]), &BTreeSet::new());
        assert_eq!(plan.target, Some(Entity::Agent(1)));
    }

    #[test]
    fn eliminated_agents_are_skipped() {
        let elim: BTreeSet<usize> = [2].into();
        let plan = optimal_allocation(&ThreatRates::new(vec![0.1, 0.2, 0.9]), &elim);
        assert_eq!(plan.target, Some(Entity::Agent(1)));
    }

    #[test]
    fn campaigns_follow_expected_stage_sequences() {
        let cfg = IntegratorConfig::default();
        let r1 = plan_campaign(&exp([0.5, 0.3, 0.2], 160.0), &cfg).unwrap();
        assert_eq!(r1.targets(), vec![Entity::Red]);
        assert_eq!(r1.outcome, Outcome::BlueWins);

        let r2 = plan_campaign(&exp([0.5, 0.15, 0.4], 160.0), &cfg).unwrap();
        assert_eq!(r2.targets(), vec![Entity::Agent(2), Entity::Red]);
        assert_eq!(r2.outcome, Outcome::BlueWins);

        let r3 = plan_campaign(&exp([0.5, 0.3, 0.4], 200.0), &cfg).unwrap();
        assert_eq!(
            r3.targets(),
            vec![Entity::Agent(2), Entity::Agent(1), Entity::Red]
        );
        assert_eq!(r3.outcome, Outcome::BlueWins);
        assert_eq!(r3.final_state.r, 0.0);
        assert!(r3.final_state.b > 0.0);
    }

    #[test]
    fn stage_two_rates_are_recomputed() {
        let r3 = plan_campaign(&exp([0.5, 0.3, 0.4], 200.0), &IntegratorConfig::default()).unwrap();
        let b = r3.stages[1].plan.rates.as_slice();
        assert!((b[0] - 0.25).abs() < 1e-12 && (b[1] - 0.3).abs() < 1e-12 && b[2] == 0.0);
    }

    #[test]
    fn p2_fails_in_experiment_two() {
        let res = simulate_policy(
            &exp([0.5, 0.15, 0.4], 160.0),
            &[Allocation::vertex(2, 1)],
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(res.outcome, Outcome::BlueAnnihilated);
        assert_eq!(res.stages.len(), 1);
        assert!((res.final_state.x - 181.934_749_9).abs() < 1e-3);
    }

    #[test]
    fn replaying_the_optimal_plan_is_identical() {
        let scn = exp([0.5, 0.3, 0.4], 200.0);
        let cfg = IntegratorConfig::default();
        let opt = plan_campaign(&scn, &cfg).unwrap();
        let policy: Vec<Allocation> = opt
            .stages
            .iter()
            .map(|s| s.plan.allocation.clone())
            .collect();
        assert_eq!(simulate_policy(&scn, &policy, &cfg).unwrap(), opt);
    }

    #[test]
    fn empty_policy_rejected() {
        let err = simulate_policy(
            &exp([0.5, 0.3, 0.4], 200.0),
            &[],
            &IntegratorConfig::default(),
        );
        assert_eq!(err.unwrap_err(), Error::EmptyPolicy);
    }

    #[test]
    fn short_horizon_is_a_stalemate() {
        let cfg = IntegratorConfig::new(1e-3, 1e-9, 0.1).unwrap();
        let res = plan_campaign(&exp([0.5, 0.3, 0.2], 160.0), &cfg).unwrap();
        assert_eq!(res.outcome, Outcome::Stalemate { horizon: 0.1 });
    }

    #[test]
    fn square_law_cases() {
        match square_law_final(23800f64.sqrt(), 120.0, 0.5, 0.25) {
            SquareLawOutcome::BlueSurvives(b) => assert!((b - 16600f64.sqrt()).abs() < 1e-9),
            o => panic!("{o:?}"),
        }
        assert_eq!(
            square_law_final(7.0, 0.0, 0.5, 0.25),
            SquareLawOutcome::BlueSurvives(7.0)
        );
        assert_eq!(
            square_law_final(1.0, 2.0, 1.0, 0.25),
            SquareLawOutcome::MutualAnnihilation
        );
        assert!(matches!(
            square_law_final(1.0, 10.0, 1.0, 0.25),
            SquareLawOutcome::RedSurvives(_)
        ));
    }

    #[test]
    fn zero_agents_is_a_single_stage() {
        let scn = Scenario::new(10.0, 5.0, 0.5, vec![]).unwrap();
        let res = plan_campaign(&scn, &IntegratorConfig::default()).unwrap();
        assert_eq!(res.targets(), vec![Entity::Red]);
        assert_eq!(res.outcome, Outcome::BlueWins);
        assert_eq!(res.final_state.b, 10.0);
    }
}
