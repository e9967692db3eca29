//! Networked Lanchester battle between Blue and a Red force backed by supply
//! agents, with the threat-rate rule for Blue's optimal piecewise-constant
//! fire allocation.
//!
//! - [`lanchester`]: scenario types, threatening rates, energy coefficients.
//! - [`dynamics`]: stage integration with elimination events and closed-form
//!   oracles.
//! - [`strategy`]: the vertex rule and the multi-stage campaign.
//! - [`verification`]: lattice and simulation checks of the rule.
//! - [`scenario_io`]: scenario files, presets, CSV output.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod lanchester;
mod quadrature;
pub mod scenario_io;
pub mod strategy;
pub mod verification;

pub use dynamics::{
    elimination_exposure, energy_invariant_residual, integrate_stage, rhs, stage_time_oracle,
    IntegratorConfig, StageEnd, Trajectory,
};
pub use error::{Error, Result};
pub use lanchester::{
    energy_coefficients, threat_rates, threat_rates_at, AgentSpec, Allocation, EffectiveScenario,
    EnergyCoefficients, Entity, ForceState, Scenario, ThreatRates,
};
pub use strategy::{
    optimal_allocation, plan_campaign, simulate_policy, square_law_final, CampaignResult, Outcome,
    SquareLawOutcome, StagePlan,
};
