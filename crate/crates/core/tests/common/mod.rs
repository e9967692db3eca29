#![allow(dead_code)]

use lanchester_ncw::{AgentSpec, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_agent(rng: &mut impl Rng) -> AgentSpec {
    let alpha_d = rng.gen_range(0.0..0.3);
    let alpha_c = alpha_d + rng.gen_range(0.0..0.4);
    AgentSpec::new(
        alpha_d,
        alpha_c,
        rng.gen_range(5.0..50.0),
        rng.gen_range(0.05..0.6),
    )
    .unwrap()
}

/// Random scenario with `n` agents.
pub fn random_scenario(rng: &mut impl Rng, n: usize) -> Scenario {
    let agents = (0..n).map(|_| random_agent(rng)).collect();
    Scenario::new(
        rng.gen_range(50.0..300.0),
        rng.gen_range(50.0..200.0),
        rng.gen_range(0.1..1.0),
        agents,
    )
    .unwrap()
}

pub fn preset(name: &str) -> Scenario {
    lanchester_ncw::scenario_io::load_preset(name)
        .unwrap()
        .scenario
}
