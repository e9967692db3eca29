//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dynamics::{stage_time_oracle, IntegratorConfig};
use crate::lanchester::{
    energy_coefficients, threat_rates, Allocation, EffectiveScenario, Entity, ForceState,
    ThreatRates,
};
use crate::scenario_io::{self, LoadedScenario};
use crate::strategy::{
    plan_campaign, simulate_policy, square_law_final, CampaignResult, Outcome, SquareLawOutcome,
};
use crate::verification::{
    cross_coefficients, dominance_check, gamma_grid, verify_moo_structure, verify_scalarized_min,
};

#[derive(Debug, Parser)]
#[command(
    name = "lanchester-ncw",
    version,
    about = "Optimal fire allocation against a force backed by supply agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct IntegratorArgs {
    /// Integration step (overrides the scenario file).
    #[arg(long)]
    dt: Option<f64>,
    /// Time horizon (overrides the scenario file).
    #[arg(long = "t-max")]
    t_max: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan the campaign with the threat-rate rule and report each stage.
    Plan {
        /// Scenario file, or a bundled preset name.
        scenario: String,
        #[command(flatten)]
        integrator: IntegratorArgs,
        /// Write the time series CSV here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a named policy from the scenario file and emit its time series.
    Simulate {
        scenario: String,
        /// Policy name; `optimal` runs the planner.
        #[arg(long)]
        policy: String,
        #[command(flatten)]
        integrator: IntegratorArgs,
        /// CSV destination; standard output if omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the vertex rule by lattice search and by simulation.
    Verify {
        scenario: String,
        /// Simplex lattice spacing.
        #[arg(long = "grid-step", default_value_t = 0.05)]
        grid_step: f64,
        /// Number of equispaced scalarization weights on [0, 1].
        #[arg(long = "gamma-count", default_value_t = 11)]
        gamma_count: usize,
        #[command(flatten)]
        integrator: IntegratorArgs,
    },
    /// Re-run a bundled experiment end to end.
    Reproduce {
        /// exp1, exp2 or exp3.
        experiment: String,
        #[command(flatten)]
        integrator: IntegratorArgs,
        /// Directory for the CSV files.
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut report = String::new();
    let result = dispatch(cli.command, &mut report, out);
    let _ = out.write_all(report.as_bytes());
    match result {
        Ok(()) => 0,
        Err(Failure::Verification) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn dispatch(cmd: Command, report: &mut String, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Plan {
            scenario,
            integrator,
            output,
        } => {
            let loaded = resolve(&scenario)?;
            let cfg = config(&loaded, &integrator)?;
            let res = plan_campaign(&loaded.scenario, &cfg)?;
            describe_campaign(report, &loaded, &res)?;
            if let Some(path) = output {
                write_csv(&path, &res)?;
                writeln!(report, "time series written to {}", path.display())?;
            }
            Ok(())
        }
        Command::Simulate {
            scenario,
            policy,
            integrator,
            output,
        } => {
            let loaded = resolve(&scenario)?;
            let cfg = config(&loaded, &integrator)?;
            let res = if policy == "optimal" {
                plan_campaign(&loaded.scenario, &cfg)?
            } else {
                let stages = loaded.policies.get(&policy).ok_or_else(|| {
                    let known: Vec<&str> = loaded.policies.keys().map(String::as_str).collect();
                    Failure::Usage(format!(
                        "unknown policy `{policy}` (available: optimal{}{})",
                        if known.is_empty() { "" } else { ", " },
                        known.join(", ")
                    ))
                })?;
                simulate_policy(&loaded.scenario, stages, &cfg)?
            };
            match output {
                Some(path) => {
                    write_csv(&path, &res)?;
                    describe_campaign(report, &loaded, &res)?;
                    writeln!(report, "time series written to {}", path.display())?;
                }
                None => {
                    scenario_io::emit_timeseries(&res, out)?;
                }
            }
            Ok(())
        }
        Command::Verify {
            scenario,
            grid_step,
            gamma_count,
            integrator,
        } => {
            let loaded = resolve(&scenario)?;
            let cfg = config(&loaded, &integrator)?;
            if gamma_count == 0 {
                return Err(Failure::Usage("--gamma-count must be at least 1".into()));
            }
            if verify(report, &loaded, grid_step, gamma_count, &cfg)? {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Reproduce {
            experiment,
            integrator,
            output,
        } => {
            if !matches!(experiment.as_str(), "exp1" | "exp2" | "exp3") {
                return Err(Failure::Usage(format!(
                    "unknown experiment `{experiment}` (expected exp1, exp2 or exp3)"
                )));
            }
            let loaded = scenario_io::load_preset(&experiment)?;
            let cfg = config(&loaded, &integrator)?;
            reproduce(report, &experiment, &loaded, &cfg, &output)
        }
    }
}

fn resolve(arg: &str) -> Result<LoadedScenario, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        return scenario_io::load_scenario(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())));
    }
    match scenario_io::preset_text(arg) {
        Some(_) => Ok(scenario_io::load_preset(arg)?),
        None => Err(Failure::Usage(format!(
            "`{arg}` is neither a readable file nor a bundled preset ({})",
            scenario_io::PRESETS.join(", ")
        ))),
    }
}

fn config(loaded: &LoadedScenario, args: &IntegratorArgs) -> Result<IntegratorConfig, Failure> {
    let mut cfg = loaded.integrator;
    cfg.dt = args.dt.unwrap_or(cfg.dt);
    cfg.t_max = args.t_max.unwrap_or(cfg.t_max);
    cfg.validate()?;
    Ok(cfg)
}

fn write_csv(path: &Path, res: &CampaignResult) -> Result<(), Failure> {
    let mut file =
        fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    scenario_io::emit_timeseries(res, &mut file)?;
    Ok(())
}

/// Rounds away representation noise for display.
fn num(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let scaled = (v * 1e12).round() / 1e12;
    format!("{}", if scaled == 0.0 { 0.0 } else { scaled })
}

fn rates_str(b: &ThreatRates) -> String {
    let parts: Vec<String> = b.as_slice().iter().map(|&v| num(v)).collect();
    format!("({})", parts.join(", "))
}

fn describe_campaign(
    report: &mut String,
    loaded: &LoadedScenario,
    res: &CampaignResult,
) -> std::fmt::Result {
    let scn = &loaded.scenario;
    writeln!(
        report,
        "scenario: B0 = {}, R0 = {}, r_R = {}, {} agent(s)",
        num(scn.blue()),
        num(scn.red()),
        num(scn.r_red()),
        scn.n_agents()
    )?;
    let mut t_start = 0.0;
    for (k, stage) in res.stages.iter().enumerate() {
        let target = stage
            .plan
            .target
            .map(|e| e.to_string())
            .unwrap_or_else(|| "mixed".into());
        writeln!(
            report,
            "stage {}: b = {}  P = {}  target = {}",
            k + 1,
            rates_str(&stage.plan.rates),
            stage.plan.allocation,
            target
        )?;
        if let Some(last) = stage.trajectory.last() {
            writeln!(
                report,
                "  t = {:.6} .. {:.6}  B = {:.6}  R = {:.6}  X = {:.6}",
                t_start, last.t, last.b, last.r, last.x
            )?;
            t_start = last.t;
        }
        for ev in &stage.trajectory.events {
            writeln!(report, "  {} eliminated at t = {:.6}", ev.entity, ev.t)?;
        }
        for c in &stage.trajectory.rate_crossings {
            writeln!(
                report,
                "  note: leading threat moved from {} to {} at t = {:.6} (allocation kept)",
                c.from, c.to, c.t
            )?;
        }
    }
    // Endgame with no agents left: closed-form check.
    if let Some(stage) = res.stages.last() {
        let first = stage.trajectory.samples.first();
        let all_gone = stage.plan.rates.as_slice()[1..].iter().all(|&b| b == 0.0);
        if let (Some(s), true, Some(Entity::Red)) = (first, all_gone, stage.plan.target) {
            let law = square_law_final(s.b, s.r, scn.r_red(), stage.scenario.delta());
            let text = match law {
                SquareLawOutcome::BlueSurvives(b) => format!("Blue survives with {b:.6}"),
                SquareLawOutcome::RedSurvives(r) => format!("Red survives with {r:.6}"),
                SquareLawOutcome::MutualAnnihilation => "mutual annihilation".into(),
            };
            writeln!(report, "square-law endgame: {text}")?;
        }
    }
    let outcome = match res.outcome {
        Outcome::BlueWins => "Blue wins".to_string(),
        Outcome::BlueAnnihilated => "Blue annihilated".to_string(),
        Outcome::Stalemate { horizon } => format!("stalemate at horizon t = {}", num(horizon)),
    };
    writeln!(
        report,
        "outcome: {outcome}; final B = {:.6}, R = {:.6}",
        res.final_state.b, res.final_state.r
    )
}

fn verify(
    report: &mut String,
    loaded: &LoadedScenario,
    grid_step: f64,
    gamma_count: usize,
    cfg: &IntegratorConfig,
) -> Result<bool, Failure> {
    let scn = &loaded.scenario;
    let eff = EffectiveScenario::new(scn.clone());
    let rates = threat_rates(&eff);
    writeln!(report, "threat rates b = {}", rates_str(&rates))?;

    let sc = verify_scalarized_min(
        &cross_coefficients(&eff),
        &rates,
        &gamma_grid(gamma_count),
        grid_step,
    )?;
    writeln!(
        report,
        "scalarization: vertex {} over {} lattice points, {} gamma values: {}",
        sc.vertex,
        sc.lattice_points,
        sc.per_gamma.len(),
        verdict(sc.passed)
    )?;
    for g in &sc.per_gamma {
        writeln!(
            report,
            "  gamma = {:.2}  grid min = {:.12}  F(vertex) = {:.12}",
            g.gamma, g.grid_min, g.vertex_value
        )?;
    }

    let moo = verify_moo_structure(&eff, &rates, grid_step)?;
    writeln!(
        report,
        "structure: C1 zero at vertices = {}, C1 >= 0 = {}, max |C2 - b.p|/C2 = {:.3e}, C2 max at leader = {}: {}",
        moo.c1_zero_at_vertices,
        moo.c1_nonnegative,
        moo.c2_max_rel_error,
        moo.c2_max_at_leader,
        verdict(moo.holds())
    )?;

    let dom = dominance_check(scn, grid_step, cfg)?;
    writeln!(
        report,
        "dominance: {} allocations vs {}, worst margin = {:.9} (tolerance -{:.3e}): {}",
        dom.margins.len(),
        dom.optimal,
        dom.worst_margin,
        dom.tolerance,
        verdict(dom.passed)
    )?;
    Ok(sc.passed && moo.holds() && dom.passed)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn reproduce(
    report: &mut String,
    name: &str,
    loaded: &LoadedScenario,
    cfg: &IntegratorConfig,
    dir: &Path,
) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    writeln!(report, "== {name} ==")?;
    let res = plan_campaign(&loaded.scenario, cfg)?;
    let first = &res.stages[0].plan;
    writeln!(report, "b = {}", rates_str(&first.rates))?;
    writeln!(report, "P* = {}", first.allocation)?;
    let seq: Vec<String> = res
        .stages
        .iter()
        .map(|s| s.plan.allocation.to_string())
        .collect();
    writeln!(report, "optimal plan: {}", seq.join(" -> "))?;
    describe_campaign(report, loaded, &res)?;
    let path = dir.join(format!("{name}_optimal.csv"));
    write_csv(&path, &res)?;
    writeln!(report, "wrote {}", path.display())?;

    for (policy, stages) in &loaded.policies {
        let res = simulate_policy(&loaded.scenario, stages, cfg)?;
        let seq: Vec<String> = stages.iter().map(|p| p.to_string()).collect();
        writeln!(report, "-- policy {policy}: {}", seq.join(" -> "))?;
        describe_campaign(report, loaded, &res)?;
        let path = dir.join(format!("{name}_{policy}.csv"));
        write_csv(&path, &res)?;
        writeln!(report, "wrote {}", path.display())?;
    }

    if name == "exp2" {
        exp2_variant(report, loaded, cfg, dir)?;
    }
    Ok(())
}

/// Stage one of experiment 2 under the listed rates and under r_2 = 0.2.
/// The reference pair (t1, B(t1)) = (0.7536, 106.3) is only near the latter.
fn exp2_variant(
    report: &mut String,
    loaded: &LoadedScenario,
    cfg: &IntegratorConfig,
    dir: &Path,
) -> Result<(), Failure> {
    writeln!(report, "-- stage 1 on A2, listed rates vs r2 = 0.2")?;
    let variant = scenario_io::load_preset("exp2-r2")?;
    for (label, scn) in [
        ("listed r2 = 0.4", &loaded.scenario),
        ("r2 = 0.2", &variant.scenario),
    ] {
        let eff = EffectiveScenario::new(scn.clone());
        let p = Allocation::vertex(scn.n_agents(), 2);
        let start = ForceState::initial(scn);
        let coeff = energy_coefficients(&eff, &p, &start)?;
        let x_end = scn.agent(2)?.a0 / scn.agent(2)?.r;
        let t_oracle = stage_time_oracle(&coeff, x_end)?;
        let b_oracle = coeff.blue_squared(x_end).sqrt();
        let res = simulate_policy(
            scn,
            &[p.clone(), Allocation::vertex(scn.n_agents(), 0)],
            cfg,
        )?;
        let end = res.stages[0].trajectory.last().cloned().unwrap_or(start);
        writeln!(
            report,
            "  {label}: t1 = {:.6} (quadrature {:.6}), B(t1) = {:.4} (closed form {:.4})",
            end.t, t_oracle, end.b, b_oracle
        )?;
    }
    writeln!(
        report,
        "  note: the reference values t1 = 0.7536, B(t1) = 106.3 do not follow from r2 = 0.4; they are close to the r2 = 0.2 run"
    )?;
    let res = simulate_policy(&variant.scenario, &variant.policies["A2-first"], cfg)?;
    let path = dir.join("exp2_r2-0.2.csv");
    write_csv(&path, &res)?;
    writeln!(report, "wrote {}", path.display())?;
    Ok(())
}
