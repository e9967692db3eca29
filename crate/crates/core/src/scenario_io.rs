//! Scenario files, bundled presets, and CSV time series.
//!
//! Scenario files are JSON:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "scenario": {
//!     "blue": 160.0, "red": 120.0, "r_red": 0.5,
//!     "agents": [ { "alpha_d": 0.15, "alpha_c": 0.4, "a0": 30.0, "r": 0.3 } ]
//!   },
//!   "integrator": { "dt": 0.001, "event_tol": 1e-9, "t_max": 100.0 },
//!   "policies": { "P1": [[0.7, 0.3]] }
//! }
//! ```
//!
//! `integrator` and `policies` are optional, as is every field inside
//! `integrator`. Unknown fields are rejected.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::IntegratorConfig;
use crate::error::Error as ModelError;
use crate::lanchester::{AgentSpec, Allocation, Scenario};
use crate::strategy::CampaignResult;

pub const SCHEMA_VERSION: u32 = 1;

/// Names of the bundled presets.
pub const PRESETS: [&str; 4] = ["exp1", "exp2", "exp3", "exp2-r2"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion(u32),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("malformed time series at line {line}: {message}")]
    TimeSeries { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub policies: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub blue: f64,
    pub red: f64,
    pub r_red: f64,
    pub agents: Vec<AgentSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub alpha_d: f64,
    pub alpha_c: f64,
    pub a0: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

/// A validated scenario with its run options.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub integrator: IntegratorConfig,
    /// Whether the file overrode any integrator setting.
    pub integrator_overridden: bool,
    pub policies: BTreeMap<String, Vec<Allocation>>,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a scenario file.
pub fn load_scenario(text: &str) -> Result<LoadedScenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => invalid(path, inner.to_string()),
            _ => ScenarioError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            },
        }
    })?;
    validate(&file)
}

fn validate(file: &ScenarioFile) -> Result<LoadedScenario, ScenarioError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::UnsupportedVersion(file.schema_version));
    }
    let s = &file.scenario;
    for (name, v) in [("blue", s.blue), ("red", s.red), ("r_red", s.r_red)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(
                format!("scenario.{name}"),
                format!("{v} must be > 0"),
            ));
        }
    }
    let mut agents = Vec::with_capacity(s.agents.len());
    for (i, a) in s.agents.iter().enumerate() {
        let path = |f: &str| format!("scenario.agents[{i}].{f}");
        if a.alpha_c < a.alpha_d {
            return Err(invalid(
                path("alpha_c"),
                format!("alpha_c ({}) < alpha_d ({})", a.alpha_c, a.alpha_d),
            ));
        }
        let spec = AgentSpec::new(a.alpha_d, a.alpha_c, a.a0, a.r).map_err(|e| match e {
            ModelError::InvalidParameter { field, reason } => invalid(path(&field), reason),
            other => invalid(format!("scenario.agents[{i}]"), other.to_string()),
        })?;
        agents.push(spec);
    }
    let scenario = Scenario::new(s.blue, s.red, s.r_red, agents)
        .map_err(|e| invalid("scenario", e.to_string()))?;

    let mut integrator = IntegratorConfig::default();
    let mut integrator_overridden = false;
    if let Some(o) = &file.integrator {
        integrator_overridden = o.dt.is_some() || o.event_tol.is_some() || o.t_max.is_some();
        integrator.dt = o.dt.unwrap_or(integrator.dt);
        integrator.event_tol = o.event_tol.unwrap_or(integrator.event_tol);
        integrator.t_max = o.t_max.unwrap_or(integrator.t_max);
        integrator.validate().map_err(|e| match e {
            ModelError::InvalidParameter { field, reason } => {
                invalid(format!("integrator.{field}"), reason)
            }
            other => invalid("integrator", other.to_string()),
        })?;
    }

    let mut policies = BTreeMap::new();
    for (name, stages) in &file.policies {
        if stages.is_empty() {
            return Err(invalid(format!("policies.{name}"), "policy has no stages"));
        }
        let mut allocs = Vec::with_capacity(stages.len());
        for (k, p) in stages.iter().enumerate() {
            let path = format!("policies.{name}[{k}]");
            if p.len() != scenario.n_agents() + 1 {
                return Err(invalid(
                    path,
                    format!("{} entries, expected {}", p.len(), scenario.n_agents() + 1),
                ));
            }
            allocs.push(Allocation::new(p.clone()).map_err(|e| invalid(path, e.to_string()))?);
        }
        policies.insert(name.clone(), allocs);
    }

    Ok(LoadedScenario {
        scenario,
        integrator,
        integrator_overridden,
        policies,
    })
}

impl LoadedScenario {
    pub fn to_file(&self) -> ScenarioFile {
        let scn = &self.scenario;
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            scenario: ScenarioSection {
                blue: scn.blue(),
                red: scn.red(),
                r_red: scn.r_red(),
                agents: scn
                    .agents()
                    .iter()
                    .map(|a| AgentSection {
                        alpha_d: a.alpha_d,
                        alpha_c: a.alpha_c,
                        a0: a.a0,
                        r: a.r,
                    })
                    .collect(),
            },
            integrator: self.integrator_overridden.then_some(IntegratorSection {
                dt: Some(self.integrator.dt),
                event_tol: Some(self.integrator.event_tol),
                t_max: Some(self.integrator.t_max),
            }),
            policies: self
                .policies
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|p| p.as_slice().to_vec()).collect()))
                .collect(),
        }
    }

    /// Pretty JSON in the scenario schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }
}

/// Raw JSON of a bundled preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "exp1" => include_str!("../presets/exp1.json"),
        "exp2" => include_str!("../presets/exp2.json"),
        "exp3" => include_str!("../presets/exp3.json"),
        "exp2-r2" => include_str!("../presets/exp2-r2.json"),
        _ => return None,
    })
}

pub fn load_preset(name: &str) -> Result<LoadedScenario, ScenarioError> {
    load_scenario(preset_text(name).ok_or_else(|| ScenarioError::UnknownPreset(name.into()))?)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub stage: usize,
    pub b: f64,
    pub r: f64,
    pub a: Vec<f64>,
    pub p: Vec<f64>,
}

/// `t,stage,B,R,A1..An,p0..pn`.
pub fn timeseries_header(n_agents: usize) -> String {
    let mut cols = vec!["t".to_string(), "stage".into(), "B".into(), "R".into()];
    cols.extend((1..=n_agents).map(|i| format!("A{i}")));
    cols.extend((0..=n_agents).map(|j| format!("p{j}")));
    cols.join(",")
}

/// One record per sample of every stage. The first sample of a stage
/// repeats the time of the previous stage's last sample.
pub fn timeseries_records(result: &CampaignResult) -> Vec<TimeSeriesRecord> {
    result
        .stages
        .iter()
        .enumerate()
        .flat_map(|(k, stage)| {
            let p = stage.plan.allocation.as_slice().to_vec();
            stage
                .trajectory
                .samples
                .iter()
                .map(move |s| TimeSeriesRecord {
                    t: s.t,
                    stage: k,
                    b: s.b,
                    r: s.r,
                    a: s.a.clone(),
                    p: p.clone(),
                })
        })
        .collect()
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV with 17 significant digits per value. Returns bytes written.
pub fn write_timeseries<W: Write + ?Sized>(
    n_agents: usize,
    records: &[TimeSeriesRecord],
    sink: &mut W,
) -> io::Result<usize> {
    let mut written = 0;
    let header = timeseries_header(n_agents);
    sink.write_all(header.as_bytes())?;
    sink.write_all(b"\n")?;
    written += header.len() + 1;
    let mut line = String::new();
    for rec in records {
        line.clear();
        line.push_str(&fmt_num(rec.t));
        line.push(',');
        line.push_str(&rec.stage.to_string());
        for v in [rec.b, rec.r].iter().chain(&rec.a).chain(&rec.p) {
            line.push(',');
            line.push_str(&fmt_num(*v));
        }
        line.push('\n');
        sink.write_all(line.as_bytes())?;
        written += line.len();
    }
    Ok(written)
}

/// Emits the campaign as CSV. Returns bytes written.
pub fn emit_timeseries<W: Write + ?Sized>(
    result: &CampaignResult,
    sink: &mut W,
) -> io::Result<usize> {
    let n = result.final_state.a.len();
    write_timeseries(n, &timeseries_records(result), sink)
}

/// Parses CSV produced by [`write_timeseries`]. Returns the agent count and
/// the records.
pub fn parse_timeseries(text: &str) -> Result<(usize, Vec<TimeSeriesRecord>), ScenarioError> {
    let err = |line: usize, message: String| ScenarioError::TimeSeries { line, message };
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    let cols = header.split(',').count();
    if cols < 5 || (cols - 5) % 2 != 0 {
        return Err(err(1, format!("unexpected column count {cols}")));
    }
    let n = (cols - 5) / 2;
    if header != timeseries_header(n) {
        return Err(err(1, format!("unexpected header `{header}`")));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(err(
                lineno,
                format!("{} fields, expected {cols}", fields.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(lineno, format!("`{s}`: {e}")))
        };
        let values = fields
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 1)
            .map(|(_, s)| num(s))
            .collect::<Result<Vec<_>, _>>()?;
        let stage = fields[1]
            .parse::<usize>()
            .map_err(|e| err(lineno, format!("stage `{}`: {e}", fields[1])))?;
        records.push(TimeSeriesRecord {
            t: values[0],
            stage,
            b: values[1],
            r: values[2],
            a: values[3..3 + n].to_vec(),
            p: values[3 + n..].to_vec(),
        });
    }
    Ok((n, records))
}

/// Any report as pretty JSON.
pub fn report_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}
