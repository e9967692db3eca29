//! C interface to the `lanchester-ncw` planner.
//!
//! Scenarios and campaign results are opaque handles owned by the caller
//! and released with the matching `_free` function. Every fallible call
//! returns an [`NcwStatus`]; on failure [`ncw_last_error_message`] describes
//! the cause. Outputs are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lanchester_ncw::scenario_io;
use lanchester_ncw::{
    plan_campaign, simulate_policy, square_law_final, threat_rates, AgentSpec, Allocation,
    CampaignResult, EffectiveScenario, Entity, Error, IntegratorConfig, Outcome, Scenario,
    SquareLawOutcome,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcwOutcome {
    BlueWins = 0,
    BlueAnnihilated = 1,
    /// Time horizon reached with both sides standing.
    Stalemate = 2,
}

/// Opaque scenario handle.
pub struct NcwScenario(Scenario);

/// Opaque campaign result handle.
pub struct NcwCampaign(CampaignResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Fail(NcwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NonFiniteState { .. } | Error::QuadratureDiverged { .. } => NcwStatus::Numerical,
            _ => NcwStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

impl From<scenario_io::ScenarioError> for Fail {
    fn from(e: scenario_io::ScenarioError) -> Self {
        Fail(NcwStatus::InvalidInput, e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> NcwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcwStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NcwStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(NcwStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(NcwStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn ncw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a scenario from per-agent parameter arrays of length `n_agents`.
///
/// # Safety
/// Each array must hold `n_agents` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_scenario_new(
    blue: f64,
    red: f64,
    r_red: f64,
    n_agents: usize,
    alpha_d: *const f64,
    alpha_c: *const f64,
    a0: *const f64,
    r: *const f64,
    out: *mut *mut NcwScenario,
) -> NcwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ad = slice(alpha_d, n_agents, "alpha_d")?;
        let ac = slice(alpha_c, n_agents, "alpha_c")?;
        let a0 = slice(a0, n_agents, "a0")?;
        let r = slice(r, n_agents, "r")?;
        let agents = (0..n_agents)
            .map(|i| AgentSpec::new(ad[i], ac[i], a0[i], r[i]))
            .collect::<Result<Vec<_>, _>>()?;
        *out = boxed(NcwScenario(Scenario::new(blue, red, r_red, agents)?));
        Ok(())
    })
}

/// Parses a scenario document (JSON schema of the command-line tool).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_scenario_from_json(
    json: *const c_char,
    out: *mut *mut NcwScenario,
) -> NcwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let loaded = scenario_io::load_scenario(text(json, "json")?)?;
        *out = boxed(NcwScenario(loaded.scenario));
        Ok(())
    })
}

/// Loads a bundled scenario: `exp1`, `exp2`, `exp3` or `exp2-r2`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_scenario_preset(
    name: *const c_char,
    out: *mut *mut NcwScenario,
) -> NcwStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let loaded = scenario_io::load_preset(text(name, "name")?)?;
        *out = boxed(NcwScenario(loaded.scenario));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncw_scenario_free(scenario: *mut NcwScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_scenario_agent_count(
    scenario: *const NcwScenario,
    out: *mut usize,
) -> NcwStatus {
    guard(|| {
        let scn = deref(scenario, "scenario")?;
        *out_ptr(out, "out")? = scn.0.n_agents();
        Ok(())
    })
}

/// Writes the `n_agents + 1` threatening rates (Red first) to `out`.
///
/// # Safety
/// `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn ncw_threat_rates(
    scenario: *const NcwScenario,
    out: *mut f64,
    len: usize,
) -> NcwStatus {
    guard(|| {
        let scn = deref(scenario, "scenario")?;
        let b = threat_rates(&EffectiveScenario::new(scn.0.clone()));
        if len < b.len() {
            return Err(Fail(
                NcwStatus::BufferTooSmall,
                format!("need {} values, buffer holds {len}", b.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(b.as_slice().as_ptr(), out, b.len());
        Ok(())
    })
}

fn config(dt: f64, t_max: f64) -> Result<IntegratorConfig, Fail> {
    let d = IntegratorConfig::default();
    Ok(IntegratorConfig::new(dt, d.event_tol, t_max)?)
}

/// Plans the campaign with the threat-rate rule.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_plan_campaign(
    scenario: *const NcwScenario,
    dt: f64,
    t_max: f64,
    out: *mut *mut NcwCampaign,
) -> NcwStatus {
    guard(|| {
        let scn = deref(scenario, "scenario")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(NcwCampaign(plan_campaign(&scn.0, &config(dt, t_max)?)?));
        Ok(())
    })
}

/// Runs a fixed policy. `allocations` holds `n_stages` rows of
/// `n_agents + 1` fractions, row-major; the last row is reused if the
/// battle outlasts the policy.
///
/// # Safety
/// `allocations` must hold `n_stages * (n_agents + 1)` values.
#[no_mangle]
pub unsafe extern "C" fn ncw_simulate_policy(
    scenario: *const NcwScenario,
    allocations: *const f64,
    n_stages: usize,
    dt: f64,
    t_max: f64,
    out: *mut *mut NcwCampaign,
) -> NcwStatus {
    guard(|| {
        let scn = deref(scenario, "scenario")?;
        let out = out_ptr(out, "out")?;
        let width = scn.0.n_agents() + 1;
        let flat = slice(allocations, n_stages * width, "allocations")?;
        let policy = flat
            .chunks(width)
            .map(|row| Allocation::new(row.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        *out = boxed(NcwCampaign(simulate_policy(
            &scn.0,
            &policy,
            &config(dt, t_max)?,
        )?));
        Ok(())
    })
}

/// # Safety
/// `campaign` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncw_campaign_free(campaign: *mut NcwCampaign) {
    if !campaign.is_null() {
        drop(Box::from_raw(campaign));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_campaign_outcome(
    campaign: *const NcwCampaign,
    out: *mut NcwOutcome,
) -> NcwStatus {
    guard(|| {
        let c = deref(campaign, "campaign")?;
        *out_ptr(out, "out")? = match c.0.outcome {
            Outcome::BlueWins => NcwOutcome::BlueWins,
            Outcome::BlueAnnihilated => NcwOutcome::BlueAnnihilated,
            Outcome::Stalemate { .. } => NcwOutcome::Stalemate,
        };
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_campaign_stage_count(
    campaign: *const NcwCampaign,
    out: *mut usize,
) -> NcwStatus {
    guard(|| {
        *out_ptr(out, "out")? = deref(campaign, "campaign")?.0.stages.len();
        Ok(())
    })
}

/// Target of stage `stage` (0-based): 0 for Red, `i` for agent `i`, -1 for
/// a mixed allocation.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_campaign_stage_target(
    campaign: *const NcwCampaign,
    stage: usize,
    out: *mut i32,
) -> NcwStatus {
    guard(|| {
        let c = deref(campaign, "campaign")?;
        let out = out_ptr(out, "out")?;
        let s = c.0.stages.get(stage).ok_or_else(|| {
            Fail(
                NcwStatus::InvalidInput,
                format!("stage {stage} out of range ({} stages)", c.0.stages.len()),
            )
        })?;
        *out = match s.plan.target {
            None => -1,
            Some(Entity::Agent(id)) => id as i32,
            Some(_) => 0,
        };
        Ok(())
    })
}

/// Time, Blue and Red strengths at the end of the campaign. Any output
/// pointer may be null.
///
/// # Safety
/// Non-null pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_campaign_final_state(
    campaign: *const NcwCampaign,
    t: *mut f64,
    blue: *mut f64,
    red: *mut f64,
) -> NcwStatus {
    guard(|| {
        let s = &deref(campaign, "campaign")?.0.final_state;
        for (p, v) in [(t, s.t), (blue, s.b), (red, s.r)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Time series as CSV text. Release with [`ncw_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ncw_campaign_timeseries_csv(
    campaign: *const NcwCampaign,
    out: *mut *mut c_char,
) -> NcwStatus {
    guard(|| {
        let c = deref(campaign, "campaign")?;
        let out = out_ptr(out, "out")?;
        let mut buf = Vec::new();
        scenario_io::emit_timeseries(&c.0, &mut buf).expect("writing to memory");
        *out = CString::new(buf).expect("CSV has no NUL bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ncw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Square-law endgame once every agent is gone. Writes the survivors'
/// strengths; the loser's entry is 0 (both are 0 on mutual annihilation).
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncw_square_law_final(
    blue: f64,
    red: f64,
    r_red: f64,
    delta: f64,
    blue_out: *mut f64,
    red_out: *mut f64,
) -> NcwStatus {
    guard(|| {
        let finite_pos = |v: f64| v.is_finite() && v >= 0.0;
        if !(finite_pos(blue) && finite_pos(red) && r_red > 0.0 && finite_pos(delta)) {
            return Err(Fail(
                NcwStatus::InvalidInput,
                "strengths and delta must be finite and >= 0, r_red > 0".into(),
            ));
        }
        let blue_out = out_ptr(blue_out, "blue_out")?;
        let red_out = out_ptr(red_out, "red_out")?;
        (*blue_out, *red_out) = match square_law_final(blue, red, r_red, delta) {
            SquareLawOutcome::BlueSurvives(b) => (b, 0.0),
            SquareLawOutcome::RedSurvives(r) => (0.0, r),
            SquareLawOutcome::MutualAnnihilation => (0.0, 0.0),
        };
        Ok(())
    })
}
