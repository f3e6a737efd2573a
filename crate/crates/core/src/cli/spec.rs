//! Fully resolved run descriptions. A `RunSpec` carries every default that
//! went into a run, is embedded in `manifest.json`, and can be executed
//! again to reproduce the original outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dist::{FamilyId, InitialProfile, ShapeParam};
use crate::error::{Error, Result};
use crate::output;
use crate::scaling::{
    balanced_qc, critical_habitat, critical_population, nondimensionalize, ModelExponents, NondimProblem,
    PhysicalParams, Regime, SurvivalDirection,
};
use crate::solver::{simulate, FatePolicy, Outcome, Resolution, StopReason};
use crate::threshold::{estimate_alpha_min, estimate_qc, sweep, ScanConfig, SweepConfig, ThresholdEstimate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_SCAN_FAILED: i32 = 3;

/// Nondimensional `Q` or the physical data it is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProblemInput {
    Q { q: f64 },
    Physical(PhysicalParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub exponents: ModelExponents,
    pub family: FamilyId,
    pub alpha: f64,
    pub input: ProblemInput,
    pub resolution: Resolution,
    pub policy: FatePolicy,
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcSpec {
    pub exponents: ModelExponents,
    pub family: FamilyId,
    pub alpha: f64,
    pub scan: ScanConfig,
    pub resolution: Resolution,
    pub policy: FatePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaMinSpec {
    pub exponents: ModelExponents,
    pub family: FamilyId,
    pub q: f64,
    pub scan: ScanConfig,
    pub resolution: Resolution,
    pub policy: FatePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub config: SweepConfig,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSpec {
    pub exponents: ModelExponents,
    pub a: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub n0: Option<f64>,
    pub l: Option<f64>,
    /// Supplied `Q_c`; computed from the family when absent.
    pub qc: Option<f64>,
    pub family: FamilyId,
    pub alpha: f64,
    pub scan: Option<ScanConfig>,
    pub resolution: Resolution,
    pub policy: FatePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunSpec {
    Simulate(SimulateSpec),
    Qc(QcSpec),
    AlphaMin(AlphaMinSpec),
    Sweep(SweepSpec),
    Critical(CriticalSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub preset: Option<String>,
    pub spec: RunSpec,
    pub result: serde_json::Value,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// What a run printed, returned and wrote.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: i32,
    pub lines: Vec<String>,
    /// Diagnostics for stderr.
    pub errors: Vec<String>,
    pub files: Vec<PathBuf>,
    pub result: serde_json::Value,
}

impl RunReport {
    fn new(exit_code: i32) -> Self {
        RunReport {
            exit_code,
            lines: Vec::new(),
            errors: Vec::new(),
            files: Vec::new(),
            result: serde_json::Value::Null,
        }
    }
}

impl RunSpec {
    /// Runs the spec, writes its files and the manifest into `out`.
    pub fn execute(&self, out: &Path, preset: Option<&str>) -> Result<RunReport> {
        self.validate()?;
        fs::create_dir_all(out)?;
        let mut report = match self {
            RunSpec::Simulate(s) => run_simulate(s, out)?,
            RunSpec::Qc(s) => run_qc(s, out)?,
            RunSpec::AlphaMin(s) => run_alpha_min(s, out)?,
            RunSpec::Sweep(s) => run_sweep(s, out)?,
            RunSpec::Critical(s) => run_critical(s)?,
        };
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            preset: preset.map(str::to_owned),
            spec: self.clone(),
            result: report.result.clone(),
        };
        let path = out.join(output::MANIFEST_FILE);
        output::write_json(&path, &manifest)?;
        report.files.push(path);
        Ok(report)
    }

    /// Checks everything that can be checked before computing.
    pub fn validate(&self) -> Result<()> {
        match self {
            RunSpec::Simulate(s) => {
                ShapeParam::new(s.alpha)?;
                s.exponents.require_conditional()?;
                if let ProblemInput::Q { q } = s.input {
                    positive("Q", q)?;
                }
                if s.snapshots.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(Error::InvalidParameter("snapshot times must be finite and >= 0".into()));
                }
                Ok(())
            }
            RunSpec::Qc(s) => {
                ShapeParam::new(s.alpha)?;
                s.exponents.require_conditional()?;
                s.scan.validate()
            }
            RunSpec::AlphaMin(s) => {
                positive("Q", s.q)?;
                if s.exponents.regime() != Regime::Conditional {
                    s.exponents.require_conditional()?;
                    return Err(Error::InvalidParameter(format!(
                        "mu = nu = {}: the critical value does not depend on alpha",
                        s.exponents.mu()
                    )));
                }
                if s.family == FamilyId::Homogeneous {
                    return Err(Error::InvalidParameter("alpha scans need the f1 or f2 family".into()));
                }
                s.scan.validate()
            }
            RunSpec::Sweep(s) => {
                if s.workers == 0 {
                    return Err(Error::InvalidParameter("workers must be at least 1".into()));
                }
                Ok(())
            }
            RunSpec::Critical(s) => {
                s.exponents.require_conditional()?;
                positive("a", s.a)?;
                positive("D", s.d)?;
                ShapeParam::new(s.alpha)?;
                for (name, v) in [("n0", s.n0), ("l", s.l), ("Q_c", s.qc)] {
                    if let Some(v) = v {
                        positive(name, v)?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn stop_label(r: StopReason) -> &'static str {
    match r {
        StopReason::PopulationFloor => "population_floor",
        StopReason::PopulationCeiling => "population_ceiling",
        StopReason::BlowupGuard => "blowup_guard",
        StopReason::SustainedDecay => "sustained_decay",
        StopReason::SustainedGrowth => "sustained_growth",
        StopReason::HorizonReached => "horizon_reached",
    }
}

fn run_simulate(s: &SimulateSpec, out: &Path) -> Result<RunReport> {
    let profile = InitialProfile::new(s.family, ShapeParam::new(s.alpha)?)?;
    let problem = match s.input {
        ProblemInput::Q { q } => NondimProblem::from_q(s.exponents, q, profile)?,
        ProblemInput::Physical(p) => nondimensionalize(s.exponents, p, profile)?,
    };
    let grid = s.resolution.grid(problem.length)?;
    let (fate, snaps) = simulate(&problem, &grid, &s.policy, &s.snapshots)?;

    let mut report = RunReport::new(match fate.outcome {
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    });
    let traj = out.join(output::TRAJECTORY_FILE);
    output::write_trajectory(&traj, &fate.trajectory)?;
    report.files.push(traj);
    for snap in &snaps {
        report.files.push(output::write_snapshot(out, snap, &grid)?);
    }

    report.lines.push(format!("Q = {}", output::fmt_num(problem.q)));
    report.lines.push(format!(
        "fate: {} ({}) at T = {}",
        fate.outcome,
        stop_label(fate.stop_reason),
        output::fmt_num(fate.stop_time)
    ));
    report.lines.push(format!(
        "N(0) = {}, N(T) = {}, steps = {}",
        output::fmt_num(fate.initial_population),
        output::fmt_num(fate.final_population()),
        fate.steps
    ));
    let dropped = s.snapshots.len() - snaps.len();
    if dropped > 0 {
        report
            .lines
            .push(format!("{dropped} snapshot time(s) after the stop time were skipped"));
    }
    report.result = serde_json::json!({
        "q": problem.q,
        "length": problem.length,
        "grid": grid,
        "outcome": fate.outcome,
        "stop_reason": fate.stop_reason,
        "stop_time": fate.stop_time,
        "steps": fate.steps,
        "initial_population": fate.initial_population,
        "final_population": fate.final_population(),
        "snapshots": snaps.iter().map(|s| s.requested).collect::<Vec<_>>(),
    });
    Ok(report)
}

fn estimate_lines(name: &str, est: &ThresholdEstimate) -> Vec<String> {
    let mut lines = vec![
        format!("{name} ~ {}", output::fmt_num(est.estimate)),
        format!(
            "bracket: extinction at {}, growth at {} ({} evaluations, {})",
            output::fmt_num(est.lower),
            output::fmt_num(est.upper),
            est.evaluations,
            est.status
        ),
    ];
    if est.capped {
        lines.push("warning: growth end of the bracket is the scan start; raise the start".into());
    }
    lines
}

fn write_estimate(
    out: &Path,
    axis_value: f64,
    result: &Result<ThresholdEstimate>,
    report: &mut RunReport,
) -> Result<()> {
    let table = out.join(output::SWEEP_FILE);
    output::write_single_estimate(&table, axis_value, result)?;
    report.files.push(table);
    if let Ok(est) = result {
        let trace = out.join(output::SCAN_FILE);
        output::write_scan_trace(&trace, &est.per_point_fates)?;
        report.files.push(trace);
    }
    Ok(())
}

fn finish_estimate(name: &str, axis_value: f64, result: Result<ThresholdEstimate>, out: &Path) -> Result<RunReport> {
    let mut report = RunReport::new(if result.is_ok() { EXIT_OK } else { EXIT_SCAN_FAILED });
    write_estimate(out, axis_value, &result, &mut report)?;
    match &result {
        Ok(est) => {
            report.lines.extend(estimate_lines(name, est));
            report.result = serde_json::to_value(est)?;
        }
        Err(e) => {
            report.errors.push(format!("error: {e}"));
            report.result = serde_json::json!({ "error": e.to_string() });
        }
    }
    Ok(report)
}

fn run_qc(s: &QcSpec, out: &Path) -> Result<RunReport> {
    let result = estimate_qc(
        s.exponents,
        s.family,
        ShapeParam::new(s.alpha)?,
        &s.scan,
        &s.resolution,
        &s.policy,
    );
    finish_estimate("Q_c", s.alpha, result, out)
}

fn run_alpha_min(s: &AlphaMinSpec, out: &Path) -> Result<RunReport> {
    let result = estimate_alpha_min(s.exponents, s.family, s.q, &s.scan, &s.resolution, &s.policy);
    finish_estimate("alpha_min", s.q, result, out)
}

fn run_sweep(s: &SweepSpec, out: &Path) -> Result<RunReport> {
    let rows = sweep(&s.config, s.workers)?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    let mut report = RunReport::new(if failed == 0 { EXIT_OK } else { EXIT_SCAN_FAILED });
    let table = out.join(output::SWEEP_FILE);
    output::write_sweep(&table, &rows)?;
    report.files.push(table);
    for r in &rows {
        report.lines.push(match &r.result {
            Ok(est) => format!(
                "{} -> {} [{}, {}]",
                output::fmt_num(r.point),
                output::fmt_num(est.estimate),
                output::fmt_num(est.lower),
                output::fmt_num(est.upper)
            ),
            Err(e) => format!("{} -> error: {e}", output::fmt_num(r.point)),
        });
    }
    if failed > 0 {
        report
            .errors
            .push(format!("error: {failed} of {} points failed", rows.len()));
    }
    report.result = serde_json::Value::Array(
        rows.iter()
            .map(|r| {
                serde_json::json!({
                    "point": r.point,
                    "pilot": r.pilot,
                    "step": r.step_used,
                    "estimate": r.result.as_ref().ok(),
                    "status": output::row_status(&r.result),
                })
            })
            .collect(),
    );
    Ok(report)
}

fn direction_text(d: SurvivalDirection) -> &'static str {
    match d {
        SurvivalDirection::MinimumSize => "survival needs l >= l_c",
        SurvivalDirection::MaximumSize => "survival needs l <= l_c",
    }
}

fn run_critical(s: &CriticalSpec) -> Result<RunReport> {
    let exps = s.exponents;
    let (qc, qc_source) = match (s.qc, exps.regime()) {
        (Some(q), _) => (q, "supplied"),
        (None, Regime::Balanced) => (balanced_qc(exps.mu()), "exact pi^2/mu"),
        (None, _) => {
            let scan = s
                .scan
                .ok_or_else(|| Error::InvalidParameter("no Q_c and no scan configuration".into()))?;
            let est = estimate_qc(
                exps,
                s.family,
                ShapeParam::new(s.alpha)?,
                &scan,
                &s.resolution,
                &s.policy,
            )?;
            (est.estimate, "computed")
        }
    };
    let mut report = RunReport::new(EXIT_OK);
    report
        .lines
        .push(format!("Q_c = {} ({qc_source})", output::fmt_num(qc)));
    let mut result = serde_json::json!({ "qc": qc });

    if exps.is_size_free() {
        let n0c = critical_population(exps, qc, s.a, s.d, 1.0)?;
        report.lines.push(format!(
            "mu = nu + 2: the habitat size drops out of Q; survival requires n0 >= {} for every l",
            output::fmt_num(n0c)
        ));
        result["n0_critical"] = n0c.into();
        if s.n0.is_some() {
            report.exit_code = EXIT_INVALID;
            report
                .errors
                .push("error: no critical habitat size exists in this case".into());
        }
        report.result = result;
        return Ok(report);
    }

    if exps.regime() == Regime::Balanced {
        let hab = critical_habitat(exps, qc, s.a, s.d, s.n0.unwrap_or(1.0))?;
        report.lines.push(format!(
            "l_c = {} ({}), independent of n0",
            output::fmt_num(hab.size),
            direction_text(hab.direction)
        ));
        result["l_critical"] = hab.size.into();
        result["direction"] = serde_json::to_value(hab.direction)?;
        if s.l.is_some() {
            report.exit_code = EXIT_INVALID;
            report
                .errors
                .push(format!("error: {}", Error::PopulationUnconstrained { mu: exps.mu() }));
        }
        report.result = result;
        return Ok(report);
    }

    if s.n0.is_none() && s.l.is_none() {
        return Err(Error::InvalidParameter(
            "give --n0 for the critical habitat size or --l for the critical population".into(),
        ));
    }
    if let Some(n0) = s.n0 {
        let hab = critical_habitat(exps, qc, s.a, s.d, n0)?;
        report.lines.push(format!(
            "l_c = {} ({})",
            output::fmt_num(hab.size),
            direction_text(hab.direction)
        ));
        result["l_critical"] = hab.size.into();
        result["direction"] = serde_json::to_value(hab.direction)?;
    }
    if let Some(l) = s.l {
        let n0c = critical_population(exps, qc, s.a, s.d, l)?;
        report.lines.push(format!("n0_c = {}", output::fmt_num(n0c)));
        result["n0_critical"] = n0c.into();
    }
    report.result = result;
    Ok(report)
}
