//! Critical values by descending scans.
//!
//! A scan walks the lattice `v_r = start − r·step` downwards from a value
//! whose fate is growth until the first extinction at `r = R`, giving the
//! bracket `(v_R, v_{R-1})`. With `coarsening = c > 1` the lattice is first
//! walked with stride `c^p`, then `c^{p-1}`, ... down to 1, each pass
//! resuming from the last growth index. When survival is monotone in the
//! scanned value this returns exactly the bracket of the plain walk with
//! far fewer evaluations; `coarsening = 1` gives the plain walk.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{FamilyId, InitialProfile, ShapeParam};
use crate::error::{Error, Result};
use crate::scaling::{ModelExponents, NondimProblem, Regime};
use crate::solver::{classify_fate, FatePolicy, FateReport, Outcome, Resolution};

/// Default upper end of α-scans; results that hit it are flagged.
pub const DEFAULT_ALPHA_START: f64 = 1000.0;
pub const DEFAULT_COARSENING: usize = 10;
/// Pilot scans in sweeps use `start / PILOT_DIVISIONS` as their step.
pub const PILOT_DIVISIONS: f64 = 50.0;
/// Sweep steps are shrunk to at most this fraction of the pilot estimate.
pub const PILOT_FRACTION: f64 = 0.01;

/// Trajectories are not needed while scanning.
const SCAN_TRAJECTORY_STRIDE: usize = 1 << 20;

/// `max(2π²/μ, 12)`.
pub fn default_q_start(mu: f64) -> f64 {
    (2.0 * PI * PI / mu).max(12.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub start: f64,
    pub step: f64,
    pub max_iters: usize,
    /// Bisect inside the lattice bracket after the scan.
    pub refine: bool,
    pub refine_tol: f64,
    #[serde(default = "default_coarsening")]
    pub coarsening: usize,
}

fn default_coarsening() -> usize {
    DEFAULT_COARSENING
}

impl ScanConfig {
    /// Scan from `start` with `step`, enough iterations to reach 0, no
    /// refinement.
    pub fn new(start: f64, step: f64) -> Result<Self> {
        let cfg = ScanConfig {
            start,
            step,
            max_iters: iterations_to_zero(start, step),
            refine: false,
            refine_tol: step / 100.0,
            coarsening: DEFAULT_COARSENING,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn for_qc(exps: ModelExponents, step: f64) -> Result<Self> {
        ScanConfig::new(default_q_start(exps.mu()), step)
    }

    pub fn for_alpha(step: f64) -> Result<Self> {
        ScanConfig::new(DEFAULT_ALPHA_START, step)
    }

    pub fn with_refine(mut self, tol: f64) -> Self {
        self.refine = true;
        self.refine_tol = tol;
        self
    }

    pub fn with_coarsening(mut self, c: usize) -> Self {
        self.coarsening = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.start > 0.0 && self.start.is_finite()) {
            return bad(format!("scan start must be positive, got {}", self.start));
        }
        if !(self.step > 0.0 && self.step < self.start) {
            return bad(format!(
                "scan step must satisfy 0 < step < start, got step {} with start {}",
                self.step, self.start
            ));
        }
        if (self.max_iters as f64) * self.step < self.start * (1.0 - 1e-12) {
            return bad(format!(
                "max_iters * step = {} cannot reach 0 from start {}",
                self.max_iters as f64 * self.step,
                self.start
            ));
        }
        if self.refine && !(self.refine_tol > 0.0) {
            return bad(format!("refine_tol must be positive, got {}", self.refine_tol));
        }
        if self.coarsening == 0 {
            return bad("coarsening must be at least 1".into());
        }
        Ok(())
    }

    /// `v_r = start − r·step`, rounded to 12 significant digits so lattice
    /// values print cleanly.
    pub fn value(&self, r: usize) -> f64 {
        round_sig(self.start - r as f64 * self.step, 12)
    }

    /// First index whose value is zero or negative (up to rounding).
    fn zero_index(&self) -> usize {
        let eps = 1e-9 * self.step;
        let mut r = (self.start / self.step).floor() as usize;
        while self.value(r) > eps {
            r += 1;
        }
        while r > 0 && self.value(r - 1) <= eps {
            r -= 1;
        }
        r
    }
}

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let scale = 10f64.powi(digits - 1 - v.abs().log10().floor() as i32);
    if !scale.is_finite() {
        return v;
    }
    (v * scale).round() / scale
}

fn iterations_to_zero(start: f64, step: f64) -> usize {
    if step > 0.0 && start.is_finite() {
        (start / step).ceil().max(1.0) as usize
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStatus {
    /// Extinction and growth bracket the threshold.
    Bracketed,
    /// The homogeneous profile already survives; `α_min = 0`.
    AlreadySurvives,
}

impl std::fmt::Display for ScanStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScanStatus::Bracketed => "bracketed",
            ScanStatus::AlreadySurvives => "already_survives",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    /// Largest value seen to go extinct (`Q*` or `α**`).
    pub lower: f64,
    /// Smallest value seen to grow (`Q**` or `α*`).
    pub upper: f64,
    pub estimate: f64,
    pub evaluations: usize,
    /// Every probe in evaluation order.
    pub per_point_fates: Vec<(f64, Outcome)>,
    pub status: ScanStatus,
    /// The growth end of the bracket is the scan start itself, so the true
    /// threshold may lie above it.
    pub capped: bool,
    /// Lattice bracket before refinement.
    pub coarse_bracket: Option<(f64, f64)>,
}

/// Builds the problem at `q` and classifies it.
pub fn classify_at(
    exps: ModelExponents,
    profile: InitialProfile,
    q: f64,
    resolution: &Resolution,
    policy: &FatePolicy,
) -> Result<FateReport> {
    let problem = NondimProblem::from_q(exps, q, profile)?;
    let grid = resolution.grid(problem.length)?;
    classify_fate(&problem, &grid, policy)
}

fn scan_policy(policy: &FatePolicy) -> FatePolicy {
    FatePolicy {
        trajectory_stride: SCAN_TRAJECTORY_STRIDE,
        ..*policy
    }
}

/// Records every probe so the trace can be checked afterwards.
struct Probe<F> {
    eval: F,
    fates: Vec<(f64, Outcome)>,
}

impl<F: FnMut(f64) -> Result<Outcome>> Probe<F> {
    fn new(eval: F) -> Self {
        Probe {
            eval,
            fates: Vec::new(),
        }
    }

    fn fate(&mut self, v: f64) -> Result<Outcome> {
        let out = (self.eval)(v)?;
        self.fates.push((v, out));
        Ok(out)
    }

    /// Like [`Probe::fate`] but inconclusive runs are an error.
    fn decided(&mut self, v: f64) -> Result<bool> {
        match self.fate(v)? {
            Outcome::Growth => Ok(true),
            Outcome::Extinction => Ok(false),
            Outcome::Inconclusive => Err(Error::Undecided { value: v }),
        }
    }
}

/// Nested lattice walk below a growth point at index 0. `last` is the last
/// admissible index; `last_extinct` marks it as already known to go
/// extinct. Returns the first extinct index.
fn lattice_walk<F: FnMut(f64) -> Result<Outcome>>(
    cfg: &ScanConfig,
    last: usize,
    last_extinct: bool,
    probe: &mut Probe<F>,
) -> Result<usize> {
    let c = cfg.coarsening;
    let mut stride = 1usize;
    if c > 1 {
        while last / stride >= c {
            stride *= c;
        }
    }
    let mut grow = 0usize;
    let mut extinct = last_extinct.then_some(last);
    loop {
        let bound = extinct.unwrap_or(last + 1);
        let mut r = grow + stride;
        while r < bound {
            if probe.decided(cfg.value(r))? {
                grow = r;
            } else {
                extinct = Some(r);
                break;
            }
            r += stride;
        }
        if stride == 1 {
            break;
        }
        stride /= c;
    }
    extinct.ok_or(Error::ScanExhausted {
        iterations: probe.fates.len(),
        last: cfg.value(grow),
    })
}

/// Bisects `(lo, hi)` with extinction at `lo` and growth at `hi`.
fn bisect<F: FnMut(f64) -> Result<Outcome>>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    probe: &mut Probe<F>,
) -> Result<(f64, f64)> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if probe.decided(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Every extinct value must lie below every growing value.
pub fn check_monotone(fates: &[(f64, Outcome)]) -> Result<()> {
    let max_extinct = fates
        .iter()
        .filter(|f| f.1 == Outcome::Extinction)
        .map(|f| f.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_growth = fates
        .iter()
        .filter(|f| f.1 == Outcome::Growth)
        .map(|f| f.0)
        .fold(f64::INFINITY, f64::min);
    if max_extinct >= min_growth {
        return Err(Error::NonMonotone(format!(
            "extinction at {max_extinct} but growth at {min_growth}"
        )));
    }
    Ok(())
}

enum Kind {
    Q,
    Alpha,
}

/// Shared scan driver. For α-scans the value 0 is known to go extinct.
fn run_scan<F: FnMut(f64) -> Result<Outcome>>(
    cfg: &ScanConfig,
    kind: Kind,
    mut probe: Probe<F>,
) -> Result<ThresholdEstimate> {
    cfg.validate()?;
    match probe.fate(cfg.start)? {
        Outcome::Growth => {}
        other => {
            return Err(Error::BadStart {
                start: cfg.start,
                fate: other.to_string(),
            })
        }
    }
    let zero = cfg.zero_index();
    let (last, last_extinct) = match kind {
        // Q must stay positive
        Kind::Q => (cfg.max_iters.min(zero.saturating_sub(1)), false),
        Kind::Alpha if cfg.max_iters >= zero => (zero, true),
        Kind::Alpha => (cfg.max_iters, false),
    };
    if last == 0 {
        return Err(Error::ScanExhausted {
            iterations: 1,
            last: cfg.start,
        });
    }
    let r = lattice_walk(cfg, last, last_extinct, &mut probe)?;
    let lattice = (cfg.value(r).max(0.0), cfg.value(r - 1));
    let (lower, upper, coarse) = if cfg.refine {
        let (lo, hi) = bisect(lattice.0, lattice.1, cfg.refine_tol, &mut probe)?;
        (lo, hi, Some(lattice))
    } else {
        (lattice.0, lattice.1, None)
    };
    check_monotone(&probe.fates)?;
    let estimate = match kind {
        Kind::Q => 0.5 * (lower + upper),
        Kind::Alpha => upper,
    };
    Ok(ThresholdEstimate {
        lower,
        upper,
        estimate,
        evaluations: probe.fates.len(),
        per_point_fates: probe.fates,
        status: ScanStatus::Bracketed,
        capped: r == 1,
        coarse_bracket: coarse,
    })
}

/// `Q_c(μ, ν, α)` for the given family by a descending `Q` scan.
pub fn estimate_qc(
    exps: ModelExponents,
    family: FamilyId,
    alpha: ShapeParam,
    scan: &ScanConfig,
    resolution: &Resolution,
    policy: &FatePolicy,
) -> Result<ThresholdEstimate> {
    exps.require_conditional()?;
    let profile = InitialProfile::new(family, alpha)?;
    let policy = scan_policy(policy);
    let probe = Probe::new(|q| Ok(classify_at(exps, profile, q, resolution, &policy)?.outcome));
    run_scan(scan, Kind::Q, probe)
}

/// `α_min(μ, ν, Q)` for the given family by a descending α scan (μ > ν).
///
/// The homogeneous profile is tried first; if it survives the result is 0
/// with [`ScanStatus::AlreadySurvives`].
pub fn estimate_alpha_min(
    exps: ModelExponents,
    family: FamilyId,
    q: f64,
    scan: &ScanConfig,
    resolution: &Resolution,
    policy: &FatePolicy,
) -> Result<ThresholdEstimate> {
    match exps.regime() {
        Regime::Conditional => {}
        Regime::Balanced => {
            return Err(Error::InvalidParameter(format!(
                "mu = nu = {}: the critical value does not depend on alpha",
                exps.mu()
            )))
        }
        Regime::Unconditional => {
            return Err(Error::UnsupportedRegime {
                mu: exps.mu(),
                nu: exps.nu(),
            })
        }
    }
    if family == FamilyId::Homogeneous {
        return Err(Error::InvalidParameter("alpha scans need the f1 or f2 family".into()));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("Q must be positive, got {q}")));
    }
    scan.validate()?;
    let policy = scan_policy(policy);
    let mut probe = Probe::new(|a: f64| {
        let profile = InitialProfile::new(family, ShapeParam::new(a)?)?;
        Ok(classify_at(exps, profile, q, resolution, &policy)?.outcome)
    });
    match probe.fate(0.0)? {
        Outcome::Growth => {
            return Ok(ThresholdEstimate {
                lower: 0.0,
                upper: 0.0,
                estimate: 0.0,
                evaluations: 1,
                per_point_fates: probe.fates,
                status: ScanStatus::AlreadySurvives,
                capped: false,
                coarse_bracket: None,
            })
        }
        Outcome::Extinction => {}
        Outcome::Inconclusive => return Err(Error::Undecided { value: 0.0 }),
    }
    run_scan(scan, Kind::Alpha, probe)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Mu,
    Nu,
    Q,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu" => Ok(SweepAxis::Mu),
            "nu" => Ok(SweepAxis::Nu),
            "q" => Ok(SweepAxis::Q),
            other => Err(Error::InvalidParameter(format!(
                "unknown axis '{other}' (expected mu, nu or q)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTask {
    Qc,
    AlphaMin,
}

impl std::str::FromStr for SweepTask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qc" => Ok(SweepTask::Qc),
            "alpha-min" | "alpha_min" | "alphamin" => Ok(SweepTask::AlphaMin),
            other => Err(Error::InvalidParameter(format!(
                "unknown task '{other}' (expected qc or alpha-min)"
            ))),
        }
    }
}

/// Parameters held fixed along a sweep. The swept one must be `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepFixed {
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub family: FamilyId,
    /// Shape parameter for `Qc` sweeps.
    pub alpha: f64,
    /// Survival parameter for `AlphaMin` sweeps.
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub task: SweepTask,
    pub fixed: SweepFixed,
    pub points: Vec<f64>,
    /// Requested step; shrunk per point to `PILOT_FRACTION` of the pilot.
    pub step: f64,
    /// Scan start; defaults per task when absent.
    pub start: Option<f64>,
    pub refine: bool,
    pub refine_tol: f64,
    pub coarsening: usize,
    pub resolution: Resolution,
    pub policy: FatePolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: f64,
    pub pilot: Option<f64>,
    pub step_used: Option<f64>,
    pub result: Result<ThresholdEstimate>,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one point".into()));
        }
        if self.points.windows(2).any(|w| !(w[1] > w[0])) || self.points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "sweep points must be finite and strictly increasing".into(),
            ));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        let f = &self.fixed;
        let missing = |name: &str| {
            Err(Error::InvalidParameter(format!(
                "sweep over this axis needs a fixed {name}"
            )))
        };
        let extra = |name: &str| {
            Err(Error::InvalidParameter(format!(
                "{name} is the swept axis and cannot also be fixed"
            )))
        };
        match self.axis {
            SweepAxis::Mu if f.mu.is_some() => return extra("mu"),
            SweepAxis::Mu if f.nu.is_none() => return missing("nu"),
            SweepAxis::Nu if f.nu.is_some() => return extra("nu"),
            SweepAxis::Nu if f.mu.is_none() => return missing("mu"),
            SweepAxis::Q if f.q.is_some() => return extra("q"),
            SweepAxis::Q if f.mu.is_none() || f.nu.is_none() => return missing("mu and nu"),
            _ => {}
        }
        match self.task {
            SweepTask::Qc if self.axis == SweepAxis::Q => {
                Err(Error::InvalidParameter("a Qc sweep cannot run over Q".into()))
            }
            SweepTask::Qc if f.q.is_some() => Err(Error::InvalidParameter("a Qc sweep does not take a fixed Q".into())),
            SweepTask::AlphaMin if self.axis != SweepAxis::Q && f.q.is_none() => missing("q"),
            _ => ShapeParam::new(f.alpha).map(|_| ()),
        }
    }

    fn point_exps(&self, p: f64) -> Result<ModelExponents> {
        let f = &self.fixed;
        match self.axis {
            SweepAxis::Mu => ModelExponents::new(p, f.nu.unwrap_or(f64::NAN)),
            SweepAxis::Nu => ModelExponents::new(f.mu.unwrap_or(f64::NAN), p),
            SweepAxis::Q => ModelExponents::new(f.mu.unwrap_or(f64::NAN), f.nu.unwrap_or(f64::NAN)),
        }
    }

    fn scan(&self, start: f64, step: f64) -> Result<ScanConfig> {
        let mut cfg = ScanConfig::new(start, step)?.with_coarsening(self.coarsening);
        if self.refine {
            cfg = cfg.with_refine(self.refine_tol);
        }
        Ok(cfg)
    }

    /// Pilot scan, then the final scan from the pilot's growth end.
    fn run_point(&self, p: f64) -> SweepRow {
        let mut row = SweepRow {
            point: p,
            pilot: None,
            step_used: None,
            result: Err(Error::InvalidParameter("not evaluated".into())),
        };
        let exps = match self.point_exps(p) {
            Ok(e) => e,
            Err(e) => {
                row.result = Err(e);
                return row;
            }
        };
        let (res, pol) = (&self.resolution, &self.policy);
        let run = |start: f64, step: f64, refine: bool| -> Result<ThresholdEstimate> {
            let mut cfg = self.scan(start, step)?;
            cfg.refine = refine && self.refine;
            match self.task {
                SweepTask::Qc => {
                    let alpha = ShapeParam::new(self.fixed.alpha)?;
                    estimate_qc(exps, self.fixed.family, alpha, &cfg, res, pol)
                }
                SweepTask::AlphaMin => {
                    let q = if self.axis == SweepAxis::Q {
                        p
                    } else {
                        self.fixed.q.unwrap_or(f64::NAN)
                    };
                    estimate_alpha_min(exps, self.fixed.family, q, &cfg, res, pol)
                }
            }
        };
        let start = self.start.unwrap_or(match self.task {
            SweepTask::Qc => default_q_start(exps.mu()),
            SweepTask::AlphaMin => DEFAULT_ALPHA_START,
        });
        let pilot = match run(start, start / PILOT_DIVISIONS, false) {
            Ok(est) => est,
            Err(e) => {
                row.result = Err(e);
                return row;
            }
        };
        if pilot.status == ScanStatus::AlreadySurvives {
            row.result = Ok(pilot);
            return row;
        }
        row.pilot = Some(pilot.estimate);
        let step = self.step.min(PILOT_FRACTION * pilot.estimate);
        row.step_used = Some(step);
        row.result = if step >= pilot.upper {
            Err(Error::InvalidParameter(format!(
                "pilot estimate {} too small for a refined scan",
                pilot.estimate
            )))
        } else {
            run(pilot.upper, step, true).map(|mut est| {
                est.evaluations += pilot.evaluations;
                // the final scan starts at a verified growth point; only the
                // pilot can have hit the true start
                est.capped = pilot.capped;
                est
            })
        };
        row
    }
}

/// Runs every point independently on `workers` threads. Rows come back in
/// input order; per-point failures are kept in the row.
pub fn sweep(config: &SweepConfig, workers: usize) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| config.points.par_iter().map(|&p| config.run_point(p)).collect()))
}
