//! Linearized Crank–Nicolson integration of
//! `ρ_T = (1/ν)(ρ^ν)_XX + ρ^μ` on `[-L/2, L/2]` with `ρ = 0` at both ends,
//! and classification of the run as extinction or unbounded growth.
//!
//! Each step linearizes `ρ^ν` at the new level about the old one, which
//! leaves a tridiagonal system for the increments `W_i = ρ_{i,j+1} − ρ_{i,j}`:
//!
//! ```text
//! p_{i+1} W_{i+1} − 2(p_i + h²/k) W_i + p_{i-1} W_{i-1}
//!     = −(2/ν)(q_{i+1} − 2q_i + q_{i-1}) − 2h² r_i
//! ```
//!
//! with `p = ρ^{ν-1}`, `q = ρ^ν`, `r = ρ^μ` taken at the old level. The
//! reaction term is explicit.

mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::{ModelExponents, NondimProblem};

pub use tridiag::{thomas_solve, thomas_solve_into};

/// Interior values in `[-NEGATIVE_ABORT, 0)` after a step are clamped to 0;
/// anything lower is reported as a scheme instability.
pub const NEGATIVE_ABORT: f64 = 1e-6;
/// Floor applied inside `ρ^{ν-1}` when ν < 1.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// How the time step is chosen from the spatial step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStep {
    /// Fixed `k`.
    Fixed(f64),
    /// `k = ratio · h²`.
    DiffusiveRatio(f64),
}

/// Grid resolution independent of the domain length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Number of node intervals.
    pub m: usize,
    pub time_step: TimeStep,
    /// Integration horizon `T̃`.
    pub t_max: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            m: 200,
            time_step: TimeStep::DiffusiveRatio(0.25),
            t_max: 50.0,
        }
    }
}

impl Resolution {
    pub fn grid(&self, length: f64) -> Result<Grid> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain length must be positive, got {length}"
            )));
        }
        let h = length / self.m as f64;
        let k = match self.time_step {
            TimeStep::Fixed(k) => k,
            TimeStep::DiffusiveRatio(r) => r * h * h,
        };
        Grid::new(length, self.m, k, self.t_max)
    }

    /// Same resolution with `m` doubled and `k` scaled so the diffusive
    /// ratio is kept (`TimeStep::Fixed` halves `k`).
    pub fn refined(&self) -> Resolution {
        Resolution {
            m: self.m * 2,
            time_step: match self.time_step {
                TimeStep::Fixed(k) => TimeStep::Fixed(k / 2.0),
                ratio => ratio,
            },
            t_max: self.t_max,
        }
    }
}

/// Uniform space-time mesh on `[-L/2, L/2] × [0, T̃]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub m: usize,
    pub h: f64,
    pub k: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn new(length: f64, m: usize, k: f64, t_max: f64) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidParameter(format!("need m >= 4, got {m}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {k}")));
        }
        if !(t_max >= k && t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon {t_max} must be at least one time step ({k})"
            )));
        }
        Ok(Grid {
            length,
            m,
            h: length / m as f64,
            k,
            t_max,
        })
    }

    /// Number of time steps to reach the horizon.
    pub fn steps(&self) -> usize {
        (self.t_max / self.k).round().max(1.0) as usize
    }

    /// Coordinate of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.h
    }
}

/// Nodal densities `ρ_0..ρ_m` at time `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub rho: Vec<f64>,
    pub time: f64,
}

impl StateVector {
    /// Validates the boundary and sign invariants.
    pub fn new(rho: Vec<f64>, time: f64) -> Result<Self> {
        if rho.len() < 5 {
            return Err(Error::InvalidParameter(format!(
                "state needs at least 5 nodes, got {}",
                rho.len()
            )));
        }
        if rho[0] != 0.0 || rho[rho.len() - 1] != 0.0 {
            return Err(Error::InvalidParameter("boundary nodes must be exactly zero".into()));
        }
        if let Some(i) = rho.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "node {i} has invalid density {}",
                rho[i]
            )));
        }
        Ok(StateVector { rho, time })
    }

    pub fn initial(problem: &NondimProblem, grid: &Grid) -> Self {
        StateVector {
            rho: problem.sample(grid.m),
            time: 0.0,
        }
    }

    pub fn max_density(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }
}

/// Trapezoidal total population `h·(ρ_0/2 + Σρ_i + ρ_m/2)`.
pub fn total_population(state: &StateVector, grid: &Grid) -> f64 {
    trapezoid(&state.rho, grid.h)
}

fn trapezoid(rho: &[f64], h: f64) -> f64 {
    let n = rho.len();
    let interior: f64 = rho[1..n - 1].iter().sum();
    h * (0.5 * rho[0] + interior + 0.5 * rho[n - 1])
}

/// `C·cos(√μ X)^{1/μ}`, the nonnegative steady state for μ = ν on the
/// critical domain `|X| ≤ π/(2√μ)`.
pub fn steady_profile(mu: f64, c: f64, x: f64) -> Result<f64> {
    if !(mu > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "steady profile needs mu > 0 and C > 0, got mu = {mu}, C = {c}"
        )));
    }
    let half = std::f64::consts::FRAC_PI_2 / mu.sqrt();
    if x.abs() > half * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "|X| = {} exceeds the steady-state support {half}",
            x.abs()
        )));
    }
    let cos = (mu.sqrt() * x).cos().max(0.0);
    Ok(c * cos.powf(1.0 / mu))
}

/// `x^e` with fast paths for the exponents that show up in practice.
#[derive(Debug, Clone, Copy)]
enum Power {
    Zero,
    One,
    Int(i32),
    Half,
    Real(f64),
}

impl Power {
    fn new(e: f64) -> Self {
        if e == 0.0 {
            Power::Zero
        } else if e == 1.0 {
            Power::One
        } else if e == 0.5 {
            Power::Half
        } else if e.fract() == 0.0 && e.abs() <= 16.0 {
            Power::Int(e as i32)
        } else {
            Power::Real(e)
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Power::Zero => 1.0,
            Power::One => x,
            Power::Int(n) => x.powi(n),
            Power::Half => x.sqrt(),
            Power::Real(e) => x.powf(e),
        }
    }
}

/// Sign pattern of the increments produced by one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    /// Every interior node decreased or stayed, at least one decreased.
    Decreasing,
    /// Every interior node increased or stayed, at least one increased.
    Increasing,
    Mixed,
    Stationary,
}

/// Result of advancing one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Advanced(Trend),
    /// A node overflowed or went non-finite; the state is left untouched.
    Blowup,
}

/// Reusable workspace for repeated steps on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    nu: f64,
    diff_pow: Power,
    flux_pow: Power,
    react_pow: Power,
    floor_inside: bool,
    abort_below: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    w: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: Grid, exps: ModelExponents) -> Self {
        let n = grid.m - 1;
        Stepper {
            grid,
            nu: exps.nu(),
            diff_pow: Power::new(exps.nu() - 1.0),
            flux_pow: Power::new(exps.nu()),
            react_pow: Power::new(exps.mu()),
            floor_inside: exps.nu() < 1.0,
            abort_below: -NEGATIVE_ABORT,
            p: vec![0.0; grid.m + 1],
            q: vec![0.0; grid.m + 1],
            lower: vec![0.0; n - 1],
            diag: vec![0.0; n],
            upper: vec![0.0; n - 1],
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    /// Clamps every negative interior value to 0 instead of reporting
    /// [`Error::Instability`] for undershoots beyond [`NEGATIVE_ABORT`].
    pub fn clamp_all(mut self) -> Self {
        self.abort_below = f64::NEG_INFINITY;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Advances `state` by one time step in place.
    pub fn advance(&mut self, state: &mut StateVector) -> Result<StepOutcome> {
        let m = self.grid.m;
        if state.rho.len() != m + 1 {
            return Err(Error::InvalidParameter(format!(
                "state has {} nodes, grid expects {}",
                state.rho.len(),
                m + 1
            )));
        }
        let h2 = self.grid.h * self.grid.h;
        let shift = 2.0 * h2 / self.grid.k;
        let rho = &state.rho;

        for i in 0..=m {
            let r = rho[i];
            let base = if self.floor_inside { r.max(DENSITY_FLOOR) } else { r };
            self.p[i] = self.diff_pow.apply(base);
            self.q[i] = self.flux_pow.apply(r);
        }
        let two_over_nu = 2.0 / self.nu;
        for i in 1..m {
            let j = i - 1;
            self.diag[j] = -2.0 * self.p[i] - shift;
            if j > 0 {
                self.lower[j - 1] = self.p[i - 1];
            }
            if j + 1 < m - 1 {
                self.upper[j] = self.p[i + 1];
            }
            let lap = self.q[i + 1] - 2.0 * self.q[i] + self.q[i - 1];
            self.rhs[j] = -two_over_nu * lap - 2.0 * h2 * self.react_pow.apply(rho[i]);
        }
        thomas_solve_into(
            &self.lower,
            &self.diag,
            &self.upper,
            &self.rhs,
            &mut self.scratch,
            &mut self.w,
        )?;
        if self.w.iter().any(|v| !v.is_finite()) {
            return Ok(StepOutcome::Blowup);
        }

        let time = state.time + self.grid.k;
        let mut any_down = false;
        let mut any_up = false;
        for i in 1..m {
            let old = state.rho[i];
            let mut new = old + self.w[i - 1];
            if !new.is_finite() {
                return Ok(StepOutcome::Blowup);
            }
            if new < 0.0 {
                if new < self.abort_below {
                    return Err(Error::Instability {
                        time,
                        node: i,
                        value: new,
                    });
                }
                new = 0.0;
            }
            if new < old {
                any_down = true;
            } else if new > old {
                any_up = true;
            }
            state.rho[i] = new;
        }
        state.time = time;
        let trend = match (any_down, any_up) {
            (true, false) => Trend::Decreasing,
            (false, true) => Trend::Increasing,
            (true, true) => Trend::Mixed,
            (false, false) => Trend::Stationary,
        };
        Ok(StepOutcome::Advanced(trend))
    }
}

/// One linearized Crank–Nicolson step with every negative interior value
/// clamped to 0. Allocates a fresh workspace; use [`Stepper`] for repeated
/// stepping.
pub fn step(state: &StateVector, grid: &Grid, exps: ModelExponents) -> Result<(StateVector, StepOutcome)> {
    let mut next = state.clone();
    let outcome = Stepper::new(*grid, exps).clamp_all().advance(&mut next)?;
    Ok((next, outcome))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Extinction,
    Growth,
    Inconclusive,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Outcome::Extinction => "extinction",
            Outcome::Growth => "growth",
            Outcome::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// `N(T)` fell below `floor_frac · N(0)`.
    PopulationFloor,
    /// `N(T)` exceeded `ceil_frac · N(0)` while increasing.
    PopulationCeiling,
    /// A node overflowed `blowup_cap` or went non-finite.
    BlowupGuard,
    /// Every interior node decreased for `monotone_window` consecutive steps.
    SustainedDecay,
    /// Every interior node increased for `monotone_window` consecutive steps.
    SustainedGrowth,
    HorizonReached,
}

impl StopReason {
    pub fn outcome(self) -> Outcome {
        match self {
            StopReason::PopulationFloor | StopReason::SustainedDecay => Outcome::Extinction,
            StopReason::PopulationCeiling | StopReason::BlowupGuard | StopReason::SustainedGrowth => Outcome::Growth,
            StopReason::HorizonReached => Outcome::Inconclusive,
        }
    }
}

/// Thresholds that turn a trajectory into a fate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatePolicy {
    pub floor_frac: f64,
    pub ceil_frac: f64,
    /// Consecutive increasing steps required together with the ceiling.
    pub window: usize,
    pub blowup_cap: f64,
    /// Consecutive sign-definite steps that decide the fate early.
    /// 0 disables the criterion.
    pub monotone_window: usize,
    /// Keep every n-th `(T, N)` sample in the report (the last one is
    /// always kept).
    pub trajectory_stride: usize,
}

impl Default for FatePolicy {
    fn default() -> Self {
        FatePolicy {
            floor_frac: 1e-3,
            ceil_frac: 1e2,
            window: 50,
            blowup_cap: 1e12,
            monotone_window: 50,
            trajectory_stride: 1,
        }
    }
}

impl FatePolicy {
    fn validate(&self) -> Result<()> {
        if !(self.floor_frac > 0.0 && self.floor_frac < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "floor_frac must lie in (0, 1), got {}",
                self.floor_frac
            )));
        }
        if !(self.ceil_frac > 1.0) || !(self.blowup_cap > 0.0) {
            return Err(Error::InvalidParameter(
                "ceil_frac must exceed 1 and blowup_cap must be positive".into(),
            ));
        }
        if self.window == 0 || self.trajectory_stride == 0 {
            return Err(Error::InvalidParameter(
                "window and trajectory_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FateReport {
    pub outcome: Outcome,
    /// `(T, N(T))` samples, strictly increasing in `T`.
    pub trajectory: Vec<(f64, f64)>,
    pub stop_time: f64,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub initial_population: f64,
}

impl FateReport {
    pub fn final_population(&self) -> f64 {
        self.trajectory.last().map(|s| s.1).unwrap_or(self.initial_population)
    }
}

/// Density profile captured during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub requested: f64,
    pub state: StateVector,
}

/// True when the explicit reaction time scale `1/(μ ρ^{μ-1})` at the peak is
/// shorter than the time step.
fn reaction_unresolved(max_density: f64, k: f64, mu: f64) -> bool {
    k * mu * max_density.powf(mu - 1.0) > 1.0
}

/// Integrates from the sampled initial profile and classifies the fate.
pub fn classify_fate(problem: &NondimProblem, grid: &Grid, policy: &FatePolicy) -> Result<FateReport> {
    simulate(problem, grid, policy, &[]).map(|(r, _)| r)
}

/// [`classify_fate`] that also records density snapshots at the first step
/// reaching each requested time. Requests beyond the stop time are dropped.
pub fn simulate(
    problem: &NondimProblem,
    grid: &Grid,
    policy: &FatePolicy,
    snapshot_times: &[f64],
) -> Result<(FateReport, Vec<Snapshot>)> {
    problem.exps.require_conditional()?;
    if (grid.length - problem.length).abs() > 1e-12 * problem.length {
        return Err(Error::InvalidParameter(format!(
            "grid length {} does not match the problem domain {}",
            grid.length, problem.length
        )));
    }
    run_from(
        StateVector::initial(problem, grid),
        grid,
        problem.exps,
        policy,
        snapshot_times,
    )
}

/// Fate loop from an arbitrary initial state.
pub fn run_from(
    initial: StateVector,
    grid: &Grid,
    exps: ModelExponents,
    policy: &FatePolicy,
    snapshot_times: &[f64],
) -> Result<(FateReport, Vec<Snapshot>)> {
    policy.validate()?;
    let mut state = StateVector::new(initial.rho, initial.time)?;
    if state.rho.len() != grid.m + 1 {
        return Err(Error::InvalidParameter(format!(
            "state has {} nodes, grid expects {}",
            state.rho.len(),
            grid.m + 1
        )));
    }
    let n0 = total_population(&state, grid);
    if n0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "initial population is zero; nothing to classify".into(),
        ));
    }

    let mut pending: Vec<f64> = snapshot_times.to_vec();
    pending.sort_by(|a, b| a.total_cmp(b));
    pending.reverse();
    let mut snapshots = Vec::new();
    let mut take_snapshots = |state: &StateVector, pending: &mut Vec<f64>| {
        while let Some(&t) = pending.last() {
            if state.time + 0.5 * grid.k >= t {
                snapshots.push(Snapshot {
                    requested: t,
                    state: state.clone(),
                });
                pending.pop();
            } else {
                break;
            }
        }
    };
    take_snapshots(&state, &mut pending);

    let mut stepper = Stepper::new(*grid, exps);
    let mut trajectory = vec![(0.0, n0)];
    let total_steps = grid.steps();
    let mut prev_n = n0;
    let mut rising = 0usize;
    let mut decay_run = 0usize;
    let mut growth_run = 0usize;
    let mut reason = StopReason::HorizonReached;
    let mut steps = 0usize;

    for j in 1..=total_steps {
        let pre_max = state.max_density();
        let trend = match stepper.advance(&mut state) {
            Ok(StepOutcome::Blowup) => {
                reason = StopReason::BlowupGuard;
                break;
            }
            Ok(StepOutcome::Advanced(t)) => t,
            // undershoot from a profile that has outrun the time step is
            // part of the blow-up, not a failure of the run
            Err(Error::Instability { .. })
                if reaction_unresolved(pre_max, grid.k, exps.mu()) || prev_n > policy.ceil_frac * n0 =>
            {
                reason = StopReason::BlowupGuard;
                break;
            }
            Err(e) => return Err(e),
        };
        steps = j;
        // exact multiple of k keeps T free of accumulated rounding
        state.time = j as f64 * grid.k;
        let n = total_population(&state, grid);
        if j % policy.trajectory_stride == 0 || j == total_steps {
            trajectory.push((state.time, n));
        }
        take_snapshots(&state, &mut pending);

        if state.max_density() > policy.blowup_cap || !n.is_finite() {
            reason = StopReason::BlowupGuard;
            break;
        }
        rising = if n > prev_n { rising + 1 } else { 0 };
        prev_n = n;
        if n < policy.floor_frac * n0 {
            reason = StopReason::PopulationFloor;
            break;
        }
        if n > policy.ceil_frac * n0 && rising >= policy.window {
            reason = StopReason::PopulationCeiling;
            break;
        }
        match trend {
            Trend::Decreasing => {
                decay_run += 1;
                growth_run = 0;
            }
            Trend::Increasing => {
                growth_run += 1;
                decay_run = 0;
            }
            _ => {
                decay_run = 0;
                growth_run = 0;
            }
        }
        if policy.monotone_window > 0 {
            if decay_run >= policy.monotone_window {
                reason = StopReason::SustainedDecay;
                break;
            }
            if growth_run >= policy.monotone_window {
                reason = StopReason::SustainedGrowth;
                break;
            }
        }
    }

    if trajectory.last().map(|s| s.0) != Some(state.time) {
        trajectory.push((state.time, total_population(&state, grid)));
    }

    Ok((
        FateReport {
            outcome: reason.outcome(),
            stop_time: state.time,
            stop_reason: reason,
            trajectory,
            steps,
            initial_population: n0,
        },
        snapshots,
    ))
}
