//! Command-line front end. Arguments are resolved (command line, then
//! preset, then defaults) into a [`RunSpec`] which is executed and recorded
//! in `manifest.json`.

pub mod preset;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dist::FamilyId;
use crate::error::{Error, Result};
use crate::scaling::{ModelExponents, PhysicalParams};
use crate::solver::{FatePolicy, Resolution, TimeStep};
use crate::threshold::{
    default_q_start, round_sig, ScanConfig, SweepAxis, SweepConfig, SweepFixed, SweepTask, DEFAULT_ALPHA_START,
};

use preset::{Preset, PresetCommand};
use spec::{AlphaMinSpec, CriticalSpec, ProblemInput, QcSpec, SimulateSpec, SweepSpec};
pub use spec::{Manifest, RunReport, RunSpec, EXIT_INCONCLUSIVE, EXIT_INVALID, EXIT_OK, EXIT_SCAN_FAILED};

/// Environment variable holding the default sweep worker count.
pub const WORKERS_ENV: &str = "CRITPATCH_WORKERS";

pub const DEFAULT_DQ: f64 = 0.001;
pub const DEFAULT_DALPHA: f64 = 0.01;
const DEFAULT_OUT: &str = "critpatch_out";

#[derive(Debug, Parser)]
#[command(
    name = "critpatch",
    version,
    about = "Fate and critical thresholds of a nonlinear reaction-diffusion population model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one run and classify its fate.
    Simulate(SimulateArgs),
    /// Critical survival parameter Q_c by a descending Q scan.
    Qc(QcArgs),
    /// Smallest shape parameter alpha that survives at a given Q.
    AlphaMin(AlphaMinArgs),
    /// Q_c or alpha_min over a range of mu, nu or Q.
    Sweep(SweepArgs),
    /// Critical habitat size or critical total population.
    Critical(CriticalArgs),
    /// Execute the run recorded in a manifest again.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Growth exponent mu.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Diffusion exponent nu.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Initial distribution family: homogeneous, f1 or f2.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<FamilyId>,
    /// Shape parameter alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Number of space intervals.
    #[arg(long)]
    pub m: Option<usize>,
    /// Time step as a multiple of h^2.
    #[arg(long, conflicts_with = "k")]
    pub ratio: Option<f64>,
    /// Fixed time step.
    #[arg(long)]
    pub k: Option<f64>,
    /// Integration horizon.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Consecutive sign-definite steps that decide a fate (0 disables).
    #[arg(long)]
    pub monotone_window: Option<usize>,
    #[arg(long)]
    pub floor_frac: Option<f64>,
    #[arg(long)]
    pub ceil_frac: Option<f64>,
    #[arg(long)]
    pub blowup_cap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Named parameter set (fig3 .. fig16).
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// First scanned value (must grow).
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Bisect inside the bracket after the scan.
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub refine_tol: Option<f64>,
    /// Lattice coarsening factor; 1 walks every lattice point.
    #[arg(long)]
    pub coarsening: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Nondimensional survival parameter.
    #[arg(long, conflicts_with_all = ["a", "d", "l", "n0"])]
    pub q: Option<f64>,
    /// Growth coefficient.
    #[arg(long, requires_all = ["d", "l", "n0"])]
    pub a: Option<f64>,
    /// Diffusion coefficient.
    #[arg(long = "D", id = "d", requires_all = ["a", "l", "n0"])]
    pub d: Option<f64>,
    /// Habitat length.
    #[arg(long, requires_all = ["a", "d", "n0"])]
    pub l: Option<f64>,
    /// Total initial population.
    #[arg(long, requires_all = ["a", "d", "l"])]
    pub n0: Option<f64>,
    /// Times at which to write density snapshots.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    /// Keep every n-th trajectory sample.
    #[arg(long)]
    pub stride: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct QcArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Scan step in Q.
    #[arg(long)]
    pub dq: Option<f64>,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct AlphaMinArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Survival parameter.
    #[arg(long)]
    pub q: Option<f64>,
    /// Scan step in alpha.
    #[arg(long)]
    pub dalpha: Option<f64>,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// qc or alpha-min.
    #[arg(long, value_parser = parse_task)]
    pub task: Option<SweepTask>,
    /// mu, nu or q.
    #[arg(long, value_parser = parse_axis)]
    pub axis: Option<SweepAxis>,
    /// Fixed Q for alpha-min sweeps over mu or nu.
    #[arg(long)]
    pub q: Option<f64>,
    /// `start:stop:step` (inclusive) or a comma list.
    #[arg(long)]
    pub points: Option<String>,
    /// Requested scan step; shrunk per point to 1% of a pilot estimate.
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Worker threads.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub a: f64,
    #[arg(long = "D")]
    pub d: f64,
    /// Total population, for the critical habitat size.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Habitat length, for the critical population.
    #[arg(long)]
    pub l: Option<f64>,
    /// Known critical value; computed by a Q scan when absent.
    #[arg(long)]
    pub qc: Option<f64>,
    /// Scan step used when Q_c is computed.
    #[arg(long)]
    pub dq: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory for the manifest.
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Override the recorded worker count (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_family(s: &str) -> std::result::Result<FamilyId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> std::result::Result<SweepTask, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `start:stop:step` (stop included) or `a,b,c`.
pub fn parse_points(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse points '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
            return Err(bad());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(Error::InvalidParameter(format!("too many points in '{s}'")));
        }
        // rounding keeps 0.1-type steps free of representation noise
        Ok((0..=n).map(|i| round_sig(a + i as f64 * h, 12)).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

fn require(name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")))
}

fn exponents(model: &ModelArgs, p: &Preset) -> Result<ModelExponents> {
    ModelExponents::new(require("mu", model.mu.or(p.mu))?, require("nu", model.nu.or(p.nu))?)
}

fn family_alpha(model: &ModelArgs, p: &Preset) -> (FamilyId, f64) {
    let alpha = model.alpha.or(p.alpha).unwrap_or(0.0);
    let family = model.family.or(p.family).unwrap_or(if alpha == 0.0 {
        FamilyId::Homogeneous
    } else {
        FamilyId::SymmetricF1
    });
    (family, alpha)
}

impl GridArgs {
    fn resolution(&self) -> Resolution {
        let d = Resolution::default();
        Resolution {
            m: self.m.unwrap_or(d.m),
            time_step: match (self.k, self.ratio) {
                (Some(k), _) => TimeStep::Fixed(k),
                (None, Some(r)) => TimeStep::DiffusiveRatio(r),
                (None, None) => d.time_step,
            },
            t_max: self.t_max.unwrap_or(d.t_max),
        }
    }

    fn policy(&self, stride: Option<usize>) -> FatePolicy {
        let d = FatePolicy::default();
        FatePolicy {
            floor_frac: self.floor_frac.unwrap_or(d.floor_frac),
            ceil_frac: self.ceil_frac.unwrap_or(d.ceil_frac),
            blowup_cap: self.blowup_cap.unwrap_or(d.blowup_cap),
            monotone_window: self.monotone_window.unwrap_or(d.monotone_window),
            trajectory_stride: stride.unwrap_or(d.trajectory_stride),
            ..d
        }
    }
}

impl ScanArgs {
    fn config(&self, default_start: f64, step: f64) -> Result<ScanConfig> {
        let mut cfg = ScanConfig::new(self.start.unwrap_or(default_start), step)?;
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        if self.refine {
            cfg = cfg.with_refine(self.refine_tol.unwrap_or(step / 100.0));
        }
        if let Some(c) = self.coarsening {
            cfg.coarsening = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl Command {
    /// Resolves the arguments into a run description, the output directory
    /// and the preset name.
    pub fn resolve(&self) -> Result<(RunSpec, PathBuf, Option<String>)> {
        match self {
            Command::Simulate(a) => {
                let p = preset::for_command(a.out.preset.as_deref(), PresetCommand::Simulate)?;
                let (family, alpha) = family_alpha(&a.model, &p);
                let input = match (a.q, a.a) {
                    (Some(q), _) => ProblemInput::Q { q },
                    (None, Some(ga)) => ProblemInput::Physical(PhysicalParams::new(
                        ga,
                        require("D", a.d)?,
                        require("l", a.l)?,
                        require("n0", a.n0)?,
                    )?),
                    (None, None) => ProblemInput::Q {
                        q: p.q.ok_or_else(|| {
                            Error::InvalidParameter("give --q or the physical set --a --D --l --n0".into())
                        })?,
                    },
                };
                let spec = SimulateSpec {
                    exponents: exponents(&a.model, &p)?,
                    family,
                    alpha,
                    input,
                    resolution: a.grid.resolution(),
                    policy: a.grid.policy(a.stride),
                    snapshots: a.snapshots.clone().unwrap_or(p.snapshots.clone()),
                };
                Ok((RunSpec::Simulate(spec), a.out.out.clone(), a.out.preset.clone()))
            }
            Command::Qc(a) => {
                let p = preset::for_command(a.out.preset.as_deref(), PresetCommand::Qc)?;
                let exps = exponents(&a.model, &p)?;
                let (family, alpha) = family_alpha(&a.model, &p);
                let step = a.dq.or(p.step).unwrap_or(DEFAULT_DQ);
                let spec = QcSpec {
                    exponents: exps,
                    family,
                    alpha,
                    scan: a.scan.config(default_q_start(exps.mu()), step)?,
                    resolution: a.grid.resolution(),
                    policy: a.grid.policy(None),
                };
                Ok((RunSpec::Qc(spec), a.out.out.clone(), a.out.preset.clone()))
            }
            Command::AlphaMin(a) => {
                let p = preset::for_command(a.out.preset.as_deref(), PresetCommand::AlphaMin)?;
                let exps = exponents(&a.model, &p)?;
                let family = a.model.family.or(p.family).unwrap_or(FamilyId::SymmetricF1);
                let step = a.dalpha.or(p.step).unwrap_or(DEFAULT_DALPHA);
                let spec = AlphaMinSpec {
                    exponents: exps,
                    family,
                    q: require("q", a.q.or(p.q))?,
                    scan: a.scan.config(DEFAULT_ALPHA_START, step)?,
                    resolution: a.grid.resolution(),
                    policy: a.grid.policy(None),
                };
                Ok((RunSpec::AlphaMin(spec), a.out.out.clone(), a.out.preset.clone()))
            }
            Command::Sweep(a) => {
                let p = preset::for_command(a.out.preset.as_deref(), PresetCommand::Sweep)?;
                let task = a.task.or(p.task).unwrap_or(SweepTask::Qc);
                let axis = a
                    .axis
                    .or(p.axis)
                    .ok_or_else(|| Error::InvalidParameter("--axis is required".into()))?;
                let points = match (&a.points, p.points) {
                    (Some(s), _) => parse_points(s)?,
                    (None, Some(s)) => parse_points(s)?,
                    (None, None) => return Err(Error::InvalidParameter("--points is required".into())),
                };
                let (family, alpha) = family_alpha(&a.model, &p);
                let family = match (task, family) {
                    (SweepTask::AlphaMin, FamilyId::Homogeneous) => FamilyId::SymmetricF1,
                    (_, f) => f,
                };
                let step = a.step.or(p.step).unwrap_or(match task {
                    SweepTask::Qc => DEFAULT_DQ,
                    SweepTask::AlphaMin => DEFAULT_DALPHA,
                });
                let config = SweepConfig {
                    axis,
                    task,
                    fixed: SweepFixed {
                        mu: a.model.mu.or(p.mu),
                        nu: a.model.nu.or(p.nu),
                        family,
                        alpha,
                        q: a.q.or(p.q),
                    },
                    points,
                    step,
                    start: a.scan.start,
                    refine: a.scan.refine,
                    refine_tol: a.scan.refine_tol.unwrap_or(step / 100.0),
                    coarsening: a.scan.coarsening.unwrap_or(crate::threshold::DEFAULT_COARSENING),
                    resolution: a.grid.resolution(),
                    policy: a.grid.policy(None),
                };
                let spec = SweepSpec {
                    config,
                    workers: a.workers.unwrap_or_else(default_workers),
                };
                Ok((RunSpec::Sweep(spec), a.out.out.clone(), a.out.preset.clone()))
            }
            Command::Critical(a) => {
                let p = Preset::default();
                let exps = exponents(&a.model, &p)?;
                let (family, alpha) = family_alpha(&a.model, &p);
                let scan = match a.qc {
                    Some(_) => None,
                    None => Some(ScanConfig::new(default_q_start(exps.mu()), a.dq.unwrap_or(DEFAULT_DQ))?),
                };
                let spec = CriticalSpec {
                    exponents: exps,
                    a: a.a,
                    d: a.d,
                    n0: a.n0,
                    l: a.l,
                    qc: a.qc,
                    family,
                    alpha,
                    scan,
                    resolution: a.grid.resolution(),
                    policy: a.grid.policy(None),
                };
                Ok((RunSpec::Critical(spec), a.out.clone(), None))
            }
            Command::Rerun(a) => {
                let manifest = Manifest::load(&a.manifest)?;
                let mut spec = manifest.spec;
                if let (RunSpec::Sweep(s), Some(w)) = (&mut spec, a.workers) {
                    s.workers = w;
                }
                Ok((spec, a.out.clone(), manifest.preset))
            }
        }
    }
}

/// Parses `args`, runs the command and prints to `out`/`err`. Returns the
/// process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (spec, dir, preset) = match cli.command.resolve() {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    match spec.execute(&dir, preset.as_deref()) {
        Ok(report) => {
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            for line in &report.errors {
                let _ = writeln!(err, "{line}");
            }
            report.exit_code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_range() {
        assert_eq!(parse_points("1:2:0.25").unwrap(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(parse_points("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert_eq!(parse_points("1,3,7").unwrap(), vec![1.0, 3.0, 7.0]);
        assert!(parse_points("1:2").is_err());
        assert!(parse_points("2:1:0.5").is_err());
        assert!(parse_points("a,b").is_err());
    }

    #[test]
    fn q_and_physical_are_exclusive() {
        let r = Cli::try_parse_from([
            "critpatch",
            "simulate",
            "--mu",
            "4",
            "--nu",
            "2",
            "--q",
            "1",
            "--a",
            "1",
            "--D",
            "1",
            "--l",
            "1",
            "--n0",
            "1",
        ]);
        assert!(r.is_err());
        let r = Cli::try_parse_from(["critpatch", "simulate", "--mu", "4", "--nu", "2", "--a", "1"]);
        assert!(r.is_err());
    }

    #[test]
    fn preset_fills_and_flags_override() {
        let cli = Cli::try_parse_from(["critpatch", "qc", "--preset", "fig11", "--family", "f2"]).unwrap();
        let (spec, _, preset) = cli.command.resolve().unwrap();
        let RunSpec::Qc(s) = spec else { panic!() };
        assert_eq!(s.family, FamilyId::AsymmetricF2);
        assert_eq!(s.alpha, 100.0);
        assert_eq!(s.scan.step, 0.0002);
        assert_eq!(s.scan.start, 12.0);
        assert_eq!(preset.as_deref(), Some("fig11"));
    }
}
