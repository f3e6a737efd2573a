//! Named parameter sets for the standard figures. A preset only fills in
//! values the user did not give on the command line.

use crate::dist::FamilyId;
use crate::error::{Error, Result};
use crate::threshold::{SweepAxis, SweepTask};

/// Command a preset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetCommand {
    Simulate,
    Qc,
    AlphaMin,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Preset {
    pub command: Option<PresetCommand>,
    pub description: &'static str,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub family: Option<FamilyId>,
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    pub snapshots: Vec<f64>,
    pub step: Option<f64>,
    pub axis: Option<SweepAxis>,
    pub task: Option<SweepTask>,
    pub points: Option<&'static str>,
}

/// Snapshot times covering the transient and the onset of decay or growth.
const EVOLUTION_TIMES: [f64; 8] = [0.0, 0.0005, 0.001, 0.0025, 0.005, 0.01, 0.02, 0.05];

pub const PRESET_NAMES: [&str; 14] = [
    "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14", "fig15",
    "fig16",
];

fn evolution(description: &'static str, family: FamilyId, q: f64) -> Preset {
    Preset {
        command: Some(PresetCommand::Simulate),
        description,
        mu: Some(4.0),
        nu: Some(2.0),
        family: Some(family),
        alpha: Some(100.0),
        q: Some(q),
        snapshots: EVOLUTION_TIMES.to_vec(),
        ..Preset::default()
    }
}

fn qc_curve(
    description: &'static str,
    axis: SweepAxis,
    mu: Option<f64>,
    nu: Option<f64>,
    points: &'static str,
) -> Preset {
    Preset {
        command: Some(PresetCommand::Sweep),
        description,
        mu,
        nu,
        family: Some(FamilyId::SymmetricF1),
        alpha: Some(0.0),
        axis: Some(axis),
        task: Some(SweepTask::Qc),
        points: Some(points),
        ..Preset::default()
    }
}

pub fn lookup(name: &str) -> Result<Preset> {
    use FamilyId::{AsymmetricF2 as F2, SymmetricF1 as F1};
    let p = match name.to_ascii_lowercase().as_str() {
        "fig3" => evolution("density evolution, f1, alpha 100, Q 0.9 (extinction)", F1, 0.9),
        "fig4" => evolution("density evolution, f1, alpha 100, Q 1.1 (growth)", F1, 1.1),
        "fig5" => evolution("density evolution, f2, alpha 100, Q 0.9 (extinction)", F2, 0.9),
        "fig6" => evolution("density evolution, f2, alpha 100, Q 1.1 (growth)", F2, 1.1),
        "fig7" => evolution("total population, f1, alpha 100, Q 0.9", F1, 0.9),
        "fig8" => evolution("total population, f1, alpha 100, Q 1.1", F1, 1.1),
        "fig9" => evolution("total population, f2, alpha 100, Q 0.9", F2, 0.9),
        "fig10" => evolution("total population, f2, alpha 100, Q 1.1", F2, 1.1),
        "fig11" => Preset {
            command: Some(PresetCommand::Qc),
            description: "Q_c(4, 2, 100) bracket with dQ = 0.0002",
            mu: Some(4.0),
            nu: Some(2.0),
            family: Some(F1),
            alpha: Some(100.0),
            step: Some(0.0002),
            ..Preset::default()
        },
        "fig12" => qc_curve("Q_c over mu at nu = 1", SweepAxis::Mu, None, Some(1.0), "1:6:0.25"),
        "fig13" => Preset {
            family: Some(F2),
            alpha: Some(1.0),
            ..qc_curve(
                "f2 curve for Q_c differences over mu at nu = 1",
                SweepAxis::Mu,
                None,
                Some(1.0),
                "1:6:0.25",
            )
        },
        "fig14" => qc_curve("Q_c over mu at nu = 2", SweepAxis::Mu, None, Some(2.0), "2:6:0.25"),
        "fig15" => qc_curve("Q_c over nu at mu = 4", SweepAxis::Nu, Some(4.0), None, "1:4:0.25"),
        "fig16" => Preset {
            command: Some(PresetCommand::AlphaMin),
            description: "alpha_min(4, 2, Q = 2) bracket with dalpha = 0.001",
            mu: Some(4.0),
            nu: Some(2.0),
            family: Some(F1),
            q: Some(2.0),
            step: Some(0.001),
            ..Preset::default()
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset '{other}' (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

/// Looks up `name` and checks it belongs to `command`.
pub fn for_command(name: Option<&str>, command: PresetCommand) -> Result<Preset> {
    let Some(name) = name else {
        return Ok(Preset::default());
    };
    let p = lookup(name)?;
    if p.command != Some(command) {
        return Err(Error::InvalidParameter(format!(
            "preset '{name}' ({}) belongs to the {:?} command",
            p.description,
            p.command.unwrap_or(PresetCommand::Simulate)
        )));
    }
    Ok(p)
}
