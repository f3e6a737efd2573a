//! Survival parameter `Q = (a/D)·l^{2+ν-μ}·n₀^{μ-ν}`, nondimensionalization
//! and conversion of critical `Q` values back to habitat sizes and
//! populations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dist::InitialProfile;
use crate::error::{Error, Result};

/// Which side of the μ = ν line the exponents fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// μ < ν: survives regardless of habitat size.
    Unconditional,
    /// μ = ν: critical length `π/√μ`, independent of the data.
    Balanced,
    /// μ > ν: critical mass depends on the initial distribution.
    Conditional,
}

/// Growth exponent μ and diffusion exponent ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponents", into = "RawExponents")]
pub struct ModelExponents {
    mu: f64,
    nu: f64,
}

#[derive(Serialize, Deserialize)]
struct RawExponents {
    mu: f64,
    nu: f64,
}

impl TryFrom<RawExponents> for ModelExponents {
    type Error = Error;
    fn try_from(r: RawExponents) -> Result<Self> {
        ModelExponents::new(r.mu, r.nu)
    }
}

impl From<ModelExponents> for RawExponents {
    fn from(e: ModelExponents) -> Self {
        RawExponents { mu: e.mu, nu: e.nu }
    }
}

impl ModelExponents {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponents must be positive and finite, got mu = {mu}, nu = {nu}"
            )));
        }
        Ok(ModelExponents { mu, nu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn regime(&self) -> Regime {
        if self.mu < self.nu {
            Regime::Unconditional
        } else if self.mu == self.nu {
            Regime::Balanced
        } else {
            Regime::Conditional
        }
    }

    /// Rejects μ < ν, where no survival threshold exists.
    pub fn require_conditional(&self) -> Result<()> {
        match self.regime() {
            Regime::Unconditional => Err(Error::UnsupportedRegime {
                mu: self.mu,
                nu: self.nu,
            }),
            _ => Ok(()),
        }
    }

    /// True when μ = ν + 2, where the habitat size drops out of `Q`.
    pub fn is_size_free(&self) -> bool {
        self.mu == self.nu + 2.0
    }
}

/// Dimensional model coefficients and habitat data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Growth coefficient `a`.
    pub a: f64,
    /// Diffusion coefficient `D`.
    #[serde(rename = "D")]
    pub d: f64,
    /// Habitat length.
    pub l: f64,
    /// Total initial population.
    pub n0: f64,
}

impl PhysicalParams {
    pub fn new(a: f64, d: f64, l: f64, n0: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("D", d), ("l", l), ("n0", n0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(PhysicalParams { a, d, l, n0 })
    }
}

/// Critical value of `Q` when μ = ν.
pub fn balanced_qc(mu: f64) -> f64 {
    PI * PI / mu
}

/// `Q = (a/D)·l^{2+ν-μ}·n₀^{μ-ν}`.
pub fn compute_q(exps: ModelExponents, phys: PhysicalParams) -> f64 {
    let (mu, nu) = (exps.mu(), exps.nu());
    phys.a / phys.d * phys.l.powf(2.0 + nu - mu) * phys.n0.powf(mu - nu)
}

/// Fully nondimensional problem handed to the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimProblem {
    pub exps: ModelExponents,
    /// Domain length: 1 for μ > ν, `√Q` for μ = ν.
    pub length: f64,
    pub q: f64,
    pub profile: InitialProfile,
}

impl NondimProblem {
    /// Builds the problem directly from a value of `Q`.
    pub fn from_q(exps: ModelExponents, q: f64, profile: InitialProfile) -> Result<Self> {
        exps.require_conditional()?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Q must be positive and finite, got {q}"
            )));
        }
        let length = match exps.regime() {
            Regime::Balanced => q.sqrt(),
            _ => 1.0,
        };
        Ok(NondimProblem {
            exps,
            length,
            q,
            profile,
        })
    }

    /// Total nondimensional mass of the initial data.
    pub fn initial_mass(&self) -> f64 {
        match self.exps.regime() {
            Regime::Balanced => 1.0,
            _ => self.q.powf(1.0 / (self.exps.mu() - self.exps.nu())),
        }
    }

    /// Amplitude multiplying the unit-mass profile.
    pub fn amplitude(&self) -> f64 {
        self.initial_mass() / self.length
    }

    /// Initial density at the `m + 1` uniform nodes `X_i = -L/2 + i·L/m`.
    /// Endpoints are exactly zero.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        let amp = self.amplitude();
        let mut rho: Vec<f64> = (0..=m)
            .map(|i| {
                let t = i as f64 / m as f64 - 0.5;
                amp * self.profile.unit_density(t).unwrap_or(0.0)
            })
            .collect();
        rho[0] = 0.0;
        rho[m] = 0.0;
        rho
    }
}

/// Maps the physical problem onto its nondimensional form.
pub fn nondimensionalize(exps: ModelExponents, phys: PhysicalParams, profile: InitialProfile) -> Result<NondimProblem> {
    exps.require_conditional()?;
    let q = compute_q(exps, phys);
    match exps.regime() {
        Regime::Balanced => Ok(NondimProblem {
            exps,
            length: (phys.a / phys.d).sqrt() * phys.l,
            q,
            profile,
        }),
        _ => NondimProblem::from_q(exps, q, profile),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurvivalDirection {
    /// Survival requires `l ≥ l_c`.
    MinimumSize,
    /// Survival requires `l ≤ l_c`.
    MaximumSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalHabitat {
    pub size: f64,
    pub direction: SurvivalDirection,
}

fn check_positive(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(())
}

/// Critical habitat length for a fixed total population.
///
/// For μ = ν the length is `√((D/a)·Q_c)` and does not depend on `n0`.
/// At μ = ν + 2 the habitat size is irrelevant and a
/// [`Error::DegenerateHabitat`] carrying the population condition is
/// returned instead.
pub fn critical_habitat(exps: ModelExponents, qc: f64, a: f64, d: f64, n0: f64) -> Result<CriticalHabitat> {
    check_positive(&[("Q_c", qc), ("a", a), ("D", d), ("n0", n0)])?;
    let (mu, nu) = (exps.mu(), exps.nu());
    match exps.regime() {
        Regime::Unconditional => Err(Error::UnsupportedRegime { mu, nu }),
        Regime::Balanced => Ok(CriticalHabitat {
            size: (d / a * qc).sqrt(),
            direction: SurvivalDirection::MinimumSize,
        }),
        Regime::Conditional if exps.is_size_free() => Err(Error::DegenerateHabitat {
            mu,
            nu,
            n0_critical: (d / a * qc).sqrt(),
        }),
        Regime::Conditional => {
            let size = (d / a * qc).powf(1.0 / (2.0 + nu - mu)) * n0.powf((mu - nu) / (mu - nu - 2.0));
            if !(size > 0.0 && size.is_finite()) {
                return Err(Error::Domain(format!(
                    "critical habitat size is not representable (got {size}); mu - nu = {} is too close to 2",
                    mu - nu
                )));
            }
            let direction = if mu < nu + 2.0 {
                SurvivalDirection::MinimumSize
            } else {
                SurvivalDirection::MaximumSize
            };
            Ok(CriticalHabitat { size, direction })
        }
    }
}

/// Minimum total population for survival in a habitat of length `l`
/// (μ > ν only).
pub fn critical_population(exps: ModelExponents, qc: f64, a: f64, d: f64, l: f64) -> Result<f64> {
    check_positive(&[("Q_c", qc), ("a", a), ("D", d), ("l", l)])?;
    let (mu, nu) = (exps.mu(), exps.nu());
    match exps.regime() {
        Regime::Unconditional => Err(Error::UnsupportedRegime { mu, nu }),
        Regime::Balanced => Err(Error::PopulationUnconstrained { mu }),
        Regime::Conditional if exps.is_size_free() => Ok((d / a * qc).sqrt()),
        Regime::Conditional => {
            let n0 = (d / a * qc).powf(1.0 / (mu - nu)) * l.powf((mu - nu - 2.0) / (mu - nu));
            if !(n0 > 0.0 && n0.is_finite()) {
                return Err(Error::Domain(format!(
                    "critical population is not representable (got {n0})"
                )));
            }
            Ok(n0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{FamilyId, ShapeParam};

    fn e(mu: f64, nu: f64) -> ModelExponents {
        ModelExponents::new(mu, nu).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn q_examples() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(compute_q(e(4.0, 2.0), p), 1.0);
        let p = PhysicalParams::new(1.0, 2.0, 7.0, 3.0).unwrap();
        assert_eq!(compute_q(e(4.0, 2.0), p), 4.5);
        let p = PhysicalParams::new(3.0, 1.0, 2.0, 5.0).unwrap();
        // l^{1}·n0^{1}
        assert!(rel(compute_q(e(2.0, 1.0), p), 30.0) < 1e-15);
    }

    #[test]
    fn exponents_validated() {
        assert!(ModelExponents::new(0.0, 1.0).is_err());
        assert!(ModelExponents::new(1.0, f64::NAN).is_err());
        assert!(PhysicalParams::new(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn nondim_identity() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let prob = nondimensionalize(e(4.0, 2.0), p, InitialProfile::homogeneous()).unwrap();
        assert_eq!(prob.length, 1.0);
        assert_eq!(prob.q, 1.0);
        let rho = prob.sample(10);
        assert!(rho[1..10].iter().all(|&r| r == 1.0));
    }

    #[test]
    fn nondim_balanced_length() {
        let p = PhysicalParams::new(4.0, 1.0, PI / 2.0, 3.0).unwrap();
        let prob = nondimensionalize(e(2.0, 2.0), p, InitialProfile::homogeneous()).unwrap();
        assert!(rel(prob.length, PI) < 1e-15);
        assert!(rel(prob.q, PI * PI) < 1e-15);
        // supercritical: L_c = π/√2 < π
        assert!(prob.length > PI / 2f64.sqrt());
    }

    #[test]
    fn nondim_mu3_nu1() {
        // l drops out: Q = n0²
        let p = PhysicalParams::new(1.0, 1.0, 2.0, 2.0).unwrap();
        let prob = nondimensionalize(e(3.0, 1.0), p, InitialProfile::homogeneous()).unwrap();
        assert_eq!(prob.q, 4.0);
        assert_eq!(prob.amplitude(), 2.0);
    }

    #[test]
    fn nondim_rejects_unconditional() {
        let p = PhysicalParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let r = nondimensionalize(e(1.0, 2.0), p, InitialProfile::homogeneous());
        assert!(matches!(r, Err(Error::UnsupportedRegime { .. })));
    }

    #[test]
    fn habitat_examples() {
        let h = critical_habitat(e(2.0, 1.0), 9.153, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(h.size, 9.153) < 1e-14);
        assert_eq!(h.direction, SurvivalDirection::MinimumSize);

        let h = critical_habitat(e(1.0, 1.0), balanced_qc(1.0), 1.0, 1.0, 5.0).unwrap();
        assert!(rel(h.size, PI) < 1e-15);
        assert_eq!(h.direction, SurvivalDirection::MinimumSize);

        let h = critical_habitat(e(4.0, 1.0), 7.443, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(h.size, 1.0 / 7.443) < 1e-14);
        assert_eq!(h.direction, SurvivalDirection::MaximumSize);
    }

    #[test]
    fn habitat_degenerate_case() {
        match critical_habitat(e(3.0, 1.0), 8.269, 1.0, 1.0, 1.0) {
            Err(Error::DegenerateHabitat { n0_critical, .. }) => {
                assert!(rel(n0_critical, 8.269f64.sqrt()) < 1e-15)
            }
            other => panic!("expected degenerate error, got {other:?}"),
        }
        assert!(critical_habitat(e(1.0, 2.0), 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn population_examples() {
        for l in [0.5, 1.0, 3.0] {
            let n = critical_population(e(4.0, 2.0), 4.467, 1.0, 1.0, l).unwrap();
            assert!(rel(n, 4.467f64.sqrt()) < 1e-15);
            assert!((n - 2.1135).abs() < 1e-4);
        }
        let n = critical_population(e(2.0, 1.0), 9.153, 1.0, 1.0, 1.0).unwrap();
        assert!(rel(n, 9.153) < 1e-15);
        let n = critical_population(e(3.0, 1.0), 8.269, 1.0, 1.0, 2.0).unwrap();
        assert!((n - 2.8756).abs() < 1e-4);
    }

    #[test]
    fn population_rejects_balanced_and_unconditional() {
        assert!(matches!(
            critical_population(e(2.0, 2.0), 1.0, 1.0, 1.0, 1.0),
            Err(Error::PopulationUnconstrained { .. })
        ));
        assert!(matches!(
            critical_population(e(1.0, 2.0), 1.0, 1.0, 1.0, 1.0),
            Err(Error::UnsupportedRegime { .. })
        ));
    }

    #[test]
    fn direction_dichotomy() {
        for (mu, nu) in [(1.5, 1.0), (2.9, 1.0), (3.1, 1.0), (6.0, 2.0), (4.0, 3.5)] {
            let h = critical_habitat(e(mu, nu), 1.3, 1.0, 1.0, 1.0).unwrap();
            let expect = if mu < nu + 2.0 {
                SurvivalDirection::MinimumSize
            } else {
                SurvivalDirection::MaximumSize
            };
            assert_eq!(h.direction, expect);
        }
    }

    #[test]
    fn sample_endpoints_zero() {
        let profile = InitialProfile::new(FamilyId::SymmetricF1, ShapeParam::new(3.0).unwrap()).unwrap();
        let prob = NondimProblem::from_q(e(4.0, 2.0), 2.0, profile).unwrap();
        let rho = prob.sample(50);
        assert_eq!(rho[0], 0.0);
        assert_eq!(rho[50], 0.0);
        assert!(rho[25] > 0.0);
    }
}
