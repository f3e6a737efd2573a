//! Initial population distributions.
//!
//! Two one-parameter families live on a habitat `[-l/2, l/2]`. Both are
//! written in terms of the unit coordinate `s = 1/2 + x/l` in `[0, 1]`:
//!
//! * symmetric: `s^α (1-s)^α / B(1+α, 1+α)`, peaked at the midpoint;
//! * asymmetric: `(s² (1-s))^γ / B(1+2γ, 1+γ)`, peaked at `x = l/6`.
//!
//! `γ(α)` is chosen so both families share the same maximum density. All
//! densities are evaluated in log space: at `α = 500` the normalization
//! `1/B(501, 501)` is close to the top of the `f64` range while the shape
//! factor is close to the bottom.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scaling::{ModelExponents, Regime};

/// Default tolerance on the log-residual of the `γ(α)` equation.
pub const GAMMA_TOL: f64 = 1e-12;

/// Cap on the number of bracket doublings in [`solve_gamma`].
const GAMMA_MAX_DOUBLINGS: usize = 64;

/// `ln B(p, q)` via log-Gamma.
pub fn ln_beta(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) || !p.is_finite() || !q.is_finite() {
        return Err(Error::Domain(format!(
            "Beta function needs positive finite arguments, got ({p}, {q})"
        )));
    }
    Ok(ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q))
}

/// `B(p, q) = Γ(p)Γ(q)/Γ(p+q)`.
pub fn beta_function(p: f64, q: f64) -> Result<f64> {
    ln_beta(p, q).map(f64::exp)
}

/// Concentration parameter α ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ShapeParam(f64);

impl ShapeParam {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha >= 0.0 {
            Ok(ShapeParam(alpha))
        } else {
            Err(Error::InvalidParameter(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )))
        }
    }

    pub const fn zero() -> Self {
        ShapeParam(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ShapeParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        ShapeParam::new(v)
    }
}

impl From<ShapeParam> for f64 {
    fn from(s: ShapeParam) -> f64 {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyId {
    Homogeneous,
    SymmetricF1,
    AsymmetricF2,
}

impl FamilyId {
    pub fn label(self) -> &'static str {
        match self {
            FamilyId::Homogeneous => "homogeneous",
            FamilyId::SymmetricF1 => "f1",
            FamilyId::AsymmetricF2 => "f2",
        }
    }
}

impl std::fmt::Display for FamilyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for FamilyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homogeneous" | "h" | "uniform" => Ok(FamilyId::Homogeneous),
            "f1" | "symmetric" | "symmetric_f1" => Ok(FamilyId::SymmetricF1),
            "f2" | "asymmetric" | "asymmetric_f2" => Ok(FamilyId::AsymmetricF2),
            other => Err(Error::InvalidParameter(format!(
                "unknown family '{other}' (expected homogeneous, f1 or f2)"
            ))),
        }
    }
}

/// Solves `4^α B(1+α,1+α) = (27/4)^γ B(1+γ,1+2γ)` for γ by expanding
/// bisection on the log-residual.
///
/// The right side is decreasing in γ and equals 1 at γ = 0 while the left
/// side is at most 1, so the log-residual is nonnegative at γ = 0. The upper
/// end starts at `2·max(α, 1)` and doubles until the residual turns negative.
pub fn solve_gamma(alpha: ShapeParam, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    let a = alpha.value();
    if a == 0.0 {
        return Ok(0.0);
    }
    let lhs = a * 4f64.ln() + ln_beta(1.0 + a, 1.0 + a)?;
    let residual = |g: f64| -> Result<f64> { Ok(g * (27.0f64 / 4.0).ln() + ln_beta(1.0 + g, 1.0 + 2.0 * g)? - lhs) };

    let mut lo = 0.0;
    let mut hi = 2.0 * a.max(1.0);
    let mut doublings = 0;
    while residual(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > GAMMA_MAX_DOUBLINGS {
            return Err(Error::Convergence(format!(
                "no sign change of the gamma residual below {hi} for alpha = {a}"
            )));
        }
    }

    loop {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid)?;
        if r.abs() < tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Serialized form of an [`InitialProfile`]; γ and the normalization are
/// recomputed on load.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub family: FamilyId,
    pub alpha: f64,
}

/// A family together with its shape parameter, ready for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct InitialProfile {
    pub family: FamilyId,
    pub shape: ShapeParam,
    /// `γ(α)` for the asymmetric family, 0 otherwise.
    pub gamma_of_alpha: f64,
    /// Cached `ln` of the normalizing Beta function.
    ln_norm: f64,
}

impl InitialProfile {
    pub fn new(family: FamilyId, alpha: ShapeParam) -> Result<Self> {
        Self::with_tol(family, alpha, GAMMA_TOL)
    }

    pub fn with_tol(family: FamilyId, alpha: ShapeParam, tol: f64) -> Result<Self> {
        let a = alpha.value();
        let (shape, gamma, ln_norm) = match family {
            FamilyId::Homogeneous => (ShapeParam::zero(), 0.0, 0.0),
            FamilyId::SymmetricF1 => (alpha, 0.0, ln_beta(1.0 + a, 1.0 + a)?),
            FamilyId::AsymmetricF2 => {
                let g = solve_gamma(alpha, tol)?;
                (alpha, g, ln_beta(1.0 + g, 1.0 + 2.0 * g)?)
            }
        };
        Ok(InitialProfile {
            family,
            shape,
            gamma_of_alpha: gamma,
            ln_norm,
        })
    }

    pub fn homogeneous() -> Self {
        InitialProfile {
            family: FamilyId::Homogeneous,
            shape: ShapeParam::zero(),
            gamma_of_alpha: 0.0,
            ln_norm: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.shape.value()
    }

    /// Unit-mass density on the centered unit interval, `t ∈ [-1/2, 1/2]`.
    /// Returns `None` outside the interval.
    pub fn unit_density(&self, t: f64) -> Option<f64> {
        if !(-0.5..=0.5).contains(&t) {
            return None;
        }
        let left = 0.5 + t;
        let right = 0.5 - t;
        let value = match self.family {
            FamilyId::Homogeneous => 1.0,
            FamilyId::SymmetricF1 => {
                let a = self.shape.value();
                if a == 0.0 {
                    1.0
                } else {
                    (a * (left.ln() + right.ln()) - self.ln_norm).exp()
                }
            }
            FamilyId::AsymmetricF2 => {
                let g = self.gamma_of_alpha;
                if g == 0.0 {
                    1.0
                } else {
                    (g * (right.ln() + 2.0 * left.ln()) - self.ln_norm).exp()
                }
            }
        };
        Some(value)
    }

    /// Location of the maximum on the centered unit interval.
    pub fn unit_argmax(&self) -> f64 {
        match self.family {
            FamilyId::AsymmetricF2 if self.gamma_of_alpha > 0.0 => 1.0 / 6.0,
            _ => 0.0,
        }
    }

    /// Dimensional density `u₀(x)` on a habitat of length `l` holding `n0`
    /// individuals.
    pub fn eval_dimensional(&self, x: f64, l: f64, n0: f64) -> Result<f64> {
        if !(l > 0.0) || !(n0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "habitat length and population must be positive, got l = {l}, n0 = {n0}"
            )));
        }
        let g = self
            .unit_density(x / l)
            .ok_or_else(|| Error::Domain(format!("x = {x} lies outside the habitat [-{0}, {0}]", l / 2.0)))?;
        Ok(g * n0 / l)
    }

    /// Nondimensional initial density `ρ₀(X)` for survival parameter `q`.
    ///
    /// For μ > ν the domain is `[-1/2, 1/2]` and the mass is `q^{1/(μ-ν)}`;
    /// for μ = ν the domain is `[-√q/2, √q/2]` and the mass is 1.
    pub fn eval_nondim(&self, x: f64, exps: ModelExponents, q: f64) -> Result<f64> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!("Q must be positive, got {q}")));
        }
        let (scale, amplitude) = match exps.regime() {
            Regime::Unconditional => {
                return Err(Error::UnsupportedRegime {
                    mu: exps.mu(),
                    nu: exps.nu(),
                })
            }
            Regime::Conditional => (1.0, q.powf(1.0 / (exps.mu() - exps.nu()))),
            Regime::Balanced => {
                let len = q.sqrt();
                (len, 1.0 / len)
            }
        };
        let g = self
            .unit_density(x / scale)
            .ok_or_else(|| Error::Domain(format!("X = {x} lies outside the domain [-{0}, {0}]", scale / 2.0)))?;
        Ok(amplitude * g)
    }
}

impl TryFrom<ProfileSpec> for InitialProfile {
    type Error = Error;
    fn try_from(spec: ProfileSpec) -> Result<Self> {
        InitialProfile::new(spec.family, ShapeParam::new(spec.alpha)?)
    }
}

impl From<InitialProfile> for ProfileSpec {
    fn from(p: InitialProfile) -> Self {
        ProfileSpec {
            family: p.family,
            alpha: p.shape.value(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1(a: f64) -> InitialProfile {
        InitialProfile::new(FamilyId::SymmetricF1, ShapeParam::new(a).unwrap()).unwrap()
    }

    fn f2(a: f64) -> InitialProfile {
        InitialProfile::new(FamilyId::AsymmetricF2, ShapeParam::new(a).unwrap()).unwrap()
    }

    #[test]
    fn beta_small_values() {
        assert!((beta_function(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((beta_function(2.0, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn beta_rejects_nonpositive() {
        assert!(matches!(beta_function(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(beta_function(1.0, -2.0), Err(Error::Domain(_))));
        assert!(ln_beta(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn beta_large_arguments_stay_finite() {
        let lb = ln_beta(501.0, 501.0).unwrap();
        assert!(lb.is_finite() && lb < -690.0);
    }

    #[test]
    fn gamma_zero_at_zero() {
        assert_eq!(solve_gamma(ShapeParam::zero(), GAMMA_TOL).unwrap(), 0.0);
    }

    #[test]
    fn gamma_at_one_brackets() {
        let g = solve_gamma(ShapeParam::new(1.0).unwrap(), GAMMA_TOL).unwrap();
        assert!(g > 0.5 && g < 0.6, "gamma(1) = {g}");
    }

    #[test]
    fn gamma_rejects_bad_tol() {
        assert!(solve_gamma(ShapeParam::new(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn shape_param_rejects_negative() {
        assert!(ShapeParam::new(-0.1).is_err());
        assert!(ShapeParam::new(f64::INFINITY).is_err());
    }

    #[test]
    fn homogeneous_dimensional() {
        let p = f1(0.0);
        assert_eq!(p.eval_dimensional(0.3, 1.0, 1.0).unwrap(), 1.0);
        let h = InitialProfile::homogeneous();
        assert_eq!(h.eval_dimensional(-0.2, 2.0, 3.0).unwrap(), 1.5);
    }

    #[test]
    fn f1_peak_at_alpha_one() {
        let v = f1(1.0).eval_dimensional(0.0, 1.0, 1.0).unwrap();
        assert!((v - 1.5).abs() < 1e-13);
    }

    #[test]
    fn f2_peak_matches_f1_peak() {
        let p1 = f1(1.0).eval_dimensional(0.0, 1.0, 1.0).unwrap();
        let p2 = f2(1.0).eval_dimensional(1.0 / 6.0, 1.0, 1.0).unwrap();
        assert!((p1 - p2).abs() / p1 < 1e-10);
    }

    #[test]
    fn outside_habitat_is_domain_error() {
        assert!(matches!(
            f1(1.0).eval_dimensional(0.51, 1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn endpoints_vanish_for_positive_alpha() {
        for p in [f1(1.0), f2(1.0), f1(500.0), f2(500.0)] {
            assert_eq!(p.unit_density(0.5).unwrap(), 0.0);
            assert_eq!(p.unit_density(-0.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn nondim_examples() {
        let e42 = ModelExponents::new(4.0, 2.0).unwrap();
        assert!((f1(0.0).eval_nondim(0.2, e42, 4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((f1(1.0).eval_nondim(0.0, e42, 1.0).unwrap() - 1.5).abs() < 1e-13);
        let e22 = ModelExponents::new(2.0, 2.0).unwrap();
        let q = std::f64::consts::PI.powi(2) / 2.0;
        let v = f1(0.0).eval_nondim(0.0, e22, q).unwrap();
        assert!((v - q.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn nondim_rejects_unconditional_regime() {
        let e = ModelExponents::new(1.0, 2.0).unwrap();
        assert!(matches!(
            f1(1.0).eval_nondim(0.0, e, 1.0),
            Err(Error::UnsupportedRegime { .. })
        ));
    }

    #[test]
    fn nondim_balanced_domain_is_sqrt_q() {
        let e = ModelExponents::new(1.0, 1.0).unwrap();
        assert!(f1(2.0).eval_nondim(1.4, e, 9.0).is_ok());
        assert!(f1(2.0).eval_nondim(1.6, e, 9.0).is_err());
    }

    #[test]
    fn family_parses() {
        assert_eq!("F1".parse::<FamilyId>().unwrap(), FamilyId::SymmetricF1);
        assert_eq!("f2".parse::<FamilyId>().unwrap(), FamilyId::AsymmetricF2);
        assert_eq!("homogeneous".parse::<FamilyId>().unwrap(), FamilyId::Homogeneous);
        assert!("f3".parse::<FamilyId>().is_err());
    }
}
