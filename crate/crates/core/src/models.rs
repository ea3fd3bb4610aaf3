//! Characteristic exponents with their analyticity metadata.
//!
//! Convention: `E[exp(iξX_t)] = exp(-tψ(ξ))`, `ψ(ξ) = -iμξ + ψ⁰(ξ)`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use statrs::function::gamma::gamma;
use std::f64::consts::FRAC_PI_2;

/// Analyticity and growth data used to build contours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityProfile {
    /// Order of growth of `ψ` at infinity.
    pub nu: f64,
    /// Strip of analyticity `(μ₋, μ₊)`; may be infinite.
    pub strip: (f64, f64),
    /// Cone of analyticity `(γ₋, γ₊)`.
    pub cone: (f64, f64),
    /// Cone on which `Re ψ⁰` grows to `+∞`.
    pub positive_cone: (f64, f64),
    pub drift: f64,
    pub is_sl: bool,
}

impl RegularityProfile {
    /// Finite variation with nonzero drift: the single-pair-of-contours path is not available.
    pub fn finite_variation_with_drift(&self) -> bool {
        self.nu < 1.0 && self.drift != 0.0
    }

    /// Strip with infinite ends replaced by `±width`.
    pub fn working_strip(&self, width: f64) -> (f64, f64) {
        (self.strip.0.max(-width), self.strip.1.min(width))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    KoBoLSymmetric,
    KoBoLGeneral,
    Brownian,
}

/// Raw model parameters. `c_plus`/`nu_plus` describe positive jumps, which are
/// damped by `λ₋`; `c_minus`/`nu_minus` describe negative jumps, damped by `λ₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub c_plus: f64,
    pub c_minus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub sigma2: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub profile: RegularityProfile,
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu < 2.0) {
        return Err(Error::InvalidParameter(format!("KoBoL order must lie in (0, 2), got {nu}")));
    }
    if (nu - 1.0).abs() < 1e-12 {
        return Err(Error::Unsupported("KoBoL with order 1 needs a separate closed form".into()));
    }
    Ok(())
}

impl LevyModel {
    /// KoBoL with `c₊ = c₋ = c`, `ν₊ = ν₋ = ν`.
    pub fn kobol(nu: f64, lambda_plus: f64, lambda_minus: f64, c: f64, mu: f64) -> Result<Self> {
        let mut m = Self::kobol_general(c, c, nu, nu, lambda_plus, lambda_minus, mu)?;
        m.kind = ModelKind::KoBoLSymmetric;
        Ok(m)
    }

    /// Symmetric KoBoL with `c` calibrated so that `ψ''(0) = m2`.
    pub fn kobol_calibrated(nu: f64, lambda_plus: f64, lambda_minus: f64, m2: f64, mu: f64) -> Result<Self> {
        let c = calibrate_second_moment(&ModelFamily::KoBoL { nu, lambda_plus, lambda_minus }, m2)?;
        Self::kobol(nu, lambda_plus, lambda_minus, c, mu)
    }

    pub fn kobol_general(
        c_plus: f64,
        c_minus: f64,
        nu_plus: f64,
        nu_minus: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        mu: f64,
    ) -> Result<Self> {
        check_nu(nu_plus)?;
        check_nu(nu_minus)?;
        if c_plus < 0.0 || c_minus < 0.0 || c_plus + c_minus == 0.0 {
            return Err(Error::InvalidParameter("KoBoL intensities must be nonnegative and not both zero".into()));
        }
        if !(lambda_minus <= 0.0 && lambda_plus >= 0.0 && lambda_minus < lambda_plus) {
            return Err(Error::InvalidParameter(format!(
                "need lambda_- <= 0 <= lambda_+, lambda_- < lambda_+ (got {lambda_minus}, {lambda_plus})"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("drift must be finite".into()));
        }
        let nu = nu_plus.max(nu_minus);
        let g = FRAC_PI_2 * (1.0f64).min(1.0 / nu);
        Ok(Self {
            kind: ModelKind::KoBoLGeneral,
            params: ModelParams {
                c_plus,
                c_minus,
                nu_plus,
                nu_minus,
                lambda_plus,
                lambda_minus,
                sigma2: 0.0,
                mu,
            },
            profile: RegularityProfile {
                nu,
                strip: (lambda_minus, lambda_plus),
                cone: (-FRAC_PI_2, FRAC_PI_2),
                positive_cone: (-g, g),
                drift: mu,
                is_sl: true,
            },
        })
    }

    /// Brownian motion `X_t = μt + σW_t`.
    pub fn brownian(sigma: f64, mu: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid Brownian parameters sigma={sigma}, mu={mu}")));
        }
        let g = FRAC_PI_2 / 2.0;
        Ok(Self {
            kind: ModelKind::Brownian,
            params: ModelParams {
                c_plus: 0.0,
                c_minus: 0.0,
                nu_plus: 0.0,
                nu_minus: 0.0,
                lambda_plus: f64::INFINITY,
                lambda_minus: f64::NEG_INFINITY,
                sigma2: sigma * sigma,
                mu,
            },
            profile: RegularityProfile {
                nu: 2.0,
                strip: (f64::NEG_INFINITY, f64::INFINITY),
                cone: (-FRAC_PI_2, FRAC_PI_2),
                positive_cone: (-g, g),
                drift: mu,
                is_sl: true,
            },
        })
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma2.sqrt()
    }

    /// `ψ⁰(ξ)`, the exponent without the drift term.
    pub fn psi0(&self, xi: C64) -> Result<C64> {
        let p = &self.params;
        match self.kind {
            ModelKind::Brownian => Ok(0.5 * p.sigma2 * xi * xi),
            _ => {
                let a = C64::new(-p.lambda_minus, 0.0) - C64::i() * xi;
                let b = C64::new(p.lambda_plus, 0.0) + C64::i() * xi;
                if a.im == 0.0 && a.re <= 0.0 && p.c_plus > 0.0 {
                    return Err(Error::OnCut(format!("xi = {xi} lies on the lower cut (Im xi <= lambda_-)")));
                }
                if b.im == 0.0 && b.re <= 0.0 && p.c_minus > 0.0 {
                    return Err(Error::OnCut(format!("xi = {xi} lies on the upper cut (Im xi >= lambda_+)")));
                }
                let mut s = C64::new(0.0, 0.0);
                if p.c_plus > 0.0 {
                    let v = p.nu_plus;
                    s += p.c_plus * gamma(-v) * ((-p.lambda_minus).powf(v) - a.powf(v));
                }
                if p.c_minus > 0.0 {
                    let v = p.nu_minus;
                    s += p.c_minus * gamma(-v) * (p.lambda_plus.powf(v) - b.powf(v));
                }
                Ok(s)
            }
        }
    }

    pub fn psi(&self, xi: C64) -> Result<C64> {
        Ok(self.psi0(xi)? - C64::i() * self.params.mu * xi)
    }

    /// `ψ` at each point of `xs`.
    pub fn psi_many(&self, xs: &[C64]) -> Result<Vec<C64>> {
        xs.iter().map(|&x| self.psi(x)).collect()
    }

    /// `E[X_1] = iψ'(0)`.
    pub fn mean(&self) -> f64 {
        let p = &self.params;
        match self.kind {
            ModelKind::Brownian => p.mu,
            _ => {
                let mut m = p.mu;
                if p.c_plus > 0.0 {
                    let v = p.nu_plus;
                    m -= p.c_plus * gamma(-v) * v * (-p.lambda_minus).powf(v - 1.0);
                }
                if p.c_minus > 0.0 {
                    let v = p.nu_minus;
                    m += p.c_minus * gamma(-v) * v * p.lambda_plus.powf(v - 1.0);
                }
                m
            }
        }
    }

    /// `ψ''(0)`, the second instantaneous moment.
    pub fn second_moment(&self) -> f64 {
        let p = &self.params;
        match self.kind {
            ModelKind::Brownian => p.sigma2,
            _ => {
                let mut s = 0.0;
                if p.c_plus > 0.0 {
                    s += p.c_plus * gamma(2.0 - p.nu_plus) * (-p.lambda_minus).powf(p.nu_plus - 2.0);
                }
                if p.c_minus > 0.0 {
                    s += p.c_minus * gamma(2.0 - p.nu_minus) * p.lambda_plus.powf(p.nu_minus - 2.0);
                }
                s
            }
        }
    }
}

/// Parameter family for moment calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    KoBoL { nu: f64, lambda_plus: f64, lambda_minus: f64 },
    Brownian,
}

/// Intensity `c` (or `σ²` for Brownian motion) such that `ψ''(0) = m2`.
pub fn calibrate_second_moment(family: &ModelFamily, m2: f64) -> Result<f64> {
    if !(m2 > 0.0 && m2.is_finite()) {
        return Err(Error::InvalidParameter(format!("second moment must be positive, got {m2}")));
    }
    match *family {
        ModelFamily::Brownian => Ok(m2),
        ModelFamily::KoBoL { nu, lambda_plus, lambda_minus } => {
            check_nu(nu)?;
            if !(lambda_minus < 0.0 && lambda_plus > 0.0) {
                return Err(Error::InvalidParameter(
                    "calibration needs lambda_- < 0 < lambda_+ (both tails damped)".into(),
                ));
            }
            let s = gamma(2.0 - nu) * ((-lambda_minus).powf(nu - 2.0) + lambda_plus.powf(nu - 2.0));
            Ok(m2 / s)
        }
    }
}

/// Asymptotic coefficient: `ψ(ρe^{iφ}) ~ c_∞(φ) ρ^ν` as `ρ → ∞`.
pub fn c_infinity(model: &LevyModel, phi: f64) -> Result<C64> {
    let (g0, g1) = model.profile.cone;
    if !(phi > g0 && phi < g1) {
        return Err(Error::Domain(format!("angle {phi} outside the cone ({g0}, {g1})")));
    }
    let p = &model.params;
    match model.kind {
        ModelKind::Brownian => Ok(0.5 * p.sigma2 * C64::from_polar(1.0, 2.0 * phi)),
        _ => {
            // -c Γ(-ν) (∓i)^ν e^{iνφ} for each tail; only the highest order survives
            let nu = model.profile.nu;
            let mut s = C64::new(0.0, 0.0);
            if p.c_plus > 0.0 && p.nu_plus == nu {
                s -= p.c_plus * gamma(-nu) * C64::from_polar(1.0, -nu * FRAC_PI_2);
            }
            if p.c_minus > 0.0 && p.nu_minus == nu {
                s -= p.c_minus * gamma(-nu) * C64::from_polar(1.0, nu * FRAC_PI_2);
            }
            Ok(s * C64::from_polar(1.0, nu * phi))
        }
    }
}
