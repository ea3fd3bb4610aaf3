//! General payoffs `f(x₁ + X_T, max(x₂, x₁ + X̄_T))` given by transform handles.
//!
//! `Ṽ = (1/2π)∫ e^{ix₁ξ} f̂₁(ξ, x₂)/(q+ψ(ξ)) dξ
//!    + a⁻/(2πq) ∫_{L⁻} e^{ix₁η} φ⁺⁺(η) ŵ₀₁(η, x₂) dη
//!    + 1/(2πq) ∫_{L⁻} e^{i(x₁-x₂)η} φ⁺⁺(η) ŵ⁻₀(η) dη`
//!
//! with
//!
//! `ŵ⁻₀(η) = (1/2π)∫_{L⁺} e^{ix₂ξ₁} φ⁻⁻(ξ₁) f̂₁(ξ₁, x₂) / (i(ξ₁-η)) dξ₁
//!         + (1/(2π)²) ∬ e^{ix₂(ξ₁+ξ₂)} φ⁻⁻(ξ₁) f̂(ξ₁, ξ₂) / (i(η-ξ₁-ξ₂)) dξ₁ dξ₂`.
//!
//! All `q`-independent parts of `ŵ⁻₀` collapse into one dense matrix over the
//! `(η, ξ₁)` nodes.

use super::{Geometry, LaplaceValue, Plan, QCtx, Targets};
use crate::contours::{anchored_contour_at, wing_angles, SinhContour};
use crate::error::{Error, Result};
use crate::models::LevyModel;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::Range;
use std::sync::Arc;

/// Transform handles of a payoff `f(x₁, x₂)`, `x₁ ≤ x₂`.
///
/// `f_hat` is the two-dimensional transform `∬ e^{-ix₁ξ₁-ix₂ξ₂} f₊(x₁, x₂)`,
/// `f_hat_1` the transform in `x₁` only. Both must be analytic above the lower
/// ends of their strips, with `e^{icξ₁} f̂₁` and `e^{ic₂ξ₂} f̂` growing at most
/// polynomially, where `c = x1_phase()` and `c₂ = x2_phase()`.
pub trait PayoffTransform: Send + Sync + Debug {
    fn f_hat(&self, xi1: C64, xi2: C64) -> C64;
    fn f_hat_1(&self, xi1: C64, x2: f64) -> C64;
    /// Transform of the boundary term `w₀(·, x₂)`; zero for most payoffs.
    fn w0_hat_1(&self, _eta: C64, _x2: f64) -> C64 {
        C64::new(0.0, 0.0)
    }
    fn xi1_strip(&self) -> (f64, f64);
    fn xi2_strip(&self) -> (f64, f64);
    fn x1_phase(&self) -> f64;
    fn x2_phase(&self) -> f64;
    /// `false` when `f(x₁, x₂)` does not depend on `x₂`.
    fn depends_on_x2(&self) -> bool {
        true
    }
}

/// `f = 1_{x₁ ≤ a₁, x₂ ≤ a₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdfTransform {
    pub a1: f64,
    pub a2: f64,
}

impl PayoffTransform for CpdfTransform {
    fn f_hat(&self, xi1: C64, xi2: C64) -> C64 {
        let i = C64::i();
        (-i * self.a1 * xi1).exp() / (-i * xi1) * (-i * self.a2 * xi2).exp() / (-i * xi2)
    }

    fn f_hat_1(&self, xi1: C64, x2: f64) -> C64 {
        if x2 > self.a2 {
            return C64::new(0.0, 0.0);
        }
        let i = C64::i();
        (-i * self.a1 * xi1).exp() / (-i * xi1)
    }

    fn xi1_strip(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn xi2_strip(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn x1_phase(&self) -> f64 {
        self.a1
    }

    fn x2_phase(&self) -> f64 {
        self.a2
    }
}

/// `f = 1_{x₁ ≤ a}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanDigital {
    pub a: f64,
}

impl PayoffTransform for EuropeanDigital {
    fn f_hat(&self, _xi1: C64, _xi2: C64) -> C64 {
        C64::new(0.0, 0.0)
    }

    fn f_hat_1(&self, xi1: C64, _x2: f64) -> C64 {
        let i = C64::i();
        (-i * self.a * xi1).exp() / (-i * xi1)
    }

    fn xi1_strip(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn xi2_strip(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn x1_phase(&self) -> f64 {
        self.a
    }

    fn x2_phase(&self) -> f64 {
        0.0
    }

    fn depends_on_x2(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPayoff;

impl PayoffTransform for ZeroPayoff {
    fn f_hat(&self, _xi1: C64, _xi2: C64) -> C64 {
        C64::new(0.0, 0.0)
    }

    fn f_hat_1(&self, _xi1: C64, _x2: f64) -> C64 {
        C64::new(0.0, 0.0)
    }

    fn xi1_strip(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn xi2_strip(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn x1_phase(&self) -> f64 {
        0.0
    }

    fn x2_phase(&self) -> f64 {
        0.0
    }

    fn depends_on_x2(&self) -> bool {
        false
    }
}

#[derive(Debug)]
struct Barrier {
    /// `L⁺` nodes carrying `φ⁻⁻`
    xi_range: Range<usize>,
    /// `L⁻` nodes carrying `φ⁺⁺`
    eta_range: Range<usize>,
    /// `e^{i(x₁-x₂)η} der` over `eta_range`
    a_e: Vec<C64>,
    /// `ŵ⁻₀ = M·(φ⁻⁻ der)`, row-major `eta_range × xi_range`
    m: Vec<C64>,
}

#[derive(Debug)]
struct Atom {
    range: Range<usize>,
    /// `e^{ix₁η} ŵ₀₁(η) der`
    w: Vec<C64>,
}

#[derive(Debug)]
pub(crate) struct GeneralPlan {
    out: usize,
    euro: SinhContour,
    psi: Vec<C64>,
    /// `e^{ix₁ξ} f̂₁ der`
    w_euro: Vec<C64>,
    barrier: Option<Barrier>,
    atom: Option<Atom>,
}

impl GeneralPlan {
    pub fn new(model: &LevyModel, geo: &Geometry, out: usize, x1: f64, x2: f64, f: Arc<dyn PayoffTransform>) -> Result<Self> {
        let i = C64::i();
        let c = f.x1_phase();
        let (slo, shi) = f.xi1_strip();
        let lo = slo.max(0.0);
        let hi = shi.min(geo.plus.apex());
        if !(lo < hi) {
            return Err(Error::Domain(format!("payoff strip ({slo}, {shi}) misses (0, {})", geo.plus.apex())));
        }
        let s = x1 - c;
        let sign = if s > 0.0 { 1 } else if s < 0.0 { -1 } else { 0 };
        let euro = geo.one_dim(model, lo, hi, 0.5 * (lo + hi), sign, None)?;
        let euro = if sign == 0 { euro } else { restrict(&euro, geo.trimmed(&euro, s.abs()))? };
        let psi = model.psi_many(&euro.nodes)?;
        let w_euro = euro
            .nodes
            .iter()
            .zip(&euro.ders)
            .map(|(x, d)| (i * x1 * x).exp() * f.f_hat_1(*x, x2) * d)
            .collect();
        let mut plan = Self { out, euro, psi, w_euro, barrier: None, atom: None };
        if !f.depends_on_x2() {
            return Ok(plan);
        }

        if x2 < c {
            return Err(Error::Unsupported(format!("general payoffs need x2 >= {c}, the x1 phase of the payoff")));
        }
        let c2 = f.x2_phase();
        if x2 > c2 {
            return Err(Error::Unsupported(format!("general payoffs need x2 <= {c2}, the x2 phase of the payoff")));
        }
        let plus = &geo.plus;
        let minus = &geo.minus;
        let xi_range = geo.trimmed(plus, x2 - c);
        let eta_range = geo.trimmed(minus, x2 - x1);

        // narrow wings-down ξ₂ contour, so that η - ξ₁ - ξ₂ stays off zero
        let (wm, wp) = wing_angles(&model.profile, geo.opts.family)?;
        let w2 = -0.5 * wm.abs().min(wp.abs());
        let (lo2, hi2) = f.xi2_strip();
        let hi2 = hi2.min(lo2 + 2.0 * plus.apex());
        let env = |y: f64| (1.0 + y) * (-y).exp();
        let xi2 = anchored_contour_at(lo2, hi2, 0.5 * (lo2 + hi2), w2, w2.abs(), &geo.opts, &env)?;
        let xi2 = restrict(&xi2, geo.trimmed(&xi2, c2 - x2))?;

        let xis: Vec<C64> = plus.nodes[xi_range.clone()].to_vec();
        // g[j][l] = e^{ix₂(ξ_j+ξ₂l)} f̂(ξ_j, ξ₂l) der₂l
        let g: Vec<Vec<C64>> = xis
            .par_iter()
            .map(|&x| {
                xi2.nodes
                    .iter()
                    .zip(&xi2.ders)
                    .map(|(y, d)| (i * x2 * (x + y)).exp() * f.f_hat(x, *y) * d)
                    .collect()
            })
            .collect();
        let h1: Vec<C64> = xis.iter().map(|&x| (i * x2 * x).exp() * f.f_hat_1(x, x2)).collect();
        let z1 = plus.zeta() / (2.0 * PI);
        let z12 = z1 * xi2.zeta() / (2.0 * PI);
        let etas: Vec<C64> = minus.nodes[eta_range.clone()].to_vec();
        let rows: Vec<Result<Vec<C64>>> = etas
            .par_iter()
            .map(|&e| {
                let mut row = Vec::with_capacity(xis.len());
                for (j, &x) in xis.iter().enumerate() {
                    let mut k = C64::new(0.0, 0.0);
                    for (gl, y) in g[j].iter().zip(&xi2.nodes) {
                        let d = e - x - y;
                        if d.norm() <= crate::whf::KERNEL_FLOOR {
                            return Err(Error::SingularKernel(d.norm()));
                        }
                        k += gl / (i * d);
                    }
                    row.push(z1 * h1[j] / (i * (x - e)) + z12 * k);
                }
                Ok(row)
            })
            .collect();
        let mut m = Vec::with_capacity(etas.len() * xis.len());
        for r in rows {
            m.extend(r?);
        }
        let a_e = eta_range.clone().map(|k| (i * (x1 - x2) * minus.nodes[k]).exp() * minus.ders[k]).collect();
        plan.barrier = Some(Barrier { xi_range, eta_range, a_e, m });

        let full = 0..minus.len();
        let w: Vec<C64> = full
            .clone()
            .map(|k| (i * x1 * minus.nodes[k]).exp() * f.w0_hat_1(minus.nodes[k], x2) * minus.ders[k])
            .collect();
        if w.iter().any(|v| v.norm() > 0.0) {
            plan.atom = Some(Atom { range: full, w });
        }
        Ok(plan)
    }
}

/// Copy of `c` keeping only the nodes in `r`.
pub(crate) fn restrict(c: &SinhContour, r: Range<usize>) -> Result<SinhContour> {
    let n_neg = c.grid.n_neg - r.start;
    let n_pos = r.end - 1 - c.grid.n_neg;
    let grid = crate::quad::TrapezoidGrid::new(c.grid.zeta, n_neg, n_pos, c.grid.offset)?;
    SinhContour::new(c.omega1, c.b, c.omega, grid)
}

impl Plan for GeneralPlan {
    fn std_ranges(&self) -> (Range<usize>, Range<usize>) {
        let mut p = 0..0;
        let mut m = 0..0;
        if let Some(b) = &self.barrier {
            p = b.xi_range.clone();
            m = b.eta_range.clone();
        }
        if let Some(a) = &self.atom {
            m = super::union(m, a.range.clone());
        }
        (p, m)
    }

    fn register(&mut self, _targets: &mut Targets) {}

    fn contours(&self) -> Vec<&SinhContour> {
        vec![&self.euro]
    }

    fn eval(&self, ctx: &QCtx, out: &mut [LaplaceValue]) -> Result<()> {
        let q = ctx.q;
        let two_pi = 2.0 * PI;
        let tab = &ctx.tab;
        let mut s = C64::new(0.0, 0.0);
        for (w, p) in self.w_euro.iter().zip(&self.psi) {
            s += w / (q + p);
        }
        let i1 = self.euro.zeta() / two_pi * s;
        let zm = ctx.geo.minus.zeta() / two_pi;

        let mut i2 = C64::new(0.0, 0.0);
        if let Some(a) = &self.atom {
            if tab.a_minus != C64::new(0.0, 0.0) {
                let mut t = C64::new(0.0, 0.0);
                for (k, w) in a.range.clone().zip(&a.w) {
                    t += w * (ctx.phi_plus_on_minus(k) - tab.a_plus);
                }
                i2 = tab.a_minus * zm * t;
            }
        }

        let mut i3 = C64::new(0.0, 0.0);
        if let Some(b) = &self.barrier {
            let geo = ctx.geo;
            let v: Vec<C64> = b
                .xi_range
                .clone()
                .map(|j| (ctx.phi_minus_on_plus(j) - tab.a_minus) * geo.plus.ders[j])
                .collect();
            let n = v.len();
            for (r, k) in b.eta_range.clone().enumerate() {
                let row = &b.m[r * n..(r + 1) * n];
                let mut w = C64::new(0.0, 0.0);
                for (mk, vk) in row.iter().zip(&v) {
                    w += mk * vk;
                }
                i3 += b.a_e[r] * (ctx.phi_plus_on_minus(k) - tab.a_plus) * w;
            }
            i3 *= zm;
        }
        let slot = &mut out[self.out];
        slot.q = q;
        slot.value = i1 + (i2 + i3) / q;
        slot.parts = [i1, i2, i3];
        Ok(())
    }
}
