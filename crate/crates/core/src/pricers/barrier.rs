//! Up-and-out barrier with a general terminal payoff given by its transform.
//!
//! `Ṽ = (1/2π)∫ e^{ixξ} Ĝ(ξ)/(q+ψ(ξ)) dξ
//!    - (1/q)(1/(2π)²) ∫_{L⁻} dη e^{i(x-h)η} φ⁺(η) ∫ dξ e^{ihξ} φ⁻(ξ) Ĝ(ξ) / (i(η-ξ))`.

use super::general::restrict;
use super::{Geometry, LaplaceValue, Plan, QCtx, Targets};
use crate::contours::SinhContour;
use crate::error::{Error, Result};
use crate::models::LevyModel;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::Range;
use std::sync::Arc;

/// Fourier transform `Ĝ(ξ) = ∫ e^{-ixξ} G(x) dx` of a terminal payoff.
///
/// `Ĝ` must be analytic in the strip `Im ξ ∈ strip()` and in the cone above it,
/// and `e^{icξ}Ĝ(ξ)` must grow at most polynomially there, `c = phase()`.
pub trait GTransform: Send + Sync + Debug {
    fn g_hat(&self, xi: C64) -> C64;
    fn strip(&self) -> (f64, f64);
    fn phase(&self) -> f64;
}

#[derive(Debug)]
pub(crate) struct BarrierPlan {
    out: usize,
    contour: SinhContour,
    psi: Vec<C64>,
    /// `e^{ixξ} Ĝ der` on the payoff contour
    w_euro: Vec<C64>,
    /// `e^{ihξ} Ĝ der` over `b_range`
    b_w: Vec<C64>,
    b_range: Range<usize>,
    a_range: Range<usize>,
    /// `e^{i(x-h)η} der` over `a_range`
    a_e: Vec<C64>,
    offset: usize,
}

impl BarrierPlan {
    pub fn new(model: &LevyModel, geo: &Geometry, out: usize, x: f64, h: f64, g: Arc<dyn GTransform>) -> Result<Self> {
        let c = g.phase();
        if !(x > c && h > c) {
            return Err(Error::Unsupported(format!(
                "transform payoffs need x and h above the payoff phase {c}; use the digital payoff otherwise"
            )));
        }
        let (glo, ghi) = g.strip();
        let lo = glo.max(0.0);
        let hi = ghi.min(geo.plus.apex());
        if !(lo < hi) {
            return Err(Error::Domain(format!("payoff strip ({glo}, {ghi}) misses (0, {})", geo.plus.apex())));
        }
        let contour = geo.one_dim(model, lo, hi, 0.5 * (lo + hi), 1, None)?;
        // drop nodes where e^{i(x-c)ξ} is negligible before forming e^{ixξ} Ĝ
        let contour = restrict(&contour, geo.trimmed(&contour, x - c))?;
        let psi = model.psi_many(&contour.nodes)?;
        let i = C64::i();
        let full = 0..contour.len();
        let w_euro = full.map(|j| (i * x * contour.nodes[j]).exp() * g.g_hat(contour.nodes[j]) * contour.ders[j]).collect();
        let b_range = geo.trimmed(&contour, h - c);
        let b_w = b_range
            .clone()
            .map(|j| (i * h * contour.nodes[j]).exp() * g.g_hat(contour.nodes[j]) * contour.ders[j])
            .collect();
        let a_range = geo.trimmed(&geo.minus, h - x);
        let a_e = a_range.clone().map(|k| (i * (x - h) * geo.minus.nodes[k]).exp() * geo.minus.ders[k]).collect();
        Ok(Self { out, contour, psi, w_euro, b_w, b_range, a_range, a_e, offset: 0 })
    }
}

impl Plan for BarrierPlan {
    fn std_ranges(&self) -> (Range<usize>, Range<usize>) {
        (0..0, self.a_range.clone())
    }

    fn register(&mut self, targets: &mut Targets) {
        self.offset = targets.push_plus(&self.contour.nodes[self.b_range.clone()]);
    }

    fn contours(&self) -> Vec<&SinhContour> {
        vec![&self.contour]
    }

    fn eval(&self, ctx: &QCtx, out: &mut [LaplaceValue]) -> Result<()> {
        let q = ctx.q;
        let two_pi = 2.0 * PI;
        let mut s = C64::new(0.0, 0.0);
        for (w, p) in self.w_euro.iter().zip(&self.psi) {
            s += w / (q + p);
        }
        let i1 = self.contour.zeta() / two_pi * s;
        let a: Vec<C64> = self.a_range.clone().zip(&self.a_e).map(|(k, e)| e * ctx.phi_plus_on_minus(k)).collect();
        let mut t = C64::new(0.0, 0.0);
        for (n, bw) in self.b_w.iter().enumerate() {
            let row = &ctx.engine.plus_kernel(self.offset + n)[self.a_range.clone()];
            let mut da = C64::new(0.0, 0.0);
            for (d, x) in row.iter().zip(&a) {
                da += d * x;
            }
            // 1/(i(η-ξ)) = i/(ξ-η)
            t += bw * ctx.tab.minus_on_plus[self.offset + n] * C64::i() * da;
        }
        let i2 = self.contour.zeta() * ctx.geo.minus.zeta() / (two_pi * two_pi) * t;
        let slot = &mut out[self.out];
        slot.q = q;
        slot.value = i1 - i2 / q;
        slot.parts = [i1, -i2, C64::new(0.0, 0.0)];
        Ok(())
    }
}
