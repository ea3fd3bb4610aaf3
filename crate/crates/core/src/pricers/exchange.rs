//! Option to exchange `e^{X̄}` for `e^{βX}`, `β > 1`.
//!
//! `Ṽ = I₁ + (I₂ + I₃)/q` where `I₁` is a one-dimensional integral with a
//! three-term bracket, `I₂` carries the atom `a⁻_q` (finite variation, `μ > 0`)
//! and `I₃` is an `(η, ξ)` double integral. The `η` contour lies below `-β`.
//!
//! `I₃ = (1/(2π)²) ∫ dη e^{i(x₁-x₂)η} φ⁺⁺(η) ∫ dξ φ⁻⁻(ξ)/(i(η-ξ)) · [e^{βx₂}/(iη-β)
//!      + β e^{(1+iξ(1-1/β))x₂}(1-iξ/β)/((β-iξ)(-iξ)(iη-1-iξ(1-1/β)))
//!      - e^{x₂}(1-iξ)/((-iξ)(iη-1))]`.
//!
//! The `ξ` integrand carries no `e^{-ix₂ξ}` phase: the `y`-integral over
//! `(x₂, ∞)` cancels it exactly. Only the middle term decays upward, so the `ξ`
//! contour opens up and is sized for the algebraic tail of `φ⁻⁻`.

use super::general::restrict;
use super::{Geometry, LaplaceValue, Plan, QCtx, Targets};
use crate::contours::{anchored_contour_at, wing_angles, SinhContour};
use crate::error::{Error, Result};
use crate::models::LevyModel;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::ops::Range;

#[derive(Debug)]
struct Term {
    contour: SinhContour,
    psi: Vec<C64>,
    /// bracket term times phase and `der`
    w: Vec<C64>,
}

impl Term {
    fn sum(&self, q: C64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (w, p) in self.w.iter().zip(&self.psi) {
            s += w / (q + p);
        }
        self.contour.zeta() / (2.0 * PI) * s
    }
}

#[derive(Debug)]
pub(crate) struct ExchangePlan {
    out: usize,
    i1: Vec<Term>,
    eta: SinhContour,
    eta_range: Range<usize>,
    xi: SinhContour,
    eta_offset: usize,
    xi_offset: usize,
    /// `e^{i(x₁-x₂)η} der` over `eta_range`
    a_e: Vec<C64>,
    /// `e^{βx₂}/(iη-β)` and `-e^{x₂}/(iη-1)` over `eta_range`
    c1: Vec<C64>,
    c3: Vec<C64>,
    /// `e^{x₂}/(iη(1-iη))`
    c_atom: Vec<C64>,
    /// `ξ`-side weights times `der`
    u1: Vec<C64>,
    u2: Vec<C64>,
    u3: Vec<C64>,
    /// `1/(i(η-ξ))` and the same times `1/(iη - 1 - iξ(1-1/β))`, row-major
    k1: Vec<C64>,
    k2: Vec<C64>,
}

impl ExchangePlan {
    pub fn new(model: &LevyModel, geo: &Geometry, out: usize, x1: f64, x2: f64, beta: f64) -> Result<Self> {
        let (mu_m, _) = model.profile.strip;
        if !(mu_m < -beta) {
            return Err(Error::Domain(format!(
                "exchange with beta = {beta} needs the strip to extend below -beta; the model has mu_minus = {mu_m}"
            )));
        }
        if x2 < 0.0 {
            return Err(Error::Unsupported("the exchange pricer needs x2 >= 0".into()));
        }
        let i = C64::i();
        let opts = geo.opts;
        let (wm, wp) = wing_angles(&model.profile, opts.family)?;
        let wm = opts.omega_minus.unwrap_or(wm);
        let wp = opts.omega_plus.unwrap_or(wp);
        let hi = geo.plus.apex();
        let std_env = |y: f64| (1.0 + y) * (-y).exp();

        // I₁: terms 1 and 3 decay downward, term 2 follows x₁ - x₂/β
        let mut i1 = Vec::new();
        if !(x1 == 0.0 && x2 == 0.0) {
            let s13 = x1 - x2;
            let rate = if s13 == 0.0 { Some(model.profile.nu) } else { None };
            let c13 = geo.one_dim(model, 0.0, hi, 0.5 * hi, -1, rate)?;
            let r = geo.trimmed(&c13, -s13);
            let c13 = restrict(&c13, r)?;
            let (eb, ex) = ((beta * x2).exp(), x2.exp());
            let w = weights(&c13, |x| (i * s13 * x).exp() * (eb / (beta - i * x) - ex / (-i * x)));
            i1.push(Term { psi: model.psi_many(&c13.nodes)?, contour: c13, w });

            let s2 = x1 - x2 / beta;
            let sign = if s2 > 0.0 { 1 } else if s2 < 0.0 { -1 } else { 0 };
            let c2 = geo.one_dim(model, 0.0, hi, 0.5 * hi, sign, None)?;
            let c2 = if sign == 0 { c2 } else { restrict(&c2, geo.trimmed(&c2, s2.abs()))? };
            let w = weights(&c2, |x| (i * s2 * x).exp() * ex * beta / ((beta - i * x) * (-i * x)));
            i1.push(Term { psi: model.psi_many(&c2.nodes)?, contour: c2, w });
        }

        // η contour: wings down with apex in (μ₋, -β), a quarter of the way down
        let lo = geo.strip.0;
        let apex = -beta - 0.25 * (-beta - lo);
        let eta = anchored_contour_at(lo, -beta, apex, wm, wm.abs(), &opts, &std_env)?;
        let eta_range = geo.trimmed(&eta, x2 - x1);

        // ξ contour, wings up: the φ⁻ tail only decays like |ξ|^{-ν/2}
        let rate = 0.5 * model.profile.nu.min(2.0);
        let env = move |y: f64| (-rate * y).exp();
        let mut o = opts;
        o.n_xi = None;
        let xi = anchored_contour_at(0.0, 2.0 * hi, hi, wp, wp.abs(), &o, &env)?;

        let etas: Vec<C64> = eta.nodes[eta_range.clone()].to_vec();
        let ders: Vec<C64> = eta.ders[eta_range.clone()].to_vec();
        let a_e = etas.iter().zip(&ders).map(|(e, d)| (i * (x1 - x2) * e).exp() * d).collect();
        let c1 = etas.iter().map(|e| (beta * x2).exp() / (i * e - beta)).collect();
        let c3 = etas.iter().map(|e| -x2.exp() / (i * e - 1.0)).collect();
        let c_atom = etas.iter().map(|e| x2.exp() / (i * e * (1.0 - i * e))).collect();

        let g = 1.0 - 1.0 / beta;
        let mut u1 = Vec::with_capacity(xi.len());
        let mut u2 = Vec::with_capacity(xi.len());
        let mut u3 = Vec::with_capacity(xi.len());
        for (x, d) in xi.nodes.iter().zip(&xi.ders) {
            u1.push(*d);
            u2.push(beta * ((1.0 + i * x * g) * x2).exp() * (1.0 - i * x / beta) / ((beta - i * x) * (-i * x)) * d);
            u3.push((1.0 - i * x) / (-i * x) * d);
        }
        let nx = xi.len();
        let rows: Vec<(Vec<C64>, Vec<C64>)> = etas
            .par_iter()
            .map(|&e| {
                let mut r1 = Vec::with_capacity(nx);
                let mut r2 = Vec::with_capacity(nx);
                for x in &xi.nodes {
                    let k = 1.0 / (i * (e - x));
                    r1.push(k);
                    r2.push(k / (i * e - 1.0 - i * x * g));
                }
                (r1, r2)
            })
            .collect();
        let mut k1 = Vec::with_capacity(etas.len() * nx);
        let mut k2 = Vec::with_capacity(etas.len() * nx);
        for (r1, r2) in rows {
            k1.extend(r1);
            k2.extend(r2);
        }
        if k1.iter().chain(&k2).any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::SingularKernel(0.0));
        }
        Ok(Self {
            out,
            i1,
            eta,
            eta_range,
            xi,
            eta_offset: 0,
            xi_offset: 0,
            a_e,
            c1,
            c3,
            c_atom,
            u1,
            u2,
            u3,
            k1,
            k2,
        })
    }
}

fn weights(c: &SinhContour, f: impl Fn(C64) -> C64) -> Vec<C64> {
    c.nodes.iter().zip(&c.ders).map(|(x, d)| f(*x) * d).collect()
}

fn dot(row: &[C64], v: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in row.iter().zip(v) {
        re += a.re * b.re - a.im * b.im;
        im += a.re * b.im + a.im * b.re;
    }
    C64::new(re, im)
}

impl Plan for ExchangePlan {
    fn std_ranges(&self) -> (Range<usize>, Range<usize>) {
        (0..0, 0..0)
    }

    fn register(&mut self, targets: &mut Targets) {
        self.eta_offset = targets.push_minus(&self.eta.nodes[self.eta_range.clone()]);
        self.xi_offset = targets.push_plus(&self.xi.nodes);
    }

    fn contours(&self) -> Vec<&SinhContour> {
        let mut v: Vec<&SinhContour> = self.i1.iter().map(|t| &t.contour).collect();
        v.push(&self.eta);
        v.push(&self.xi);
        v
    }

    fn eval(&self, ctx: &QCtx, out: &mut [LaplaceValue]) -> Result<()> {
        let q = ctx.q;
        let tab = &ctx.tab;
        let two_pi = 2.0 * PI;
        let i1: C64 = self.i1.iter().map(|t| t.sum(q)).sum();

        let ne = self.eta_range.len();
        let phi_pp: Vec<C64> = (0..ne).map(|k| tab.plus_on_minus[self.eta_offset + k] - tab.a_plus).collect();
        let phi_mm: Vec<C64> = (0..self.xi.len())
            .map(|j| tab.minus_on_plus[self.xi_offset + j] - tab.a_minus)
            .collect();
        let v1: Vec<C64> = self.u1.iter().zip(&phi_mm).map(|(u, p)| u * p).collect();
        let v2: Vec<C64> = self.u2.iter().zip(&phi_mm).map(|(u, p)| u * p).collect();
        let v3: Vec<C64> = self.u3.iter().zip(&phi_mm).map(|(u, p)| u * p).collect();
        let nx = self.xi.len();
        let mut s3 = C64::new(0.0, 0.0);
        let mut s_atom = C64::new(0.0, 0.0);
        for k in 0..ne {
            let r1 = &self.k1[k * nx..(k + 1) * nx];
            let r2 = &self.k2[k * nx..(k + 1) * nx];
            let bracket = self.c1[k] * dot(r1, &v1) + dot(r2, &v2) + self.c3[k] * dot(r1, &v3);
            let a = self.a_e[k] * phi_pp[k];
            s3 += a * bracket;
            s_atom += a * self.c_atom[k];
        }
        let ze = self.eta.zeta();
        let i3 = ze * self.xi.zeta() / (two_pi * two_pi) * s3;
        let i2 = if tab.a_minus == C64::new(0.0, 0.0) { C64::new(0.0, 0.0) } else { tab.a_minus * ze / two_pi * s_atom };
        let slot = &mut out[self.out];
        slot.q = q;
        slot.value = i1 + (i2 + i3) / q;
        slot.parts = [i1, i2, i3];
        Ok(())
    }
}
