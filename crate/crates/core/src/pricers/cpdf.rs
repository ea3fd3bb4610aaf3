//! Joint cpdf and no-touch transforms.
//!
//! `Ṽ = I₁ + I₂/q` with
//! `I₁ = (1/2π) ∫ e^{i(x₁-a₁)ξ} / (-iξ(q+ψ(ξ))) dξ` and
//! `I₂ = (1/(2π)²) ∫_{L⁻} dη e^{i(x₁-a₂)η} φ⁺(η) ∫_{L⁺} dξ e^{i(a₂-a₁)ξ} φ⁻(ξ) / (ξ(ξ-η))`.
//! `I₁` is taken on `L⁺` for `x₁ > a₁`, on `L⁻` plus the residue `1/q` for
//! `x₁ < a₁`, and on a flat contour for `x₁ = a₁`.

use super::{Geometry, LaplaceValue, Plan, QCtx, Targets};
use crate::contours::SinhContour;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Plus,
    Minus,
    Flat,
}

#[derive(Debug, Clone)]
struct OneDim {
    side: Side,
    range: Range<usize>,
    /// `e^{i(x₁-a₁)ξ} der / (-iξ)` over `range`
    w: Vec<C64>,
    residue: bool,
}

#[derive(Debug, Clone)]
struct AGroup {
    /// `x₁ - a₂`
    phase: f64,
    range: Range<usize>,
    /// `e^{i(x₁-a₂)η} der` over `range`
    e: Vec<C64>,
    /// `L⁺` nodes at which `D·A` is needed
    rows: Range<usize>,
}

#[derive(Debug, Clone)]
enum Entry {
    Zero,
    Full {
        one: OneDim,
        group: usize,
        b_range: Range<usize>,
        /// `e^{i(a₂-a₁)ξ} der / ξ`
        b_w: Vec<C64>,
    },
    NoTouch {
        range: Range<usize>,
        /// `e^{i(x₁-a₂)η} der / (-iη)`
        w: Vec<C64>,
    },
}

/// All cpdf-type points of one pricer.
#[derive(Debug, Clone)]
pub(crate) struct CpdfBatch {
    entries: Vec<(usize, Entry)>,
    groups: Vec<AGroup>,
    zeta_plus: f64,
    zeta_minus: f64,
    zeta_flat: f64,
}

fn weights(c: &SinhContour, range: &Range<usize>, f: impl Fn(C64) -> C64) -> Vec<C64> {
    range.clone().map(|j| f(c.nodes[j]) * c.ders[j]).collect()
}

impl CpdfBatch {
    pub fn new(geo: &Geometry) -> Self {
        Self {
            entries: Vec::new(),
            groups: Vec::new(),
            zeta_plus: geo.plus.zeta(),
            zeta_minus: geo.minus.zeta(),
            zeta_flat: geo.flat.as_ref().map_or(0.0, |f| f.zeta()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add_cpdf(&mut self, geo: &Geometry, out: usize, x1: f64, x2: f64, a1: f64, a2: f64, force_double: bool) -> Result<()> {
        if x2 > a2 {
            self.entries.push((out, Entry::Zero));
            return Ok(());
        }
        // X_T ≤ X̄_T, so a₁ above a₂ is the no-touch event
        let a1 = a1.min(a2);
        if a1 == a2 && !force_double {
            return self.add_no_touch(geo, out, x1, x2, a2);
        }
        if x1 == a2 {
            return Err(Error::Domain("the cpdf transform needs x1 < a2".into()));
        }
        let i = C64::i();
        let s = x1 - a1;
        let one = if s > 0.0 {
            let r = geo.trimmed(&geo.plus, s);
            OneDim { side: Side::Plus, w: weights(&geo.plus, &r, |x| (i * s * x).exp() / (-i * x)), range: r, residue: false }
        } else if s < 0.0 {
            let r = geo.trimmed(&geo.minus, -s);
            OneDim { side: Side::Minus, w: weights(&geo.minus, &r, |x| (i * s * x).exp() / (-i * x)), range: r, residue: true }
        } else {
            let f = geo.flat.as_ref().ok_or_else(|| Error::Numerical("flat contour missing".into()))?;
            let r = 0..f.len();
            OneDim { side: Side::Flat, w: weights(f, &r, |x| 1.0 / (-i * x)), range: r, residue: false }
        };
        let kb = a2 - a1;
        let b_range = geo.trimmed(&geo.plus, kb);
        let b_w = weights(&geo.plus, &b_range, |x| (i * kb * x).exp() / x);
        let group = self.group(geo, x1 - a2);
        let g = &mut self.groups[group];
        g.rows = super::union(g.rows.clone(), b_range.clone());
        self.entries.push((out, Entry::Full { one, group, b_range, b_w }));
        Ok(())
    }

    pub fn add_no_touch(&mut self, geo: &Geometry, out: usize, x1: f64, x2: f64, a2: f64) -> Result<()> {
        if x2 > a2 {
            self.entries.push((out, Entry::Zero));
            return Ok(());
        }
        if x1 == a2 {
            return Err(Error::Domain("the no-touch transform needs x1 < a2".into()));
        }
        let i = C64::i();
        let s = x1 - a2;
        let range = geo.trimmed(&geo.minus, -s);
        let w = weights(&geo.minus, &range, |x| (i * s * x).exp() / (-i * x));
        self.entries.push((out, Entry::NoTouch { range, w }));
        Ok(())
    }

    fn group(&mut self, geo: &Geometry, phase: f64) -> usize {
        if let Some(k) = self.groups.iter().position(|g| g.phase == phase) {
            return k;
        }
        let range = geo.trimmed(&geo.minus, -phase);
        let i = C64::i();
        let e = weights(&geo.minus, &range, |x| (i * phase * x).exp());
        self.groups.push(AGroup { phase, range, e, rows: 0..0 });
        self.groups.len() - 1
    }
}

impl Plan for CpdfBatch {
    fn std_ranges(&self) -> (Range<usize>, Range<usize>) {
        let mut p = 0..0;
        let mut m = 0..0;
        for g in &self.groups {
            p = super::union(p, g.rows.clone());
            m = super::union(m, g.range.clone());
        }
        for (_, e) in &self.entries {
            if let Entry::NoTouch { range, .. } = e {
                m = super::union(m, range.clone());
            }
        }
        (p, m)
    }

    fn register(&mut self, _targets: &mut Targets) {}

    fn contours(&self) -> Vec<&SinhContour> {
        Vec::new()
    }

    fn eval(&self, ctx: &QCtx, out: &mut [LaplaceValue]) -> Result<()> {
        let q = ctx.q;
        let two_pi = 2.0 * PI;
        // D·A per group over the rows it serves
        let mut da: Vec<Vec<C64>> = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let a: Vec<C64> = g.range.clone().zip(&g.e).map(|(k, e)| e * ctx.phi_plus_on_minus(k)).collect();
            let mut v = Vec::with_capacity(g.rows.len());
            for j in g.rows.clone() {
                let row = &ctx.engine.plus_kernel(j - ctx.targets.std_plus.start)[g.range.clone()];
                let mut re = 0.0;
                let mut im = 0.0;
                for (d, x) in row.iter().zip(&a) {
                    re += d.re * x.re - d.im * x.im;
                    im += d.re * x.im + d.im * x.re;
                }
                v.push(C64::new(re, im));
            }
            da.push(v);
        }
        for (o, e) in &self.entries {
            let slot = &mut out[*o];
            slot.q = q;
            match e {
                Entry::Zero => {}
                Entry::NoTouch { range, w } => {
                    let mut s = C64::new(0.0, 0.0);
                    for (k, wk) in range.clone().zip(w) {
                        s += wk * ctx.phi_plus_on_minus(k);
                    }
                    let i1 = (1.0 + self.zeta_minus / two_pi * s) / q;
                    slot.value = i1;
                    slot.parts[0] = i1;
                }
                Entry::Full { one, group, b_range, b_w } => {
                    let (inv, zeta) = match one.side {
                        Side::Plus => (&ctx.inv_plus, self.zeta_plus),
                        Side::Minus => (&ctx.inv_minus, self.zeta_minus),
                        Side::Flat => (&ctx.inv_flat, self.zeta_flat),
                    };
                    let mut s = C64::new(0.0, 0.0);
                    for (j, wj) in one.range.clone().zip(&one.w) {
                        s += wj * inv[j];
                    }
                    let mut i1 = zeta / two_pi * s;
                    if one.residue {
                        i1 += 1.0 / q;
                    }
                    let g = &self.groups[*group];
                    let dav = &da[*group];
                    let mut t = C64::new(0.0, 0.0);
                    for (j, bj) in b_range.clone().zip(b_w) {
                        t += bj * ctx.phi_minus_on_plus(j) * dav[j - g.rows.start];
                    }
                    let i2 = self.zeta_plus * self.zeta_minus / (two_pi * two_pi) * t;
                    slot.value = i1 + i2 / q;
                    slot.parts = [i1, i2, C64::new(0.0, 0.0)];
                }
            }
        }
        Ok(())
    }
}
