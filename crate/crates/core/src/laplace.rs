//! Laplace inversion: Gaver-Wynn-Rho on the real axis and the trapezoid rule
//! on a sinh-deformed Bromwich contour.

use crate::contours::BromwichContour;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::{LN_2, PI};

pub const DEFAULT_GWR_M: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwrScheme {
    pub m: usize,
    pub shift_a: f64,
    pub t: f64,
}

impl GwrScheme {
    pub fn new(t: f64) -> Result<Self> {
        Self::with_m(t, DEFAULT_GWR_M, 0.0)
    }

    pub fn with_m(t: f64, m: usize, shift_a: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("maturity must be positive, got {t}")));
        }
        if !(6..=10).contains(&m) {
            return Err(Error::InvalidParameter(format!("GWR order M must lie in [6, 10], got {m}")));
        }
        if m != DEFAULT_GWR_M {
            log::warn!("GWR with M = {m}; only M = 8 is reliable in double precision");
        }
        if !(shift_a >= 0.0 && shift_a.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift must be finite and >= 0, got {shift_a}")));
        }
        Ok(Self { m, shift_a, t })
    }

    /// The `2M` real abscissae `k ln2/T + a`.
    pub fn sample_points(&self) -> Vec<f64> {
        let tau = LN_2 / self.t;
        (1..=2 * self.m).map(|k| k as f64 * tau + self.shift_a).collect()
    }
}

/// Outcome of one batched inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub values: Vec<f64>,
    /// Components for which the rho recursion hit a vanishing denominator.
    pub fallbacks: usize,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Gaver functionals followed by Wynn's rho. `f[k-1]` holds `F(kτ)`.
///
/// The estimate is the last entry of the even rho column whose last two
/// entries agree best, which guards against a late near-breakdown of the
/// recursion. Also returns whether the recursion was cut short.
pub fn gwr_accelerate(f: &[f64], tau: f64) -> (f64, bool) {
    let m = f.len() / 2;
    let mut g0 = vec![0.0; m];
    let mut err = vec![0.0; m];
    for n in 1..=m {
        let c = tau * factorial(2 * n) / (factorial(n) * factorial(n - 1));
        let mut s = 0.0;
        let mut a = 0.0;
        for i in 0..=n {
            let term = binomial(n, i) * f[n + i - 1];
            s += if i % 2 == 0 { term } else { -term };
            a += term.abs();
        }
        g0[n - 1] = c * s;
        err[n - 1] = c * a * f64::EPSILON;
    }
    // a sequence that is constant to roundoff has converged already
    if (1..m).all(|n| (g0[n] - g0[0]).abs() <= 8.0 * (err[n] + err[0])) {
        return (g0[0], false);
    }
    let scale = g0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    // even rho columns; each offers its last entry, scored by the step to its neighbour
    let score = |c: &[f64]| (c[c.len() - 1] - c[c.len() - 2]).abs();
    let mut best = (g0[m - 1], score(&g0));
    let mut prev2 = vec![0.0; m + 1];
    let mut prev = g0;
    for k in 1..m {
        let mut cur = Vec::with_capacity(m - k);
        for n in 0..m - k {
            let diff = prev[n + 1] - prev[n];
            if diff.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                return (best.0, true);
            }
            cur.push(prev2[n + 1] + k as f64 / diff);
        }
        if k % 2 == 0 && cur.len() >= 2 && score(&cur) < best.1 {
            best = (cur[cur.len() - 1], score(&cur));
        }
        prev2 = prev;
        prev = cur;
    }
    (best.0, false)
}

/// Inverts a vector-valued transform; `transform(q)` returns one value per output.
/// The `2M` evaluations run concurrently and are reduced in a fixed order.
pub fn invert_gwr_batch<F>(scheme: &GwrScheme, transform: F) -> Result<Inversion>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let qs = scheme.sample_points();
    let samples: Vec<Vec<f64>> = qs.par_iter().map(|&q| transform(q)).collect::<Result<_>>()?;
    let width = samples[0].len();
    if samples.iter().any(|s| s.len() != width) {
        return Err(Error::Numerical("transform returned vectors of different lengths".into()));
    }
    let tau = LN_2 / scheme.t;
    let unshift = (scheme.shift_a * scheme.t).exp();
    let mut values = Vec::with_capacity(width);
    let mut fallbacks = 0;
    for c in 0..width {
        let mut col = Vec::with_capacity(qs.len());
        for (k, s) in samples.iter().enumerate() {
            if !s[c].is_finite() {
                return Err(Error::NonFinite { index: k as i64, y: qs[k] });
            }
            col.push(s[c]);
        }
        let (v, fb) = gwr_accelerate(&col, tau);
        if fb {
            fallbacks += 1;
        }
        values.push(unshift * v);
    }
    if fallbacks > 0 {
        log::warn!("GWR: {fallbacks} component(s) fell back to a lower rho order");
    }
    Ok(Inversion { values, fallbacks })
}

pub fn invert_gwr<F>(scheme: &GwrScheme, transform: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    Ok(invert_gwr_batch(scheme, |q| transform(q).map(|v| vec![v]))?.values[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BromwichScheme {
    pub contour: BromwichContour,
    pub t: f64,
    pub shift_a: f64,
}

impl BromwichScheme {
    pub fn new(contour: BromwichContour, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("maturity must be positive, got {t}")));
        }
        Ok(Self { contour, t, shift_a: 0.0 })
    }

    pub fn with_shift(mut self, a: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("shift must be finite and >= 0, got {a}")));
        }
        self.shift_a = a;
        Ok(self)
    }

    /// Points at which the transform is evaluated (shift included).
    pub fn sample_points(&self) -> Vec<C64> {
        self.contour.nodes.iter().map(|q| q + self.shift_a).collect()
    }
}

/// `(ζ/π) Re Σ' e^{qT} Ṽ(q) b cosh(iω + y)` over `y ≥ 0`, half weight at `y = 0`.
pub fn invert_sinh_bromwich_batch<F>(scheme: &BromwichScheme, transform: F) -> Result<Vec<f64>>
where
    F: Fn(C64) -> Result<Vec<C64>> + Sync,
{
    let c = &scheme.contour;
    let a = scheme.shift_a;
    let samples: Vec<Vec<C64>> = c.nodes.par_iter().map(|&q| transform(q + a)).collect::<Result<_>>()?;
    let width = samples.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; width];
    for (j, s) in samples.iter().enumerate() {
        if s.len() != width {
            return Err(Error::Numerical("transform returned vectors of different lengths".into()));
        }
        let w = (c.nodes[j] * scheme.t).exp() * c.ders[j] * if j == 0 { 0.5 } else { 1.0 };
        for (o, v) in acc.iter_mut().zip(s) {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { index: j as i64, y: c.grid.node(j as i64) });
            }
            *o += (w * v).re;
        }
    }
    let k = c.grid.zeta / PI * (a * scheme.t).exp();
    Ok(acc.into_iter().map(|v| k * v).collect())
}

pub fn invert_sinh_bromwich<F>(scheme: &BromwichScheme, transform: F) -> Result<f64>
where
    F: Fn(C64) -> Result<C64> + Sync,
{
    Ok(invert_sinh_bromwich_batch(scheme, |q| transform(q).map(|v| vec![v]))?[0])
}

/// Shift that keeps every GWR abscissa above `sigma_floor`.
pub fn shift_for_floor(sigma_floor: f64, t: f64) -> f64 {
    (1.1 * sigma_floor - LN_2 / t).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::{bromwich_contour, ContourOptions, Family};

    #[test]
    fn gwr_constant_is_exact() {
        for t in [0.01, 0.25, 1.0, 7.3, 15.0] {
            let v = invert_gwr(&GwrScheme::new(t).unwrap(), |q| Ok(1.0 / q)).unwrap();
            assert!((v - 1.0).abs() <= 1e-12, "T={t}: {v}");
        }
    }

    #[test]
    fn gwr_exponential() {
        let v = invert_gwr(&GwrScheme::new(1.0).unwrap(), |q| Ok(1.0 / (q + 1.0))).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-7, "{v}");
    }

    #[test]
    fn gwr_linear() {
        let v = invert_gwr(&GwrScheme::new(2.0).unwrap(), |q| Ok(1.0 / (q * q))).unwrap();
        assert!((v - 2.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn gwr_shift_is_consistent() {
        let s = GwrScheme::with_m(3.0, 8, 0.5).unwrap();
        let v = invert_gwr(&s, |q| Ok(1.0 / (q + 1.0))).unwrap();
        assert!((v - (-3.0f64).exp()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn gwr_rejects_bad_order() {
        assert!(GwrScheme::with_m(1.0, 5, 0.0).is_err());
        assert!(GwrScheme::with_m(1.0, 11, 0.0).is_err());
        assert!(GwrScheme::with_m(-1.0, 8, 0.0).is_err());
    }

    fn scheme(t: f64, fam: Family) -> BromwichScheme {
        BromwichScheme::new(bromwich_contour(t, &ContourOptions::new(1e-15, fam)).unwrap(), t).unwrap()
    }

    #[test]
    fn bromwich_closed_forms() {
        for fam in [Family::I, Family::II] {
            let v = invert_sinh_bromwich(&scheme(1.0, fam), |q| Ok(1.0 / (q + 1.0))).unwrap();
            assert!((v - (-1.0f64).exp()).abs() < 1e-13, "{v}");
            for t in [0.1, 1.0, 5.0] {
                let v = invert_sinh_bromwich(&scheme(t, fam), |q| Ok(1.0 / q)).unwrap();
                assert!((v - 1.0).abs() < 1e-13, "{v}");
            }
        }
    }

    #[test]
    fn bromwich_error_decays_with_step() {
        let exact = (-1.0f64).exp();
        let mut prev = f64::INFINITY;
        for n in [20usize, 30, 45] {
            let base = bromwich_contour(1.0, &ContourOptions::new(1e-15, Family::II)).unwrap();
            let lam = base.grid.extent();
            let zeta = lam / n as f64;
            let grid = crate::quad::TrapezoidGrid::new(zeta, 0, n, 0.0).unwrap();
            let c = BromwichContour::new(base.sigma, base.b, base.omega, grid).unwrap();
            let s = BromwichScheme::new(c, 1.0).unwrap();
            let err = (invert_sinh_bromwich(&s, |q| Ok(1.0 / (q + 1.0))).unwrap() - exact).abs();
            assert!(err < prev, "n={n}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn bromwich_shift() {
        let s = scheme(2.0, Family::II).with_shift(0.3).unwrap();
        let v = invert_sinh_bromwich(&s, |q| Ok(1.0 / (q + 1.0))).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn bromwich_flags_non_finite() {
        let r = invert_sinh_bromwich(&scheme(1.0, Family::II), |_| Ok(C64::new(f64::NAN, 0.0)));
        assert!(matches!(r, Err(Error::NonFinite { index: 0, .. })));
    }
}
