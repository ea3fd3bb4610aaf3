//! Trapezoid-rule quadrature on uniform grids, its a-priori error budget,
//! and summation-by-parts acceleration of oscillatory sums.
//!
//! Everything here is contour-agnostic: integrands are supplied as values on
//! grid nodes `offset + j * zeta`, `j = -n_neg..=n_pos`.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Uniform grid `offset + j * zeta` for `j` in `-n_neg..=n_pos`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidGrid {
    pub zeta: f64,
    pub n_neg: usize,
    pub n_pos: usize,
    pub offset: f64,
}

impl TrapezoidGrid {
    pub fn new(zeta: f64, n_neg: usize, n_pos: usize, offset: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {zeta}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("grid offset must be finite".into()));
        }
        Ok(Self { zeta, n_neg, n_pos, offset })
    }

    /// Symmetric grid `j = -n..=n` centred at zero.
    pub fn symmetric(zeta: f64, n: usize) -> Result<Self> {
        Self::new(zeta, n, n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.n_neg + self.n_pos + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: i64) -> f64 {
        self.offset + j as f64 * self.zeta
    }

    /// Node indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = i64> {
        -(self.n_neg as i64)..=(self.n_pos as i64)
    }

    /// Half-length `Λ = N·ζ` of the covered interval (largest side).
    pub fn extent(&self) -> f64 {
        self.n_neg.max(self.n_pos) as f64 * self.zeta
    }
}

/// A-priori error budget for the infinite trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub tol: f64,
    /// Half-width of the strip of analyticity in the integration variable.
    pub d: f64,
    /// Estimate of the Hardy norm `H(g, d)`.
    pub hardy_norm_est: f64,
}

impl ErrorBudget {
    pub fn new(tol: f64, d: f64, hardy_norm_est: f64) -> Result<Self> {
        if !(tol > 0.0) || !(d > 0.0) || !(hardy_norm_est > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "error budget needs tol, d, H > 0 (got {tol}, {d}, {hardy_norm_est})"
            )));
        }
        Ok(Self { tol, d, hardy_norm_est })
    }

    /// Discretization bound `H e^{-2πd/ζ} / (1 - e^{-2πd/ζ})` at step `zeta`.
    pub fn discretization_bound(&self, zeta: f64) -> f64 {
        let e = (-2.0 * PI * self.d / zeta).exp();
        self.hardy_norm_est * e / (1.0 - e)
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn add_part(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *comp += (*sum - t) + x;
        } else {
            *comp += (x - t) + *sum;
        }
        *sum = t;
    }

    #[inline]
    pub fn add(&mut self, z: C64) {
        Self::add_part(&mut self.re, &mut self.re_c, z.re);
        Self::add_part(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// `ζ Σ_j g(j, y_j)` over the grid in ascending `j`.
///
/// The closure receives the node index and the node position.
pub fn trapezoid_sum<F>(grid: &TrapezoidGrid, mut g: F) -> Result<C64>
where
    F: FnMut(i64, f64) -> C64,
{
    let mut acc = CompensatedSum::new();
    for j in grid.indices() {
        let y = grid.node(j);
        let v = g(j, y);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { index: j, y });
        }
        acc.add(v);
    }
    Ok(acc.value() * grid.zeta)
}

/// Largest step `ζ` for which the infinite-trapezoid discretization bound
/// does not exceed `budget.tol`.
pub fn step_for_tolerance(budget: &ErrorBudget) -> f64 {
    2.0 * PI * budget.d / (1.0 + budget.hardy_norm_est / budget.tol).ln()
}

/// Summation by parts applied `n_iters` times:
/// `ζ Σ e^{-i a y_j} g_j = ζ/(e^{iaζ}-1)^n Σ e^{-i a y_j} Δⁿ g_j`.
///
/// `g_values[i]` is the value at index `j = -n_neg + i`; the slice must hold
/// `grid.len() + n_iters` entries so that the forward differences at the right
/// edge can be formed.
pub fn sum_by_parts(grid: &TrapezoidGrid, a: f64, g_values: &[C64], n_iters: usize) -> Result<C64> {
    if n_iters == 0 {
        return Err(Error::InvalidParameter("summation by parts needs n_iters >= 1".into()));
    }
    let need = grid.len() + n_iters;
    if g_values.len() < need {
        return Err(Error::InvalidParameter(format!(
            "summation by parts needs {need} samples, got {}",
            g_values.len()
        )));
    }
    let e = C64::new(0.0, a * grid.zeta).exp() - 1.0;
    if e.norm() < 1e-8 {
        return Err(Error::ResonantPhase(e.norm()));
    }
    let mut diff: Vec<C64> = g_values[..need].to_vec();
    for k in 0..n_iters {
        let m = need - k - 1;
        for i in 0..m {
            diff[i] = diff[i + 1] - diff[i];
        }
    }
    let mut acc = CompensatedSum::new();
    for (i, j) in grid.indices().enumerate() {
        let y = grid.node(j);
        let v = diff[i];
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite { index: j, y });
        }
        acc.add(C64::new(0.0, -a * y).exp() * v);
    }
    Ok(acc.value() * grid.zeta / e.powu(n_iters as u32))
}

/// Smallest `Λ ≥ 0` such that `∫_Λ^∞ envelope(y) dy ≤ tol / 2`, where
/// `envelope` is a nonincreasing bound on `|g(y)|` for `y ≥ 0`.
///
/// The tail integral is evaluated numerically and `Λ` is located by bisection.
pub fn truncation_for_envelope<F>(tol: f64, envelope: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let tail = |lam: f64| -> f64 {
        let h = 0.02;
        let mut s = 0.5 * envelope(lam);
        let mut y = lam;
        for _ in 0..2_000_000 {
            y += h;
            let v = envelope(y);
            s += v;
            if v < 1e-300 || v < tol * 1e-8 * h {
                break;
            }
        }
        s * h
    };
    let target = 0.5 * tol;
    if tail(0.0) <= target {
        return 0.0;
    }
    let mut hi = 1.0;
    while tail(hi) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Probe-based estimate of the Hardy norm `H(g, d)`: the trapezoid integral of
/// `|g|` over 21 probes on each boundary line `Im y = ±d` spanning `[-Λ, Λ]`.
pub fn hardy_norm_estimate<F>(g: F, d: f64, lambda: f64) -> f64
where
    F: Fn(C64) -> C64,
{
    let n = 21;
    let h = 2.0 * lambda / (n - 1) as f64;
    let mut total = 0.0;
    for side in [-1.0, 1.0] {
        let mut s = 0.0;
        for k in 0..n {
            let y = C64::new(-lambda + k as f64 * h, side * d);
            let v = g(y).norm();
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            if v.is_finite() {
                s += w * v;
            } else {
                return f64::INFINITY;
            }
        }
        total += s * h;
    }
    total.max(f64::MIN_POSITIVE)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∫_a^b f` by `n`-point Gauss-Legendre on each of the panels `breaks[k]..breaks[k+1]`.
pub fn gauss_panels<F: FnMut(f64) -> f64>(breaks: &[f64], n: usize, mut f: F) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut s = 0.0;
    for p in breaks.windows(2) {
        let (a, b) = (p[0], p[1]);
        if !(b > a) {
            continue;
        }
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * r * f(c + r * xi);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let grid = TrapezoidGrid::symmetric(0.5, 40).unwrap();
        let v = trapezoid_sum(&grid, |_, y| C64::new((-y * y).exp() / PI.sqrt(), 0.0)).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15, "{}", v.re - 1.0);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn zero_integrand() {
        let grid = TrapezoidGrid::new(0.3, 7, 11, 0.1).unwrap();
        assert_eq!(trapezoid_sum(&grid, |_, _| C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn lorentzian_within_truncation_bound() {
        let n = 10_000;
        let zeta = 0.1;
        let grid = TrapezoidGrid::symmetric(zeta, n).unwrap();
        let v = trapezoid_sum(&grid, |_, y| C64::new(1.0 / (1.0 + y * y) / PI, 0.0)).unwrap();
        // tails: 2/π·(π/2 - atan Λ); discretization: 2e^{-2π/ζ}/(1-e^{-2π/ζ}) with d≈1
        let lam = n as f64 * zeta;
        let tail = 2.0 / PI * (PI / 2.0 - lam.atan());
        let disc = ErrorBudget::new(1.0, 1.0, 2.0).unwrap().discretization_bound(zeta);
        assert!((v.re - 1.0).abs() <= tail + disc + 1e-14);
    }

    #[test]
    fn nonfinite_is_reported_with_node() {
        let grid = TrapezoidGrid::symmetric(1.0, 3).unwrap();
        let err = trapezoid_sum(&grid, |j, _| if j == 2 { C64::new(f64::NAN, 0.0) } else { C64::new(1.0, 0.0) });
        assert_eq!(err, Err(Error::NonFinite { index: 2, y: 2.0 }));
    }

    #[test]
    fn step_matches_closed_form() {
        let b = ErrorBudget::new(1e-12, PI / 4.0, 1.0).unwrap();
        let z = step_for_tolerance(&b);
        assert!((z - 2.0 * PI * (PI / 4.0) / (1e12f64 + 1.0).ln()).abs() < 1e-15);
        assert!((z - 0.1786).abs() < 1e-3);
        assert!(b.discretization_bound(z) <= 1e-12 * (1.0 + 1e-9));
    }

    #[test]
    fn step_monotone_in_tol_and_linear_in_d() {
        let z1 = step_for_tolerance(&ErrorBudget::new(1e-10, 0.5, 1.0).unwrap());
        let z2 = step_for_tolerance(&ErrorBudget::new(0.5e-10, 0.5, 1.0).unwrap());
        assert!(z2 < z1);
        let z3 = step_for_tolerance(&ErrorBudget::new(1e-10, 1.0, 1.0).unwrap());
        assert!((z3 / z1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sum_by_parts_trivial_cases() {
        let grid = TrapezoidGrid::symmetric(0.1, 50).unwrap();
        let zeros = vec![C64::new(0.0, 0.0); grid.len() + 3];
        assert_eq!(sum_by_parts(&grid, 2.0, &zeros, 3).unwrap(), C64::new(0.0, 0.0));
        let ones = vec![C64::new(1.0, 0.0); grid.len() + 1];
        assert_eq!(sum_by_parts(&grid, 2.0, &ones, 1).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn sum_by_parts_rejects_resonance() {
        let grid = TrapezoidGrid::symmetric(0.5, 10).unwrap();
        let g = vec![C64::new(1.0, 0.0); grid.len() + 1];
        let a = 2.0 * PI / 0.5;
        assert!(matches!(sum_by_parts(&grid, a, &g, 1), Err(Error::ResonantPhase(_))));
    }

    #[test]
    fn sum_by_parts_matches_long_trapezoid() {
        let zeta = 0.05;
        let a = 5.0;
        let g = |y: f64| C64::new(1.0 / (1.0 + y * y), 0.0);
        let long = TrapezoidGrid::symmetric(zeta, 1_000_000).unwrap();
        let reference = trapezoid_sum(&long, |_, y| C64::new(0.0, -a * y).exp() * g(y)).unwrap();
        let short = TrapezoidGrid::symmetric(zeta, 4000).unwrap();
        let vals: Vec<C64> = (0..short.len() + 3).map(|i| g(short.node(i as i64 - 4000))).collect();
        let v = sum_by_parts(&short, a, &vals, 3).unwrap();
        assert!((v - reference).norm() < 1e-9, "{:e}", (v - reference).norm());
    }

    #[test]
    fn envelope_truncation() {
        let lam = truncation_for_envelope(1e-12, |y| (-y).exp());
        // ∫_Λ^∞ e^{-y} = e^{-Λ} = 5e-13
        assert!((lam - (2e12f64).ln()).abs() < 1e-2, "{lam}");
    }

    #[test]
    fn hardy_estimate_gaussian() {
        let h = hardy_norm_estimate(|y| (-y * y).exp(), 0.5, 6.0);
        // exact: 2 e^{d²} √π
        let exact = 2.0 * (0.25f64).exp() * PI.sqrt();
        assert!((h / exact - 1.0).abs() < 0.05, "{h} vs {exact}");
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "n={n}: {s} vs {exact}");
        }
    }

    #[test]
    fn gauss_panels_exponential() {
        let v = gauss_panels(&[0.0, 1.0, 3.0], 20, |x| (-x).exp());
        assert!((v - (1.0 - (-3.0f64).exp())).abs() < 1e-14);
    }
}
