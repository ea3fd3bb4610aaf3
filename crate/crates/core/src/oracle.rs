//! Independent reference values: reflection-principle formulas for Brownian
//! motion, a flat-contour long-grid evaluation of the cpdf transform, and a
//! coarse Monte Carlo simulator.
//!
//! Nothing here uses the sinh contours or the factor engine of the pricers.

use crate::error::{Error, Result};
use crate::models::{LevyModel, ModelKind};
use crate::quad::{gauss_panels, sum_by_parts, TrapezoidGrid};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};
use std::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub method: &'static str,
    pub value: f64,
    /// Always positive.
    pub est_error: f64,
    /// Nodes or paths.
    pub cost: u64,
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln Φ(x)`, with the asymptotic series once `Φ` underflows.
fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return norm_cdf(x).ln();
    }
    let r = 1.0 / (x * x);
    -0.5 * x * x - (-x).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r))).ln()
}

fn check_bm(sigma: f64, t: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite() && t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("need sigma > 0 and T > 0, got sigma={sigma}, T={t}")));
    }
    Ok(())
}

/// `P[X_T ≤ a₁, max X ≤ a₂]` for `X_t = μt + σW_t`, `X_0 = 0`.
///
/// `a₁` above `a₂` is clamped to `a₂`; `a₂ < 0` gives 0.
pub fn bm_joint_cdf(sigma: f64, mu: f64, t: f64, a1: f64, a2: f64) -> f64 {
    if a2 < 0.0 {
        return 0.0;
    }
    let a1 = a1.min(a2);
    let s = sigma * t.sqrt();
    let reflected = (2.0 * mu * a2 / (sigma * sigma) + ln_norm_cdf((a1 - 2.0 * a2 - mu * t) / s)).exp();
    let v = norm_cdf((a1 - mu * t) / s) - reflected;
    v.clamp(0.0, 1.0)
}

/// `∫₀^∞ e^{-qt} bm_joint_cdf(t) dt` for real `q > 0`, by Gauss-Legendre in `ln t`.
pub fn bm_joint_cdf_laplace(sigma: f64, mu: f64, q: f64, a1: f64, a2: f64) -> Result<f64> {
    check_bm(sigma, 1.0)?;
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("need q > 0, got {q}")));
    }
    let lo = (1e-14f64).ln();
    let hi = (80.0 / q).ln();
    let n = ((hi - lo) / 0.25).ceil() as usize;
    let breaks: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    Ok(gauss_panels(&breaks, 24, |u| {
        let t = u.exp();
        t * (-q * t).exp() * bm_joint_cdf(sigma, mu, t, a1, a2)
    }))
}

/// Price at `X_0 = x₁`, `X̄_0 = x₂` of the claim `(e^{βX_T} - e^{max(x₂, X̄_T)})₊`
/// for `X_t = X_0 + μt + σW_t`.
///
/// The joint density of the terminal value and the maximum is integrated in
/// closed form over the maximum and by panel Gauss-Legendre over the terminal
/// value, with panels split at every kink of the inner integral.
pub fn bm_exchange(sigma: f64, mu: f64, t: f64, beta: f64, x1: f64, x2: f64) -> Result<OracleReport> {
    check_bm(sigma, t)?;
    if !(beta > 1.0) {
        return Err(Error::InvalidParameter(format!("exchange power must exceed 1, got {beta}")));
    }
    if x2 < x1 {
        return Err(Error::Domain("need x2 >= x1".into()));
    }
    let th = mu / sigma;
    let st = t.sqrt();
    let c = 1.0 / (2.0 * PI * t).sqrt();
    let k = 0.5 * sigma;
    let ex2 = x2.exp();
    let mk = (x2 - x1) / sigma;
    let inner = |w: f64| -> f64 {
        let big_a = (beta * (x1 + sigma * w)).exp();
        let lo = w.max(0.0);
        let mz = (beta * (x1 + sigma * w) - x1) / sigma;
        // G(b) - G(a) with G(m) = -c e^{-(2m-w)²/(2T)}
        let mass = |a: f64, b: f64| c * ((-(2.0 * a - w).powi(2) / (2.0 * t)).exp() - (-(2.0 * b - w).powi(2) / (2.0 * t)).exp());
        let mut tot = 0.0;
        if big_a > ex2 {
            let (a, b) = (lo, lo.max(mk));
            if b > a {
                tot += (big_a - ex2) * mass(a, b);
            }
        }
        let (a, b) = (lo.max(mk), mz);
        if b > a {
            // ∫ e^{x₁+σm} p(m) dm through z = 2m - w, u = z - kT
            let (ua, ub) = (2.0 * a - w - k * t, 2.0 * b - w - k * t);
            let ea = (-ua * ua / (2.0 * t)).exp();
            let eb = (-ub * ub / (2.0 * t)).exp();
            let e = (x1 + sigma * w / 2.0 + k * k * t / 2.0).exp() * (c * (ea - eb) + k * (norm_cdf(ub / st) - norm_cdf(ua / st)));
            tot += big_a * mass(a, b) - e;
        }
        tot * (th * w - th * th * t / 2.0).exp()
    };
    let wl = (x1.max(x2) / beta - x1) / sigma;
    let wu = wl.max(0.0) + (th + beta * sigma).max(0.0) * t + 14.0 * st;
    let mut breaks = vec![wl, wu];
    for b in [0.0, -x1 / sigma, mk, (x1 / beta - x1) / sigma, (x2 / beta - x1) / sigma] {
        if b > wl && b < wu {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut fine = vec![breaks[0]];
    for p in breaks.windows(2) {
        let n = ((p[1] - p[0]) / (0.25 * st)).ceil().max(1.0) as usize;
        for j in 1..=n {
            fine.push(p[0] + (p[1] - p[0]) * j as f64 / n as f64);
        }
    }
    let v = gauss_panels(&fine, 32, inner);
    let v2 = gauss_panels(&fine, 48, inner);
    Ok(OracleReport {
        method: "bm-exchange-gl",
        value: v2,
        est_error: (v2 - v).abs().max(1e-15),
        cost: (fine.len() as u64 - 1) * 80,
    })
}

/// Default number of uniform nodes on each factor line of the flat oracle.
pub const FLAT_DEFAULT_N: usize = 16_843;
const FLAT_MAX_N: usize = 10_000_000;
const SBP_ITERS: usize = 3;

/// Uniform nodes `jh`, `|j| ≤ m`, and log-spaced tails `x₀e^u`; trapezoid weights.
fn factor_line(h: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let (du, nu) = (0.05, 500);
    let x0 = m as f64 * h;
    let tail: Vec<f64> = (1..=nu).map(|k| x0 * (du * k as f64).exp()).collect();
    let mut xs = Vec::with_capacity(2 * (m + nu) + 1);
    let mut ws = Vec::with_capacity(xs.capacity());
    for &x in tail.iter().rev() {
        xs.push(-x);
        ws.push(x * du);
    }
    let m = m as i64;
    for j in -m..=m {
        xs.push(j as f64 * h);
        // trapezoid ends of the two pieces meet at ±x₀
        ws.push(if j.abs() == m { 0.5 * h + 0.5 * x0 * du } else { h });
    }
    for &x in &tail {
        xs.push(x);
        ws.push(x * du);
    }
    (xs, ws)
}

/// Cpdf transform `Ṽ(q; x₁, x₂; a₁, a₂)` evaluated on straight lines
/// `Im ξ = ω₊ > 0` and `Im η = ω₋ < 0` with a uniform step.
///
/// The factors come from their Cauchy-type integral representations on the
/// opposite line; the oscillatory sums use three rounds of summation by parts.
/// `big_n` is the number of uniform nodes on each factor line; the target
/// grids cover half and a quarter of that range. Agreement with the pipeline
/// is at the 1e-6 level at the default size.
#[allow(clippy::too_many_arguments)]
pub fn flat_contour_cpdf_laplace(model: &LevyModel, q: C64, x1: f64, x2: f64, a1: f64, a2: f64, big_n: usize) -> Result<C64> {
    if big_n > FLAT_MAX_N {
        return Err(Error::SizeGuard(format!("flat oracle grid of {big_n} nodes exceeds {FLAT_MAX_N}")));
    }
    if big_n < 400 {
        return Err(Error::InvalidParameter(format!("flat oracle needs at least 400 nodes, got {big_n}")));
    }
    if !(q.re > 0.0) {
        return Err(Error::InvalidParameter(format!("need Re q > 0, got {q}")));
    }
    if x2 > a2 {
        return Ok(C64::new(0.0, 0.0));
    }
    if !(a1 < a2) {
        return Err(Error::Unsupported("flat oracle covers a1 < a2 only".into()));
    }
    if !(x1 < a2) || x1 == a1 {
        return Err(Error::Unsupported("flat oracle needs x1 < a2 and x1 != a1".into()));
    }
    let (mu_m, mu_p) = model.profile.strip;
    if !(mu_m < 0.0 && mu_p > 0.0) {
        return Err(Error::Domain("flat oracle needs a strip around the real axis".into()));
    }
    let wp = (0.5 * mu_p).min(0.5);
    let wm = (0.5 * mu_m).max(-1.0);
    let h = 0.38 * wp.min(-wm);
    let i = C64::i();
    let n = SBP_ITERS;
    let mw = big_n / 2;
    let (mi, mo) = (mw / 2, mw / 4);

    let (xs, ws) = factor_line(h, mw);
    let mut lm = Vec::with_capacity(xs.len());
    let mut lp = Vec::with_capacity(xs.len());
    let mut eta_line = Vec::with_capacity(xs.len());
    let mut xi_line = Vec::with_capacity(xs.len());
    for (&x, &w) in xs.iter().zip(&ws) {
        let e = C64::new(x, wm);
        let p = C64::new(x, wp);
        lm.push((1.0 + model.psi(e)? / q).ln() * w / e);
        lp.push((1.0 + model.psi(p)? / q).ln() * w / p);
        eta_line.push(e);
        xi_line.push(p);
    }
    let cauchy = |z: C64, line: &[C64], l: &[C64]| -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (y, v) in line.iter().zip(l) {
            s += v / (z - y);
        }
        s
    };
    let two_pi_i = C64::new(0.0, 2.0 * PI);

    // targets on the upper line: φ⁺ directly, φ⁻ from the identity
    let xi: Vec<C64> = (-(mi as i64)..=(mi + n) as i64).map(|j| C64::new(j as f64 * h, wp)).collect();
    let mut psi_xi = Vec::with_capacity(xi.len());
    let mut phi_m_xi = Vec::with_capacity(xi.len());
    for &z in &xi {
        let ps = model.psi(z)?;
        let php = (z / two_pi_i * cauchy(z, &eta_line, &lm)).exp();
        phi_m_xi.push(q / ((q + ps) * php));
        psi_xi.push(ps);
    }
    let eta: Vec<C64> = (-(mo as i64)..=(mo + n) as i64).map(|j| C64::new(j as f64 * h, wm)).collect();
    let mut phi_p_eta = Vec::with_capacity(eta.len());
    for &z in &eta {
        let phm = (-z / two_pi_i * cauchy(z, &xi_line, &lp)).exp();
        phi_p_eta.push(q / ((q + model.psi(z)?) * phm));
    }

    let gi = TrapezoidGrid::symmetric(h, mi)?;
    let go = TrapezoidGrid::symmetric(h, mo)?;
    let two_pi = 2.0 * PI;

    let s = x1 - a1;
    let g1: Vec<C64> = xi.iter().zip(&psi_xi).map(|(z, p)| (-s * wp).exp() / (-i * z * (q + p))).collect();
    let i1 = sum_by_parts(&gi, -s, &g1, n)? / two_pi;

    let k2 = a2 - a1;
    let base: Vec<C64> = xi.iter().zip(&phi_m_xi).map(|(z, p)| (-k2 * wp).exp() * p / z).collect();
    let k1 = x1 - a2;
    let mut g2 = Vec::with_capacity(eta.len());
    let mut row = vec![C64::new(0.0, 0.0); xi.len()];
    for (e, pp) in eta.iter().zip(&phi_p_eta) {
        for ((r, b), z) in row.iter_mut().zip(&base).zip(&xi) {
            *r = b / (z - e);
        }
        let inner = sum_by_parts(&gi, -k2, &row, n)?;
        g2.push((-k1 * wm).exp() * pp * inner);
    }
    let i2 = sum_by_parts(&go, -k1, &g2, n)? / (two_pi * two_pi);
    Ok(i1 + i2 / q)
}

/// Tempered-stable half: positive jumps `c x^{-1-ν} e^{-λx}`, `x > 0`.
#[derive(Debug, Clone, Copy)]
struct Side {
    c: f64,
    nu: f64,
    lambda: f64,
}

impl Side {
    /// Intensity of the untempered jumps above `ε`; tempering is done by thinning.
    fn pareto_rate(&self, eps: f64) -> f64 {
        self.c * eps.powf(-self.nu) / self.nu
    }

    /// `∫_0^ε x² ν(dx)`.
    fn small_variance(&self, eps: f64) -> f64 {
        let a = 2.0 - self.nu;
        self.c * self.lambda.powf(-a) * gamma(a) * gamma_lr(a, self.lambda * eps)
    }

    /// `∫_ε^∞ x ν(dx) = c λ^{ν-1} Γ(1-ν, λε)`.
    fn big_mean(&self, eps: f64) -> f64 {
        let x = self.lambda * eps;
        let s = 1.0 - self.nu;
        let upper = if s > 0.0 {
            gamma(s) * gamma_ur(s, x)
        } else {
            (gamma(s + 1.0) * gamma_ur(s + 1.0, x) - x.powf(s) * (-x).exp()) / s
        };
        self.c * self.lambda.powf(-s) * upper
    }
}

const MC_EPS: f64 = 1e-3;
const MC_CHUNKS: u64 = 256;

/// Monte Carlo estimate of `P[X_T ≤ a₁, max_k X_{kT/n} ≤ a₂]`, `X_0 = 0`.
///
/// KoBoL jumps below `1e-3` in size are replaced by a Gaussian with the same
/// variance; larger jumps are compound Poisson, drawn from a Pareto law and
/// thinned by the tempering factor. The maximum is taken over the time grid.
/// Paths are split into a fixed number of chunks, each with its own stream of
/// a ChaCha generator seeded by `seed`, so results do not depend on the
/// thread count.
pub fn mc_joint_cdf(model: &LevyModel, t: f64, a1: f64, a2: f64, n_paths: u64, n_steps: usize, seed: u64) -> Result<OracleReport> {
    if !(t > 0.0 && t.is_finite()) || n_paths == 0 || n_steps == 0 {
        return Err(Error::InvalidParameter("need T > 0 and positive path and step counts".into()));
    }
    let p = &model.params;
    let (sides, var, drift) = match model.kind {
        ModelKind::Brownian => (Vec::new(), p.sigma2, p.mu),
        _ => {
            let mut sides = Vec::new();
            let mut var = 0.0;
            let mut big = 0.0;
            if p.c_plus > 0.0 {
                let s = Side { c: p.c_plus, nu: p.nu_plus, lambda: -p.lambda_minus };
                var += s.small_variance(MC_EPS);
                big += s.big_mean(MC_EPS);
                sides.push((1.0, s));
            }
            if p.c_minus > 0.0 {
                let s = Side { c: p.c_minus, nu: p.nu_minus, lambda: p.lambda_plus };
                var += s.small_variance(MC_EPS);
                big -= s.big_mean(MC_EPS);
                sides.push((-1.0, s));
            }
            if sides.iter().any(|(_, s)| !(s.lambda > 0.0)) {
                return Err(Error::Unsupported("simulation needs both tails damped".into()));
            }
            (sides, var, model.mean() - big)
        }
    };
    let rates: Vec<f64> = sides.iter().map(|(_, s)| s.pareto_rate(MC_EPS)).collect();
    let total_rate: f64 = rates.iter().sum();
    let dt = t / n_steps as f64;
    let sd = (var * dt).sqrt();
    let arrivals = if total_rate > 0.0 { Some(Exp::new(total_rate).map_err(|e| Error::Numerical(e.to_string()))?) } else { None };

    let hits: u64 = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = n_paths / MC_CHUNKS + u64::from(chunk < n_paths % MC_CHUNKS);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut x = 0.0;
                let mut next = arrivals.map_or(f64::INFINITY, |d| rng.sample(d));
                let mut alive = a2 >= 0.0;
                for step in 1..=n_steps {
                    if !alive {
                        break;
                    }
                    let z: f64 = rng.sample(StandardNormal);
                    x += drift * dt + sd * z;
                    let now = step as f64 * dt;
                    while next <= now {
                        let mut u = rng.gen::<f64>() * total_rate;
                        let mut k = 0;
                        while k + 1 < rates.len() && u >= rates[k] {
                            u -= rates[k];
                            k += 1;
                        }
                        let (sign, s) = sides[k];
                        let size = MC_EPS * (1.0 - rng.gen::<f64>()).powf(-1.0 / s.nu);
                        if rng.gen::<f64>() < (-s.lambda * size).exp() {
                            x += sign * size;
                        }
                        next += arrivals.map_or(f64::INFINITY, |d| rng.sample(d));
                    }
                    if x > a2 {
                        alive = false;
                    }
                }
                if alive && x <= a1 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let n = n_paths as f64;
    let v = hits as f64 / n;
    let se = (v * (1.0 - v)).max(1.0 / n).sqrt() / n.sqrt();
    Ok(OracleReport { method: "monte-carlo", value: v, est_error: 1.96 * se, cost: n_paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricers::cpdf_laplace;

    #[test]
    fn bm_cdf_trivial_cases() {
        assert_eq!(bm_joint_cdf(0.3, 0.0, 1.0, 0.0, 0.0), 0.0);
        assert_eq!(bm_joint_cdf(0.3, 0.1, 1.0, 0.0, -0.1), 0.0);
        let marginal = norm_cdf(0.1 / 0.3);
        assert!((bm_joint_cdf(0.3, 0.0, 1.0, 0.1, 50.0) - marginal).abs() < 1e-15);
        let v = bm_joint_cdf(0.3, 0.0, 1.0, 0.0, 0.3);
        assert!((v - (0.5 - norm_cdf(-2.0))).abs() < 1e-15);
        // large drift over small variance: the reflection term must not overflow
        let v = bm_joint_cdf(0.05, 0.16, 0.01, 0.0, 50.0);
        assert!((v - norm_cdf(-0.0016 / 0.005)).abs() < 1e-15);
    }

    #[test]
    fn ln_norm_cdf_tail() {
        for x in [-29.0f64, -25.0, -10.0, 0.0, 3.0] {
            assert!((ln_norm_cdf(x) - norm_cdf(x).ln()).abs() < 1e-12 * norm_cdf(x).ln().abs().max(1.0));
        }
        // the series branch against the continued-fraction value of the Mills ratio at 40
        let mills: f64 = 1.0 / (40.0 + 1.0 / (40.0 + 2.0 / (40.0 + 3.0 / (40.0 + 4.0 / (40.0 + 5.0 / 40.0)))));
        let want = -800.0 - 0.5 * (2.0 * PI).ln() + mills.ln();
        assert!((ln_norm_cdf(-40.0) - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn bm_cdf_monotone_and_bounded() {
        let grid: Vec<f64> = (0..41).map(|k| -0.5 + 0.025 * k as f64).collect();
        for mu in [-0.2, 0.0, 0.3] {
            for &a2 in grid.iter().filter(|a| **a >= 0.0) {
                let mut prev = 0.0;
                for &a1 in &grid {
                    let v = bm_joint_cdf(0.3, mu, 0.7, a1, a2);
                    assert!((0.0..=1.0).contains(&v));
                    assert!(v >= prev - 1e-15);
                    assert!(v <= bm_joint_cdf(0.3, mu, 0.7, a1, a2 + 0.025) + 1e-15);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn bm_laplace_of_constant_limit() {
        // a₂ far away: the transform of Φ(a₁/(σ√t)) at a₁ = 0 is 1/(2q)
        let v = bm_joint_cdf_laplace(0.3, 0.0, 2.0, 0.0, 40.0).unwrap();
        assert!((v - 0.25).abs() < 1e-12, "{v}");
    }

    #[test]
    fn bm_exchange_reference_values() {
        let cases = [
            (0.0, 0.0, 0.09412253385985916),
            (-0.1, 0.0, 0.045251919076254844),
            (-0.1, 0.01, 0.045251587380056545),
            (-0.1, 0.05, 0.045201750521796966),
        ];
        for (x1, x2, want) in cases {
            let r = bm_exchange(0.3, 0.0, 0.5, 2.0, x1, x2).unwrap();
            assert!((r.value - want).abs() < 1e-12, "({x1},{x2}): {} vs {want}", r.value);
            assert!(r.est_error > 0.0 && r.est_error < 1e-12);
        }
        let r = bm_exchange(0.3, 0.05, 1.0, 1.5, 0.0, 0.1).unwrap();
        assert!((r.value - 0.075061551648136).abs() < 1e-12);
    }

    #[test]
    fn bm_exchange_matches_mc_of_payoff() {
        // direct simulation of the terminal value and the continuous maximum via the bridge law
        let (sigma, mu, t, beta): (f64, f64, f64, f64) = (0.3, 0.0, 0.5, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 400_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let x = mu * t + sigma * t.sqrt() * z;
            let u: f64 = rng.gen();
            let m = 0.5 * (x + (x * x - 2.0 * sigma * sigma * t * (1.0 - u).ln()).sqrt());
            let v = ((beta * x).exp() - m.max(0.0).exp()).max(0.0);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let r = bm_exchange(sigma, mu, t, beta, 0.0, 0.0).unwrap();
        assert!((mean - r.value).abs() < 4.0 * se, "{mean} ± {se} vs {}", r.value);
    }

    #[test]
    fn flat_guards() {
        let m = LevyModel::brownian(0.3, 0.0).unwrap();
        let q = C64::new(1.0, 0.0);
        assert!(matches!(flat_contour_cpdf_laplace(&m, q, 0.0, 0.0, -0.1, 0.1, 20_000_000), Err(Error::SizeGuard(_))));
        assert!(flat_contour_cpdf_laplace(&m, q, 0.0, 0.0, 0.1, 0.1, 2000).is_err());
        assert_eq!(flat_contour_cpdf_laplace(&m, q, 0.0, 0.2, -0.1, 0.1, 2000).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn flat_brownian_matches_time_quadrature() {
        let (sigma, mu) = (0.3, 0.05);
        let m = LevyModel::brownian(sigma, mu).unwrap();
        for (q, a1, a2) in [(2.0, -0.05, 0.1), (5.0, -0.1, 0.15), (1.0, 0.05, 0.2)] {
            let flat = flat_contour_cpdf_laplace(&m, C64::new(q, 0.0), 0.0, 0.0, a1, a2, FLAT_DEFAULT_N).unwrap();
            let want = bm_joint_cdf_laplace(sigma, mu, q, a1, a2).unwrap();
            assert!((flat - want).norm() < 1e-6, "q={q} ({a1},{a2}): {flat} vs {want}");
        }
    }

    #[test]
    fn flat_large_q_limit() {
        let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let q = 1e4;
        let below = flat_contour_cpdf_laplace(&m, C64::new(q, 0.0), 0.0, 0.0, -0.05, 0.1, 4000).unwrap();
        let above = flat_contour_cpdf_laplace(&m, C64::new(q, 0.0), 0.0, 0.0, 0.05, 0.1, 4000).unwrap();
        assert!((q * below).norm() < 0.02, "{}", q * below);
        assert!((q * above - 1.0).norm() < 0.02, "{}", q * above);
    }

    #[test]
    fn flat_kobol_matches_pipeline() {
        let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let q = C64::new(2.0, 0.0);
        let flat = flat_contour_cpdf_laplace(&m, q, 0.0, 0.0, -0.05, 0.1, FLAT_DEFAULT_N).unwrap();
        let sinh = cpdf_laplace(&m, q, 0.0, 0.0, -0.05, 0.1, 1e-12).unwrap().value;
        assert!(((flat - sinh) * q).norm() < 1e-6, "{flat} vs {sinh}");
    }

    #[test]
    fn kobol_side_moments() {
        // small plus big second moment equals the model's ψ''(0)
        let m = LevyModel::kobol_calibrated(1.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let p = m.params;
        let s = Side { c: p.c_plus, nu: p.nu_plus, lambda: 2.0 };
        let eps = 1e-3;
        let panels: Vec<f64> = (0..=40).map(|k| eps * 1.25f64.powi(k)).chain([20.0, 60.0]).collect();
        let big2 = gauss_panels(&panels, 32, |x| s.c * x.powf(1.0 - s.nu) * (-s.lambda * x).exp());
        let full = s.c * gamma(2.0 - s.nu) * s.lambda.powf(s.nu - 2.0);
        assert!((s.small_variance(eps) + big2 - full).abs() < 1e-10);
        let big1 = gauss_panels(&panels, 32, |x| s.c * x.powf(-s.nu) * (-s.lambda * x).exp());
        assert!((s.big_mean(eps) - big1).abs() < 1e-8 * big1, "{} vs {big1}", s.big_mean(eps));
    }

    #[test]
    fn mc_brownian_within_ci() {
        let (sigma, t, a1, a2) = (0.3, 1.0, 0.0, 0.3);
        let m = LevyModel::brownian(sigma, 0.0).unwrap();
        let n_steps = 1000;
        let r = mc_joint_cdf(&m, t, a1, a2, 200_000, n_steps, 11).unwrap();
        // discrete monitoring shifts the barrier up by 0.5826 σ √dt
        let shift = 0.5826 * sigma * (t / n_steps as f64).sqrt();
        let want = bm_joint_cdf(sigma, 0.0, t, a1, a2 + shift);
        assert!((r.value - want).abs() < 3.0 * r.est_error, "{} ± {} vs {want}", r.value, r.est_error);
    }

    #[test]
    fn mc_degenerate_barrier() {
        let m = LevyModel::brownian(0.3, 0.0).unwrap();
        let r = mc_joint_cdf(&m, 1.0, 0.0, -0.01, 1000, 10, 1).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.est_error > 0.0);
    }

    #[test]
    fn mc_reproducible() {
        let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let a = mc_joint_cdf(&m, 0.25, -0.05, 0.1, 5000, 50, 3).unwrap();
        let b = mc_joint_cdf(&m, 0.25, -0.05, 0.1, 5000, 50, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_kobol_near_benchmark() {
        let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let r = mc_joint_cdf(&m, 0.25, -0.075, 0.025, 200_000, 500, 5).unwrap();
        let want = 0.0528532412024316;
        assert!((r.value - want).abs() < 3.0 * r.est_error, "{} ± {} vs {want}", r.value, r.est_error);
    }
}
