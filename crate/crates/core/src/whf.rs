//! Wiener-Hopf factors `φ±_q` on sinh contours.
//!
//! `φ⁺_q(ξ) = exp[(1/2πi) ∫_{L⁻} ξ ℓ(η) / (η(ξ-η)) dη]` for `ξ` above `L⁻`, and
//! `φ⁻_q(ξ) = exp[-(1/2πi) ∫_{L⁺} ξ ℓ(η) / (η(ξ-η)) dη]` for `ξ` below `L⁺`,
//! with `ℓ = ln(1 + ψ/q)`. The other factor at the same point follows from
//! `φ⁺φ⁻ = q/(q+ψ)`.
//!
//! For finite-variation models with drift `μ ≠ 0` the log is taken of
//! `1 + ψ⁰/(q - iμη)` and the factor `q/(q - iμξ)` is attached to `φ⁺`
//! (`μ > 0`) or `φ⁻` (`μ < 0`); the opposite factor then carries an atom at 0.

use crate::contours::{anchored_contour, wing_angles, ContourOptions, Family, SinhContour};
use crate::error::{Error, Result};
use crate::models::LevyModel;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Relative distance below which a target is treated as sitting on a node.
pub const KERNEL_FLOOR: f64 = 1e-12;

/// How the integrand log and the prefactors are formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogMode {
    Standard,
    /// Finite variation, `μ > 0`: `φ⁻` has an atom.
    DriftUp(f64),
    /// Finite variation, `μ < 0`: `φ⁺` has an atom.
    DriftDown(f64),
}

impl LogMode {
    pub fn for_model(model: &LevyModel) -> Result<Self> {
        let p = &model.profile;
        if p.nu <= 0.0 {
            return Err(Error::Unsupported("driftless order-0 processes need a separate treatment".into()));
        }
        if p.finite_variation_with_drift() {
            Ok(if p.drift > 0.0 { LogMode::DriftUp(p.drift) } else { LogMode::DriftDown(p.drift) })
        } else {
            Ok(LogMode::Standard)
        }
    }

    fn mu(self) -> f64 {
        match self {
            LogMode::Standard => 0.0,
            LogMode::DriftUp(m) | LogMode::DriftDown(m) => m,
        }
    }

    fn log(self, q: C64, eta: C64, psi: C64) -> Result<C64> {
        let z = match self {
            LogMode::Standard => 1.0 + psi / q,
            _ => {
                let mu = self.mu();
                let den = q - C64::i() * mu * eta;
                1.0 + (psi + C64::i() * mu * eta) / den
            }
        };
        if z.re <= 0.0 && z.im.abs() <= 1e-8 * z.norm().max(1.0) {
            return Err(Error::Deformation(format!("1 + psi/q = {z} on the branch cut at eta = {eta}, q = {q}")));
        }
        Ok(z.ln())
    }

    fn pre_plus(self, q: C64, xi: C64) -> C64 {
        match self {
            LogMode::DriftUp(mu) => q / (q - C64::i() * mu * xi),
            _ => C64::new(1.0, 0.0),
        }
    }

    fn pre_minus(self, q: C64, xi: C64) -> C64 {
        match self {
            LogMode::DriftDown(mu) => q / (q - C64::i() * mu * xi),
            _ => C64::new(1.0, 0.0),
        }
    }
}

/// Factor values for one `q`.
#[derive(Debug, Clone)]
pub struct WhfTable {
    pub q: C64,
    /// `φ⁺` at the plus-side targets (computed directly).
    pub plus_on_plus: Vec<C64>,
    /// `φ⁻` at the plus-side targets (from the identity).
    pub minus_on_plus: Vec<C64>,
    /// `φ⁻` at the minus-side targets (computed directly).
    pub minus_on_minus: Vec<C64>,
    /// `φ⁺` at the minus-side targets (from the identity).
    pub plus_on_minus: Vec<C64>,
    pub a_plus: C64,
    pub a_minus: C64,
    pub psi_plus: Arc<[C64]>,
    pub psi_minus: Arc<[C64]>,
}

#[derive(Debug, Clone)]
struct AtomGrid {
    zeta: f64,
    /// `der/η` at the nodes
    weights: Vec<C64>,
    nodes: Vec<C64>,
    psi: Vec<C64>,
}

/// q-independent precomputation for evaluating factors at fixed targets.
#[derive(Debug, Clone)]
pub struct WhfEngine {
    pub model: LevyModel,
    pub mode: LogMode,
    pub plus: SinhContour,
    pub minus: SinhContour,
    psi_plus_int: Vec<C64>,
    psi_minus_int: Vec<C64>,
    w_plus: Vec<C64>,
    w_minus: Vec<C64>,
    pub plus_targets: Vec<C64>,
    pub minus_targets: Vec<C64>,
    psi_pt: Arc<[C64]>,
    psi_mt: Arc<[C64]>,
    /// `1/(ξ_t - η_k)`, row-major `plus_targets × minus nodes`
    k_plus: Vec<C64>,
    /// `1/(η_t - ξ_j)`, row-major `minus_targets × plus nodes`
    k_minus: Vec<C64>,
    atom: Option<AtomGrid>,
}

fn kernel(targets: &[C64], nodes: &[C64]) -> Result<Vec<C64>> {
    let mut k = Vec::with_capacity(targets.len() * nodes.len());
    for &t in targets {
        for &n in nodes {
            let d = t - n;
            if d.norm() <= KERNEL_FLOOR * (1.0 + t.norm()) {
                return Err(Error::SingularKernel(d.norm()));
            }
            k.push(1.0 / d);
        }
    }
    Ok(k)
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

impl WhfEngine {
    /// Engine integrating over `plus` (upper) and `minus` (lower) and evaluating
    /// at arbitrary targets: plus-side targets must lie above `minus`, minus-side
    /// targets below `plus`.
    pub fn new(
        model: &LevyModel,
        plus: SinhContour,
        minus: SinhContour,
        plus_targets: Vec<C64>,
        minus_targets: Vec<C64>,
    ) -> Result<Self> {
        let mode = LogMode::for_model(model)?;
        let psi_plus_int = model.psi_many(&plus.nodes)?;
        let psi_minus_int = model.psi_many(&minus.nodes)?;
        let w_plus = plus.nodes.iter().zip(&plus.ders).map(|(x, d)| d / x).collect();
        let w_minus = minus.nodes.iter().zip(&minus.ders).map(|(x, d)| d / x).collect();
        let psi_pt: Arc<[C64]> = model.psi_many(&plus_targets)?.into();
        let psi_mt: Arc<[C64]> = model.psi_many(&minus_targets)?.into();
        let k_plus = kernel(&plus_targets, &minus.nodes)?;
        let k_minus = kernel(&minus_targets, &plus.nodes)?;
        let atom = match mode {
            LogMode::Standard => None,
            LogMode::DriftUp(_) => Some(atom_grid(model, &plus, true)?),
            LogMode::DriftDown(_) => Some(atom_grid(model, &minus, false)?),
        };
        Ok(Self {
            model: *model,
            mode,
            plus,
            minus,
            psi_plus_int,
            psi_minus_int,
            w_plus,
            w_minus,
            plus_targets,
            minus_targets,
            psi_pt,
            psi_mt,
            k_plus,
            k_minus,
            atom,
        })
    }

    /// Engine whose targets are the contour nodes in the given index ranges.
    pub fn on_pair(
        model: &LevyModel,
        plus: SinhContour,
        minus: SinhContour,
        plus_range: std::ops::Range<usize>,
        minus_range: std::ops::Range<usize>,
    ) -> Result<Self> {
        let pt = plus.nodes[plus_range].to_vec();
        let mt = minus.nodes[minus_range].to_vec();
        Self::new(model, plus, minus, pt, mt)
    }

    /// Row `t` of `1/(ξ_t - η_k)` over all nodes `η_k` of the minus contour.
    pub fn plus_kernel(&self, t: usize) -> &[C64] {
        let n = self.minus.len();
        &self.k_plus[t * n..(t + 1) * n]
    }

    /// Factor table at `q`.
    pub fn table(&self, q: C64) -> Result<WhfTable> {
        let mode = self.mode;
        let mut v_minus = Vec::with_capacity(self.minus.len());
        for (k, (&eta, &p)) in self.minus.nodes.iter().zip(&self.psi_minus_int).enumerate() {
            v_minus.push(mode.log(q, eta, p)? * self.w_minus[k]);
        }
        let mut v_plus = Vec::with_capacity(self.plus.len());
        for (j, (&xi, &p)) in self.plus.nodes.iter().zip(&self.psi_plus_int).enumerate() {
            v_plus.push(mode.log(q, xi, p)? * self.w_plus[j]);
        }
        let nm = self.minus.len();
        let np = self.plus.len();
        let cp = C64::new(0.0, -self.minus.zeta() / (2.0 * PI));
        let cm = C64::new(0.0, self.plus.zeta() / (2.0 * PI));

        let mut plus_on_plus = Vec::with_capacity(self.plus_targets.len());
        let mut minus_on_plus = Vec::with_capacity(self.plus_targets.len());
        for (t, &xi) in self.plus_targets.iter().enumerate() {
            let s = dot(&self.k_plus[t * nm..(t + 1) * nm], &v_minus);
            let fp = mode.pre_plus(q, xi) * (cp * xi * s).exp();
            plus_on_plus.push(fp);
            minus_on_plus.push(identity(q, fp, self.psi_pt[t])?);
        }
        let mut minus_on_minus = Vec::with_capacity(self.minus_targets.len());
        let mut plus_on_minus = Vec::with_capacity(self.minus_targets.len());
        for (t, &eta) in self.minus_targets.iter().enumerate() {
            let s = dot(&self.k_minus[t * np..(t + 1) * np], &v_plus);
            let fm = mode.pre_minus(q, eta) * (cm * eta * s).exp();
            minus_on_minus.push(fm);
            plus_on_minus.push(identity(q, fm, self.psi_mt[t])?);
        }
        let (a_plus, a_minus) = self.atoms(q)?;
        Ok(WhfTable {
            q,
            plus_on_plus,
            minus_on_plus,
            minus_on_minus,
            plus_on_minus,
            a_plus,
            a_minus,
            psi_plus: self.psi_pt.clone(),
            psi_minus: self.psi_mt.clone(),
        })
    }

    /// Atom masses `(a⁺, a⁻)` at `q`.
    pub fn atoms(&self, q: C64) -> Result<(C64, C64)> {
        let zero = C64::new(0.0, 0.0);
        match (&self.atom, self.mode) {
            (Some(g), LogMode::DriftUp(_)) => Ok((zero, atom_value(g, self.mode, q, true)?)),
            (Some(g), LogMode::DriftDown(_)) => Ok((atom_value(g, self.mode, q, false)?, zero)),
            _ => Ok((zero, zero)),
        }
    }
}

fn identity(q: C64, other: C64, psi: C64) -> Result<C64> {
    let den = (q + psi) * other;
    if den.norm() == 0.0 || !den.re.is_finite() || !den.im.is_finite() {
        return Err(Error::Deformation(format!("zero divisor in the factor identity at q = {q}")));
    }
    Ok(q / den)
}

/// Long grid for the atom integral `∫ ℓ⁰/η dη`, whose integrand decays only
/// like `|η|^{ν-1}`.
fn atom_grid(model: &LevyModel, like: &SinhContour, upper: bool) -> Result<AtomGrid> {
    let nu = model.profile.nu;
    let rate = 1.0 - nu;
    let d = like.omega.abs();
    let tol = 1e-15;
    let mut opts = ContourOptions::new(tol, Family::RealQ);
    opts.n_xi = None;
    let env = move |y: f64| (-rate * y).exp();
    let apex = like.apex();
    let (lo, hi) = if upper { (0.0, 2.0 * apex) } else { (2.0 * apex, 0.0) };
    let c = anchored_contour(lo, hi, like.omega, d, &opts, &env)?;
    let psi = model.psi_many(&c.nodes)?;
    let weights = c.nodes.iter().zip(&c.ders).map(|(x, dd)| dd / x).collect();
    Ok(AtomGrid { zeta: c.grid.zeta, weights, nodes: c.nodes, psi })
}

fn atom_value(g: &AtomGrid, mode: LogMode, q: C64, upper: bool) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    for ((&eta, &p), &w) in g.nodes.iter().zip(&g.psi).zip(&g.weights) {
        s += mode.log(q, eta, p)? * w;
    }
    // a⁻ = exp[-(1/2πi)∫_{L⁺}], a⁺ = exp[(1/2πi)∫_{L⁻}]
    let c = if upper { C64::new(0.0, g.zeta / (2.0 * PI)) } else { C64::new(0.0, -g.zeta / (2.0 * PI)) };
    Ok((c * s).exp())
}

/// `φ⁺_q` at `targets` by direct integration over `integration`, which must lie
/// below every target.
pub fn phi_plus(model: &LevyModel, q: C64, targets: &[C64], integration: &SinhContour) -> Result<Vec<C64>> {
    let mode = LogMode::for_model(model)?;
    let psi = model.psi_many(&integration.nodes)?;
    let mut v = Vec::with_capacity(integration.len());
    for ((&eta, &p), &d) in integration.nodes.iter().zip(&psi).zip(&integration.ders) {
        v.push(mode.log(q, eta, p)? * d / eta);
    }
    let c = C64::new(0.0, -integration.zeta() / (2.0 * PI));
    let k = kernel(targets, &integration.nodes)?;
    let n = integration.len();
    Ok(targets
        .iter()
        .enumerate()
        .map(|(t, &xi)| mode.pre_plus(q, xi) * (c * xi * dot(&k[t * n..(t + 1) * n], &v)).exp())
        .collect())
}

/// `φ⁻_q` at `targets` by direct integration over `integration`, which must lie
/// above every target.
pub fn phi_minus(model: &LevyModel, q: C64, targets: &[C64], integration: &SinhContour) -> Result<Vec<C64>> {
    let mode = LogMode::for_model(model)?;
    let psi = model.psi_many(&integration.nodes)?;
    let mut v = Vec::with_capacity(integration.len());
    for ((&xi, &p), &d) in integration.nodes.iter().zip(&psi).zip(&integration.ders) {
        v.push(mode.log(q, xi, p)? * d / xi);
    }
    let c = C64::new(0.0, integration.zeta() / (2.0 * PI));
    let k = kernel(targets, &integration.nodes)?;
    let n = integration.len();
    Ok(targets
        .iter()
        .enumerate()
        .map(|(t, &eta)| mode.pre_minus(q, eta) * (c * eta * dot(&k[t * n..(t + 1) * n], &v)).exp())
        .collect())
}

/// `q / ((q + ψ)·φ_other)` elementwise.
pub fn phi_from_identity(q: C64, phi_other: &[C64], psi_values: &[C64]) -> Result<Vec<C64>> {
    if phi_other.len() != psi_values.len() {
        return Err(Error::InvalidParameter("factor and exponent arrays differ in length".into()));
    }
    phi_other.iter().zip(psi_values).map(|(&f, &p)| identity(q, f, p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Factor split `φ = a + φ_reduced` on one side.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub side: Side,
    pub q: C64,
    pub atom: C64,
    model: LevyModel,
    integration: SinhContour,
}

impl Decomposition {
    /// `φ(ξ) - a` at `targets`.
    pub fn reduced(&self, targets: &[C64]) -> Result<Vec<C64>> {
        let full = match self.side {
            Side::Plus => phi_plus(&self.model, self.q, targets, &self.integration)?,
            Side::Minus => phi_minus(&self.model, self.q, targets, &self.integration)?,
        };
        Ok(full.into_iter().map(|f| f - self.atom).collect())
    }
}

/// Atom of the factor on `side` at `q` and an evaluator of the reduced factor.
///
/// The integration contour for the reduced factor is the default lower (plus
/// side) or upper (minus side) contour for real `q`.
pub fn decompose(model: &LevyModel, q: C64, side: Side, tol: f64) -> Result<Decomposition> {
    let mode = LogMode::for_model(model)?;
    let opts = ContourOptions::new(tol, Family::RealQ);
    let (wm, wp) = wing_angles(&model.profile, Family::RealQ)?;
    let strip = model.profile.working_strip(2.0);
    let env = |y: f64| (1.0 + y) * (-y).exp();
    let upper = anchored_contour(0.0, strip.1, wp, wp.abs(), &opts, &env)?;
    let lower = anchored_contour(strip.0, 0.0, wm, wm.abs(), &opts, &env)?;
    let atom = match (mode, side) {
        (LogMode::DriftUp(_), Side::Minus) => atom_value(&atom_grid(model, &upper, true)?, mode, q, true)?,
        (LogMode::DriftDown(_), Side::Plus) => atom_value(&atom_grid(model, &lower, false)?, mode, q, false)?,
        _ => C64::new(0.0, 0.0),
    };
    let integration = match side {
        Side::Plus => lower,
        Side::Minus => upper,
    };
    Ok(Decomposition { side, q, atom, model: *model, integration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::contour_pair;

    fn bm_plus(sigma: f64, mu: f64, q: f64, xi: C64) -> C64 {
        let s2 = sigma * sigma;
        let bp = (-mu + (mu * mu + 2.0 * q * s2).sqrt()) / s2;
        bp / (bp - C64::i() * xi)
    }

    fn bm_minus(sigma: f64, mu: f64, q: f64, xi: C64) -> C64 {
        let s2 = sigma * sigma;
        let bm = (mu + (mu * mu + 2.0 * q * s2).sqrt()) / s2;
        bm / (bm + C64::i() * xi)
    }

    fn pair(model: &LevyModel, fam: Family) -> (SinhContour, SinhContour) {
        contour_pair(&model.profile, model.profile.working_strip(2.0), &ContourOptions::new(1e-15, fam)).unwrap()
    }

    #[test]
    fn factors_are_one_at_zero() {
        let m = LevyModel::kobol_calibrated(1.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let (p, n) = pair(&m, Family::RealQ);
        let q = C64::new(3.0, 0.0);
        let z = [C64::new(0.0, 0.0)];
        assert_eq!(phi_plus(&m, q, &z, &n).unwrap()[0], C64::new(1.0, 0.0));
        assert_eq!(phi_minus(&m, q, &z, &p).unwrap()[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn brownian_factors_match_closed_form() {
        let (sigma, mu, q) = (0.3, 0.0, 1.0);
        let m = LevyModel::brownian(sigma, mu).unwrap();
        let (p, n) = pair(&m, Family::RealQ);
        let targets: Vec<C64> = (-10..=10).map(|k| C64::new(0.7 * k as f64, 0.1)).collect();
        let fp = phi_plus(&m, C64::new(q, 0.0), &targets, &n).unwrap();
        let fm = phi_minus(&m, C64::new(q, 0.0), &targets, &p).unwrap();
        for (t, (a, b)) in targets.iter().zip(fp.iter().zip(&fm)) {
            let ep = bm_plus(sigma, mu, q, *t);
            let em = bm_minus(sigma, mu, q, *t);
            assert!((a / ep - 1.0).norm() < 1e-12, "{t}: {a} vs {ep}");
            assert!((b / em - 1.0).norm() < 1e-12, "{t}: {b} vs {em}");
        }
    }

    #[test]
    fn brownian_identity_continuation() {
        let (sigma, mu, q) = (0.3, 0.1, 2.0);
        let m = LevyModel::brownian(sigma, mu).unwrap();
        let (p, n) = pair(&m, Family::RealQ);
        let range = n.index_range(3.0);
        let eng = WhfEngine::on_pair(&m, p.clone(), n.clone(), p.index_range(3.0), range.clone()).unwrap();
        let tab = eng.table(C64::new(q, 0.0)).unwrap();
        for (k, &eta) in n.nodes[range].iter().enumerate() {
            let e = bm_plus(sigma, mu, q, eta);
            assert!((tab.plus_on_minus[k] / e - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_helper() {
        let q = C64::new(1.5, 0.2);
        let ones = vec![C64::new(1.0, 0.0); 4];
        let zeros = vec![C64::new(0.0, 0.0); 4];
        assert_eq!(phi_from_identity(q, &ones, &zeros).unwrap(), ones);
        let other = vec![C64::new(0.3, 0.1), C64::new(2.0, -1.0)];
        let psi = vec![C64::new(0.5, 0.5), C64::new(-0.2, 1.0)];
        let r = phi_from_identity(q, &other, &psi).unwrap();
        for i in 0..2 {
            assert!((r[i] * other[i] * (q + psi[i]) / q - 1.0).norm() < 1e-15);
        }
        assert!(phi_from_identity(q, &[C64::new(0.0, 0.0)], &[C64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn conjugate_symmetry_for_real_q() {
        let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        let (p, n) = pair(&m, Family::RealQ);
        let q = C64::new(2.77, 0.0);
        let xs = [C64::new(1.3, 0.05), C64::new(-1.3, 0.05)];
        let fm = phi_minus(&m, q, &xs, &p).unwrap();
        assert!((fm[1] - fm[0].conj()).norm() < 1e-13);
        let fp = phi_plus(&m, q, &xs, &n).unwrap();
        assert!((fp[1] - fp[0].conj()).norm() < 1e-13);
    }

    #[test]
    fn no_atoms_without_drift() {
        let m = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
        for side in [Side::Plus, Side::Minus] {
            let d = decompose(&m, C64::new(2.0, 0.0), side, 1e-12).unwrap();
            assert_eq!(d.atom, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn drift_atom_properties() {
        let m = LevyModel::kobol_calibrated(0.5, 1.0, -2.0, 0.1, 0.1).unwrap();
        let d = decompose(&m, C64::new(2.0, 0.0), Side::Minus, 1e-12).unwrap();
        assert!(d.atom.im.abs() < 1e-12 && d.atom.re > 0.0 && d.atom.re < 1.0, "{}", d.atom);
        // φ⁻ - a⁻ → 0 far out along the lower wing
        let far = [C64::new(1e6, -1e6 * 0.3)];
        let r = d.reduced(&far).unwrap()[0];
        assert!(r.norm() < 5e-3, "{r}");
        let big = decompose(&m, C64::new(1e6, 0.0), Side::Minus, 1e-12).unwrap();
        assert!((big.atom.re - 1.0).abs() < 1e-3);
        // no atom on the other side
        assert_eq!(decompose(&m, C64::new(2.0, 0.0), Side::Plus, 1e-12).unwrap().atom, C64::new(0.0, 0.0));
    }

    #[test]
    fn drift_identity() {
        for mu in [0.1, -0.1] {
            let m = LevyModel::kobol_calibrated(0.5, 1.0, -2.0, 0.1, mu).unwrap();
            let (p, n) = pair(&m, Family::RealQ);
            let q = C64::new(2.0, 0.0);
            let pts: Vec<C64> = (-6..=6).map(|k| C64::new(0.9 * k as f64, -0.05)).collect();
            let fp = phi_plus(&m, q, &pts, &n).unwrap();
            let fm = phi_minus(&m, q, &pts, &p).unwrap();
            for (i, x) in pts.iter().enumerate() {
                let psi = m.psi(*x).unwrap();
                assert!((fp[i] * fm[i] * (q + psi) / q - 1.0).norm() < 1e-12, "mu={mu} x={x}");
            }
        }
    }
}
