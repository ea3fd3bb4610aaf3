//! Sinh-deformed contours `χ(y) = iω₁ + b·sinh(iω + y)` and the deformed
//! Bromwich contour, with the default parameter recipes.

use crate::error::{Error, Result};
use crate::models::{LevyModel, RegularityProfile};
use crate::quad::{step_for_tolerance, truncation_for_envelope, ErrorBudget, TrapezoidGrid};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Hardy-norm constant used when sizing grid steps.
pub const DEFAULT_HARDY: f64 = 10.0;
/// Fraction of the apex interval kept free on each side.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SinhContour {
    pub omega1: f64,
    pub b: f64,
    pub omega: f64,
    pub grid: TrapezoidGrid,
    pub nodes: Vec<C64>,
    pub ders: Vec<C64>,
}

impl SinhContour {
    pub fn new(omega1: f64, b: f64, omega: f64, grid: TrapezoidGrid) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("contour scale must be positive, got {b}")));
        }
        if !(omega.abs() < PI / 2.0) || !omega1.is_finite() {
            return Err(Error::InvalidParameter(format!("wing angle must lie in (-pi/2, pi/2), got {omega}")));
        }
        let mut nodes = Vec::with_capacity(grid.len());
        let mut ders = Vec::with_capacity(grid.len());
        for j in grid.indices() {
            let z = C64::new(grid.node(j), omega);
            nodes.push(C64::new(0.0, omega1) + b * z.sinh());
            ders.push(b * z.cosh());
        }
        Ok(Self { omega1, b, omega, grid, nodes, ders })
    }

    /// Contour whose apex `Im χ(0)` equals `apex`.
    pub fn with_apex(apex: f64, b: f64, omega: f64, grid: TrapezoidGrid) -> Result<Self> {
        Self::new(apex - b * omega.sin(), b, omega, grid)
    }

    pub fn apex(&self) -> f64 {
        self.omega1 + self.b * self.omega.sin()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn zeta(&self) -> f64 {
        self.grid.zeta
    }

    /// Point `χ(y)` for an arbitrary complex `y`.
    pub fn eval(&self, y: C64) -> C64 {
        C64::new(0.0, self.omega1) + self.b * (C64::new(0.0, self.omega) + y).sinh()
    }

    /// Index range of nodes with `|y| <= lambda`.
    pub fn index_range(&self, lambda: f64) -> std::ops::Range<usize> {
        let n = (lambda / self.grid.zeta).floor() as usize;
        let lo = self.grid.n_neg.saturating_sub(n);
        let hi = (self.grid.n_neg + n + 1).min(self.len());
        lo..hi
    }

    /// Smallest `Λ` at which `exp(-κ·|Im χ(y) - apex|)` drops below `e^{-budget}`;
    /// used to trim nodes whose weight carries a decaying exponential.
    pub fn decay_extent(&self, kappa: f64, budget: f64) -> f64 {
        let s = self.b * self.omega.sin().abs();
        let full = self.grid.extent();
        if kappa <= 0.0 || s == 0.0 {
            return full;
        }
        let arg = 1.0 + budget / (kappa * s);
        arg.acosh().min(full)
    }
}

/// Deformed Bromwich contour `q(y) = σ + i·b·sinh(iω + y)`, `y ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BromwichContour {
    pub sigma: f64,
    pub b: f64,
    pub omega: f64,
    pub grid: TrapezoidGrid,
    pub nodes: Vec<C64>,
    pub ders: Vec<C64>,
}

impl BromwichContour {
    pub fn new(sigma: f64, b: f64, omega: f64, grid: TrapezoidGrid) -> Result<Self> {
        if !(b > 0.0) || !(omega > 0.0 && omega < PI / 2.0) {
            return Err(Error::InvalidParameter(format!("invalid Bromwich contour b={b}, omega={omega}")));
        }
        if !(sigma - b * omega.sin() > 0.0) {
            return Err(Error::InvalidParameter("Bromwich contour must stay in the right half-plane".into()));
        }
        if grid.n_neg != 0 {
            return Err(Error::InvalidParameter("Bromwich grid covers y >= 0 only".into()));
        }
        let mut nodes = Vec::with_capacity(grid.len());
        let mut ders = Vec::with_capacity(grid.len());
        for j in grid.indices() {
            let z = C64::new(grid.node(j), omega);
            nodes.push(sigma + C64::i() * b * z.sinh());
            ders.push(b * z.cosh());
        }
        Ok(Self { sigma, b, omega, grid, nodes, ders })
    }

    /// Rightmost point `σ - b sin ω`; the wings open to the left.
    pub fn apex(&self) -> f64 {
        self.sigma - self.b * self.omega.sin()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Wing-angle recipe. `RealQ` serves inversion at real `q`; `I` and `II` are the
/// two Bromwich deformation families used for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    RealQ,
    I,
    II,
}

impl Family {
    /// Divisor `k` in `ω± = ±(π/2)/k · min(1, 1/ν)`.
    fn divisor(self) -> f64 {
        match self {
            Family::RealQ => 2.0,
            Family::I => 4.5,
            Family::II => 5.0,
        }
    }

    pub fn omega_ell(self) -> f64 {
        match self {
            Family::I => PI / 18.0,
            Family::II | Family::RealQ => PI / 20.0,
        }
    }
}

/// Per-call overrides of the default recipes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    pub tol: f64,
    pub family: Family,
    pub epsilon: f64,
    pub hardy: f64,
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
    pub omega_ell: Option<f64>,
    pub n_xi: Option<usize>,
    pub n_ell: Option<usize>,
}

impl ContourOptions {
    pub fn new(tol: f64, family: Family) -> Self {
        Self {
            tol,
            family,
            epsilon: DEFAULT_EPSILON,
            hardy: DEFAULT_HARDY,
            omega_plus: None,
            omega_minus: None,
            omega_ell: None,
            n_xi: None,
            n_ell: None,
        }
    }
}

/// Wing angles `(ω₋, ω₊)` for the given profile and family.
pub fn wing_angles(profile: &RegularityProfile, family: Family) -> Result<(f64, f64)> {
    let (gm, gp) = profile.positive_cone;
    if gm >= 0.0 || gp <= 0.0 {
        return Err(Error::Unsupported(
            "a positivity cone touching the real axis needs sub-polynomial deformations".into(),
        ));
    }
    if !profile.is_sl {
        // signed-SL class
        let w = PI / 8.0 * 2.0 / family.divisor();
        return Ok((-w, w));
    }
    // the positive cone already carries the min(1, 1/ν) factor
    Ok((gm / family.divisor(), gp / family.divisor()))
}

/// Envelope of the factor integrands in the sinh variable.
fn factor_envelope(y: f64) -> f64 {
    (1.0 + y) * (-y).exp()
}

/// Contour with wing angle `omega` whose apex sits at the midpoint of `(lo, hi)`
/// and whose strip image `|Im y| ≤ d` stays inside the interval.
pub fn anchored_contour(lo: f64, hi: f64, omega: f64, d: f64, opts: &ContourOptions, envelope: &dyn Fn(f64) -> f64) -> Result<SinhContour> {
    anchored_contour_at(lo, hi, 0.5 * (lo + hi), omega, d, opts, envelope)
}

/// As [`anchored_contour`] with an explicit apex inside `(lo, hi)`.
pub fn anchored_contour_at(
    lo: f64,
    hi: f64,
    apex: f64,
    omega: f64,
    d: f64,
    opts: &ContourOptions,
    envelope: &dyn Fn(f64) -> f64,
) -> Result<SinhContour> {
    if !(lo < apex && apex < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Deformation(format!("apex {apex} not inside ({lo}, {hi})")));
    }
    let w = omega.abs();
    let fac = if w == 0.0 {
        d.sin()
    } else {
        (w.sin() - (w - d).sin()).max((w + d).sin() - w.sin())
    };
    let room = (apex - lo).min(hi - apex);
    let b = (1.0 - 2.0 * opts.epsilon) * room / fac;
    let zeta = step_for_tolerance(&ErrorBudget::new(opts.tol, d, opts.hardy)?);
    let n = match opts.n_xi {
        Some(n) => n,
        None => (truncation_for_envelope(opts.tol, envelope) / zeta).ceil() as usize,
    };
    SinhContour::with_apex(apex, b, omega, TrapezoidGrid::symmetric(zeta, n)?)
}

/// Upper contour `L⁺` (wings up, apex in `(0, μ₊)`) and lower contour `L⁻`
/// (wings down, apex in `(μ₋, 0)`), built inside `strip`.
pub fn contour_pair(profile: &RegularityProfile, strip: (f64, f64), opts: &ContourOptions) -> Result<(SinhContour, SinhContour)> {
    let (lo, hi) = strip;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::Unsupported("the strip must contain the real axis in its interior".into()));
    }
    contour_pair_clearing(profile, strip, (0.0, 0.0), opts)
}

/// As [`contour_pair`], but with the strip images of both contours kept clear
/// of the horizontal band `band`, so that factors can be evaluated at any point
/// of the band at the full accuracy of the grid.
pub fn contour_pair_clearing(
    profile: &RegularityProfile,
    strip: (f64, f64),
    band: (f64, f64),
    opts: &ContourOptions,
) -> Result<(SinhContour, SinhContour)> {
    let (wm, wp) = wing_angles(profile, opts.family)?;
    let wp = opts.omega_plus.unwrap_or(wp);
    let wm = opts.omega_minus.unwrap_or(wm);
    let (lo, hi) = strip;
    if !(lo < band.0 && band.0 <= band.1 && band.1 < hi) {
        return Err(Error::InvalidParameter(format!("band {band:?} not inside the strip ({lo}, {hi})")));
    }
    let plus = anchored_contour(band.1, hi, wp, wp.abs(), opts, &factor_envelope)?;
    let minus = anchored_contour(lo, band.0, wm, wm.abs(), opts, &factor_envelope)?;
    Ok((plus, minus))
}

/// Flat contour (`ω = 0`) above zero for integrands with algebraic decay
/// `|ξ|^{-ν}` in the sinh variable only.
pub fn flat_contour(profile: &RegularityProfile, hi: f64, opts: &ContourOptions) -> Result<SinhContour> {
    let (_, wp) = wing_angles(profile, Family::RealQ)?;
    let d = (PI / 4.0).min(2.0 * wp.abs());
    let rate = profile.nu;
    let env = move |y: f64| (-rate * y).exp();
    let mut o = *opts;
    o.n_xi = None;
    anchored_contour(0.0, hi, 0.0, d, &o, &env)
}

/// Default deformed Bromwich contour for maturity `t`.
///
/// `σT = 4`, `d_ℓ = 0.9 ω_ℓ`, and `bT` puts the leftmost point of the image of the
/// analyticity strip at `0.05σ`.
pub fn bromwich_contour(t: f64, opts: &ContourOptions) -> Result<BromwichContour> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("maturity must be positive, got {t}")));
    }
    let omega = opts.omega_ell.unwrap_or(opts.family.omega_ell());
    let s = 4.0;
    let d = 0.9 * omega;
    let bt = 0.95 * s / (omega + d).sin();
    let l = (1.0 / opts.tol).ln();
    let zeta = 2.0 * PI * d / (s + l);
    let lam = ((s + l) / (bt * omega.sin())).max(1.0).acosh();
    let n = opts.n_ell.unwrap_or((lam / zeta).ceil() as usize);
    BromwichContour::new(s / t, bt / t, omega, TrapezoidGrid::new(zeta, 0, n, 0.0)?)
}

/// Role of a contour request in [`select_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Role {
    XiPlus,
    EtaMinus,
    /// One-dimensional integral; the argument is the sign of `x₁ - a₁`.
    OneDim(i8),
    Bromwich { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Contour {
    Sinh(SinhContour),
    Bromwich(BromwichContour),
}

/// Contour for `role` built with the default recipes.
pub fn select_params(profile: &RegularityProfile, role: Role, opts: &ContourOptions) -> Result<Contour> {
    let strip = profile.working_strip(2.0);
    match role {
        Role::XiPlus => Ok(Contour::Sinh(contour_pair(profile, strip, opts)?.0)),
        Role::EtaMinus => Ok(Contour::Sinh(contour_pair(profile, strip, opts)?.1)),
        Role::OneDim(s) => {
            let (plus, minus) = contour_pair(profile, strip, opts)?;
            Ok(Contour::Sinh(match s.signum() {
                1 => plus,
                -1 => minus,
                _ => flat_contour(profile, strip.1, opts)?,
            }))
        }
        Role::Bromwich { t } => Ok(Contour::Bromwich(bromwich_contour(t, opts)?)),
    }
}

/// Outcome of [`validate_deformation`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationReport {
    /// Offending `(q, node index, 1 + ψ/q)` triples.
    pub violations: Vec<(C64, usize, C64)>,
    /// Smallest relative distance of `1 + ψ/q` to `(-∞, 0]` seen.
    pub min_distance: f64,
    pub checked: usize,
}

impl DeformationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if let Some(&(q, j, z)) = self.violations.first() {
            return Err(Error::Deformation(format!(
                "1 + psi/q = {z} is within the cut floor at node {j} for q = {q} ({} violations)",
                self.violations.len()
            )));
        }
        Ok(())
    }
}

/// Relative cut-distance floor for `1 + ψ/q`.
pub const CUT_FLOOR: f64 = 1e-8;

fn cut_distance(z: C64) -> f64 {
    let d = if z.re >= 0.0 { z.norm() } else { z.im.abs() };
    d / z.norm().max(1.0)
}

/// Checks `1 + ψ(node)/q ∉ (-∞, 0]` for every node and every `q`.
///
/// For SL models and real positive `q` only the apex condition
/// `q + ψ(i·apex) > 0` is needed.
pub fn validate_deformation(model: &LevyModel, contour: &SinhContour, q_set: &[C64]) -> Result<DeformationReport> {
    if q_set.is_empty() {
        return Err(Error::InvalidParameter("empty q set".into()));
    }
    let mut report = DeformationReport { violations: Vec::new(), min_distance: f64::INFINITY, checked: 0 };
    let all_real = q_set.iter().all(|q| q.im == 0.0 && q.re > 0.0);
    if model.profile.is_sl && all_real && !model.profile.finite_variation_with_drift() {
        let apex = contour.apex();
        let psi = model.psi(C64::new(0.0, apex))?;
        for &q in q_set {
            let z = 1.0 + psi / q;
            report.checked += 1;
            report.min_distance = report.min_distance.min(cut_distance(z));
            if !(q.re + psi.re > 0.0) {
                report.violations.push((q, contour.grid.n_neg, z));
            }
        }
        return Ok(report);
    }
    let psi = model.psi_many(&contour.nodes)?;
    for &q in q_set {
        for (j, p) in psi.iter().enumerate() {
            let z = 1.0 + p / q;
            let d = cut_distance(z);
            report.checked += 1;
            report.min_distance = report.min_distance.min(d);
            if d < CUT_FLOOR || !(z.re.is_finite() && z.im.is_finite()) {
                report.violations.push((q, j, z));
            }
        }
    }
    Ok(report)
}

/// Smallest node-to-node distance between two contours.
pub fn min_separation(a: &SinhContour, b: &SinhContour) -> f64 {
    let mut m = f64::INFINITY;
    for x in &a.nodes {
        for y in &b.nodes {
            m = m.min((x - y).norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LevyModel;

    fn table_model(nu: f64) -> LevyModel {
        LevyModel::kobol_calibrated(nu, 1.0, -2.0, 0.1, 0.0).unwrap()
    }

    #[test]
    fn angles_follow_order() {
        let m = table_model(1.2);
        let (wm, wp) = wing_angles(&m.profile, Family::RealQ).unwrap();
        assert!((wp - PI / 4.0 / 1.2).abs() < 1e-15 && (wm + wp).abs() < 1e-15);
        let m = table_model(0.2);
        let (_, wp) = wing_angles(&m.profile, Family::RealQ).unwrap();
        assert!((wp - PI / 4.0).abs() < 1e-15);
        let (_, wp) = wing_angles(&m.profile, Family::I).unwrap();
        assert!((wp - PI / 2.0 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn signed_sl_angles() {
        let mut p = table_model(0.5).profile;
        p.is_sl = false;
        let (wm, wp) = wing_angles(&p, Family::RealQ).unwrap();
        assert!((wp - PI / 8.0).abs() < 1e-15 && (wm + PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn half_cone_is_unsupported() {
        let mut p = table_model(0.5).profile;
        p.positive_cone = (0.0, 1.0);
        assert!(matches!(wing_angles(&p, Family::RealQ), Err(Error::Unsupported(_))));
    }

    #[test]
    fn clearing_pair_brackets_band() {
        let m = table_model(1.2);
        let opts = ContourOptions::new(1e-12, Family::I);
        let (p, n) = contour_pair_clearing(&m.profile, (-2.0, 1.0), (-1.0, 0.0), &opts).unwrap();
        assert!((p.apex() - 0.5).abs() < 1e-14 && (n.apex() + 1.5).abs() < 1e-14);
        assert!(contour_pair_clearing(&m.profile, (-2.0, 1.0), (0.0, -1.0), &opts).is_err());
        assert!(contour_pair_clearing(&m.profile, (-2.0, 1.0), (-2.5, 0.0), &opts).is_err());
    }

    #[test]
    fn pair_is_ordered_and_separated() {
        let m = table_model(0.2);
        let opts = ContourOptions::new(1e-12, Family::RealQ);
        let (p, n) = contour_pair(&m.profile, m.profile.strip, &opts).unwrap();
        assert!((p.apex() - 0.5).abs() < 1e-14 && (n.apex() + 1.0).abs() < 1e-14);
        assert!(p.apex() > 0.0 && n.apex() < 0.0);
        assert!(min_separation(&p, &n) > 0.5);
        for x in p.nodes.iter().chain(n.nodes.iter()) {
            assert!(m.psi(*x).is_ok());
        }
        // wings move away from the real axis
        assert!(p.nodes.iter().all(|x| x.im >= p.apex() - 1e-12));
        assert!(n.nodes.iter().all(|x| x.im <= n.apex() + 1e-12));
    }

    #[test]
    fn sl_real_q_apex_check() {
        let m = table_model(1.2);
        let opts = ContourOptions::new(1e-12, Family::RealQ);
        let (p, n) = contour_pair(&m.profile, m.profile.strip, &opts).unwrap();
        let q = [C64::new(2.0f64.ln() / 0.25, 0.0)];
        assert!(validate_deformation(&m, &p, &q).unwrap().is_ok());
        assert!(validate_deformation(&m, &n, &q).unwrap().is_ok());
    }

    #[test]
    fn zero_exponent_always_passes() {
        let m = LevyModel::brownian(0.0, 0.0).unwrap();
        let opts = ContourOptions::new(1e-10, Family::I);
        let (p, _) = contour_pair(&m.profile, (-1.0, 1.0), &opts).unwrap();
        let q = [C64::new(0.3, 2.0), C64::new(1.0, 0.0)];
        assert!(validate_deformation(&m, &p, &q).unwrap().is_ok());
    }

    #[test]
    fn bromwich_q_set_passes_for_both_families() {
        let m = table_model(1.2);
        for fam in [Family::I, Family::II] {
            let opts = ContourOptions::new(1e-15, fam);
            let (p, n) = contour_pair(&m.profile, m.profile.strip, &opts).unwrap();
            let br = bromwich_contour(0.25, &opts).unwrap();
            assert!(validate_deformation(&m, &p, &br.nodes).unwrap().is_ok());
            assert!(validate_deformation(&m, &n, &br.nodes).unwrap().is_ok());
        }
    }

    #[test]
    fn bromwich_stays_right() {
        for fam in [Family::I, Family::II] {
            let c = bromwich_contour(1.0, &ContourOptions::new(1e-15, fam)).unwrap();
            assert!(c.apex() > 0.0);
            assert!(c.nodes.iter().all(|q| q.re <= c.apex() + 1e-12));
            assert_eq!(c.grid.n_neg, 0);
        }
    }

    #[test]
    fn select_params_roles() {
        let m = table_model(0.2);
        let opts = ContourOptions::new(1e-12, Family::RealQ);
        match select_params(&m.profile, Role::OneDim(0), &opts).unwrap() {
            Contour::Sinh(c) => assert_eq!(c.omega, 0.0),
            _ => panic!(),
        }
        match select_params(&m.profile, Role::OneDim(-1), &opts).unwrap() {
            Contour::Sinh(c) => assert!(c.omega < 0.0 && c.apex() < 0.0),
            _ => panic!(),
        }
        assert!(matches!(select_params(&m.profile, Role::Bromwich { t: 1.0 }, &opts).unwrap(), Contour::Bromwich(_)));
    }

    #[test]
    fn decay_extent_is_bounded() {
        let m = table_model(0.2);
        let opts = ContourOptions::new(1e-15, Family::RealQ);
        let (p, _) = contour_pair(&m.profile, m.profile.strip, &opts).unwrap();
        let e = p.decay_extent(0.025, 40.0);
        assert!(e > 5.0 && e < p.grid.extent());
        assert_eq!(p.decay_extent(0.0, 40.0), p.grid.extent());
        let r = p.index_range(e);
        assert!(r.start > 0 && r.end < p.len());
    }
}
