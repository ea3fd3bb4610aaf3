//! Laplace-domain value functions and their inversion in time.
//!
//! All payoffs of one [`LaplacePricer`] share a pair of factor contours
//! `L⁺` (wings up) and `L⁻` (wings down) and a single [`WhfEngine`], so a grid
//! of points costs one factor table per `q`.

mod barrier;
mod cpdf;
mod exchange;
mod general;

pub use barrier::GTransform;
pub use general::{CpdfTransform, EuropeanDigital, PayoffTransform, ZeroPayoff};

use crate::contours::{
    anchored_contour_at, bromwich_contour, contour_pair, flat_contour, validate_deformation, ContourOptions, Family,
    SinhContour,
};
use crate::error::{Error, Result};
use crate::laplace::{invert_gwr_batch, invert_sinh_bromwich_batch, shift_for_floor, BromwichScheme, GwrScheme};
use crate::models::LevyModel;
use crate::whf::{WhfEngine, WhfTable};
use num_complex::Complex64 as C64;
use std::ops::Range;
use std::sync::Arc;
use std::time::{Duration, Instant};

/// `Ṽ(q)` with its component integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceValue {
    pub q: C64,
    pub value: C64,
    pub parts: [C64; 3],
}

impl LaplaceValue {
    fn zero(q: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self { q, value: z, parts: [z; 3] }
    }
}

/// Terminal payoff `G` of a single up-and-out barrier contract.
#[derive(Debug, Clone)]
pub enum BarrierPayoff {
    /// `G ≡ 1`: the no-touch contract.
    Constant,
    /// `G = 1_{(-∞, a]}`.
    Digital { a: f64 },
    Transform(Arc<dyn GTransform>),
}

/// Payoff together with the initial state `(x₁, x₂)`, `x₁ ≤ x₂`.
#[derive(Debug, Clone)]
pub enum Payoff {
    /// `P[x₁ + X_T ≤ a₁, max(x₂, x₁ + X̄_T) ≤ a₂]`.
    Cpdf { x1: f64, x2: f64, a1: f64, a2: f64 },
    /// `P[max(x₂, x₁ + X̄_T) ≤ a₂]`.
    NoTouch { x1: f64, x2: f64, a2: f64 },
    /// `E[G(x + X_T); x + X̄_T < h]`.
    Barrier { x: f64, h: f64, payoff: BarrierPayoff },
    /// `E[(e^{β(x₁+X_T)} - e^{max(x₂, x₁+X̄_T)})₊]`.
    Exchange { x1: f64, x2: f64, beta: f64 },
    General { x1: f64, x2: f64, f: Arc<dyn PayoffTransform> },
}

impl Payoff {
    fn state(&self) -> (f64, f64) {
        match *self {
            Payoff::Cpdf { x1, x2, .. }
            | Payoff::NoTouch { x1, x2, .. }
            | Payoff::Exchange { x1, x2, .. }
            | Payoff::General { x1, x2, .. } => (x1, x2),
            Payoff::Barrier { x, .. } => (x, x),
        }
    }

    fn validate(&self) -> Result<()> {
        let (x1, x2) = self.state();
        if !(x1.is_finite() && x2.is_finite()) {
            return Err(Error::InvalidParameter("state must be finite".into()));
        }
        if x1 > x2 {
            return Err(Error::InvalidParameter(format!("state needs x1 <= x2, got ({x1}, {x2})")));
        }
        match self {
            Payoff::Cpdf { a1, a2, .. } => {
                if !(a1.is_finite() && a2.is_finite()) {
                    return Err(Error::InvalidParameter("cpdf levels must be finite".into()));
                }
            }
            Payoff::NoTouch { a2, .. } if !a2.is_finite() => {
                return Err(Error::InvalidParameter("barrier level must be finite".into()));
            }
            Payoff::Barrier { x, h, .. } if x >= h => {
                return Err(Error::Domain(format!("barrier pricing needs x < h, got x = {x}, h = {h}")));
            }
            Payoff::Exchange { beta, .. } if !(*beta > 1.0 && beta.is_finite()) => {
                return Err(Error::InvalidParameter(format!("exchange power must exceed 1, got {beta}")));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Inversion backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplaceScheme {
    Gwr { m: usize, shift_a: f64 },
    SinhBromwich { family: Family, shift_a: f64 },
}

impl LaplaceScheme {
    pub fn gwr() -> Self {
        LaplaceScheme::Gwr { m: crate::laplace::DEFAULT_GWR_M, shift_a: 0.0 }
    }

    pub fn sinh(family: Family) -> Self {
        LaplaceScheme::SinhBromwich { family, shift_a: 0.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LaplaceScheme::Gwr { .. } => "gwr",
            LaplaceScheme::SinhBromwich { .. } => "sinh",
        }
    }
}

/// Optional overrides of the contour recipes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub omega_plus: Option<f64>,
    pub omega_minus: Option<f64>,
    pub omega_ell: Option<f64>,
    pub n_xi: Option<usize>,
    pub n_ell: Option<usize>,
    /// Evaluate `a₁ = a₂` cpdf points with the double integral instead of the
    /// no-touch formula.
    pub force_double: bool,
}

#[derive(Debug, Clone)]
pub struct PricingTask {
    pub model: LevyModel,
    pub t: f64,
    pub payoffs: Vec<Payoff>,
    /// Target absolute accuracy of the time-domain values.
    pub tol: f64,
    pub overrides: Overrides,
}

impl PricingTask {
    pub fn new(model: LevyModel, t: f64, payoffs: Vec<Payoff>, tol: f64) -> Self {
        Self { model, t, payoffs, tol, overrides: Overrides::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub setup: Duration,
    pub transform: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridSizes {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_q: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub values: Vec<f64>,
    pub method: &'static str,
    pub est_error: f64,
    pub timings: Timings,
    pub sizes: GridSizes,
    pub shift_a: f64,
}

/// Internal tolerance for contour sizing given the output tolerance.
pub fn internal_tol(tol: f64) -> f64 {
    (tol * 1e-3).clamp(1e-15, 1e-8)
}

/// Factor contours, the flat contour for `x₁ = a₁`, and cached `ψ` values.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub opts: ContourOptions,
    pub strip: (f64, f64),
    pub plus: SinhContour,
    pub minus: SinhContour,
    pub flat: Option<SinhContour>,
    pub psi_plus: Vec<C64>,
    pub psi_minus: Vec<C64>,
    pub psi_flat: Vec<C64>,
    /// Log-budget `ln(1/tol) + 5` for trimming exponentially damped sums.
    pub budget: f64,
}

impl Geometry {
    /// `apex_frac` places the apexes at that fraction of the strip ends.
    pub fn new(model: &LevyModel, opts: &ContourOptions, width: f64, apex_frac: f64, need_flat: bool) -> Result<Self> {
        let strip = model.profile.working_strip(width);
        let s = 2.0 * apex_frac;
        let (plus, minus) = contour_pair(&model.profile, (s * strip.0, s * strip.1), opts)?;
        let flat = if need_flat { Some(flat_contour(&model.profile, s * strip.1, opts)?) } else { None };
        let psi_plus = model.psi_many(&plus.nodes)?;
        let psi_minus = model.psi_many(&minus.nodes)?;
        let psi_flat = match &flat {
            Some(f) => model.psi_many(&f.nodes)?,
            None => Vec::new(),
        };
        Ok(Self {
            opts: *opts,
            strip,
            plus,
            minus,
            flat,
            psi_plus,
            psi_minus,
            psi_flat,
            budget: (1.0 / opts.tol).ln() + 5.0,
        })
    }

    /// Node range of `c` outside which `exp(-κ·(Im χ - apex))` is negligible.
    pub fn trimmed(&self, c: &SinhContour, kappa: f64) -> Range<usize> {
        c.index_range(c.decay_extent(kappa, self.budget))
    }

    /// Wings-down (`sign < 0`), wings-up (`> 0`) or flat contour with apex inside
    /// `(lo, hi)`. Without `rate` the grid is sized for integrands decaying like
    /// `1/(ξ(q+ψ))` times an exponential; `rate` sets an envelope `e^{-rate·y}`.
    pub fn one_dim(&self, model: &LevyModel, lo: f64, hi: f64, apex: f64, sign: i8, rate: Option<f64>) -> Result<SinhContour> {
        let (wm, wp) = crate::contours::wing_angles(&model.profile, self.opts.family)?;
        let env = move |y: f64| match rate {
            Some(r) => (-r * y).exp(),
            None => (1.0 + y) * (-y).exp(),
        };
        match sign.signum() {
            1 => anchored_contour_at(lo, hi, apex, wp, wp.abs(), &self.opts, &env),
            -1 => anchored_contour_at(lo, hi, apex, wm, wm.abs(), &self.opts, &env),
            _ => {
                let f = flat_contour(&model.profile, hi, &self.opts)?;
                SinhContour::with_apex(apex.min(f.apex()), f.b, 0.0, f.grid)
            }
        }
    }
}

/// Factor targets registered by the payoff plans.
#[derive(Debug, Default)]
pub(crate) struct Targets {
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
    /// `L⁺` nodes registered first, as a contiguous block at offset 0.
    pub std_plus: Range<usize>,
    pub std_minus: Range<usize>,
}

impl Targets {
    fn new(geo: &Geometry, std_plus: Range<usize>, std_minus: Range<usize>) -> Self {
        Self {
            plus: geo.plus.nodes[std_plus.clone()].to_vec(),
            minus: geo.minus.nodes[std_minus.clone()].to_vec(),
            std_plus,
            std_minus,
        }
    }

    pub fn push_plus(&mut self, pts: &[C64]) -> usize {
        let o = self.plus.len();
        self.plus.extend_from_slice(pts);
        o
    }

    pub fn push_minus(&mut self, pts: &[C64]) -> usize {
        let o = self.minus.len();
        self.minus.extend_from_slice(pts);
        o
    }
}

/// Per-`q` data shared by all plans.
pub(crate) struct QCtx<'a> {
    pub q: C64,
    pub tab: WhfTable,
    pub inv_plus: Vec<C64>,
    pub inv_minus: Vec<C64>,
    pub inv_flat: Vec<C64>,
    pub geo: &'a Geometry,
    pub engine: &'a WhfEngine,
    pub targets: &'a Targets,
}

impl QCtx<'_> {
    /// `φ⁻` at `L⁺` node `j` (must lie in the standard block).
    pub fn phi_minus_on_plus(&self, j: usize) -> C64 {
        self.tab.minus_on_plus[j - self.targets.std_plus.start]
    }

    /// `φ⁺` at `L⁻` node `k` (must lie in the standard block).
    pub fn phi_plus_on_minus(&self, k: usize) -> C64 {
        self.tab.plus_on_minus[k - self.targets.std_minus.start]
    }
}

pub(crate) fn inverse_symbol(q: C64, psi: &[C64]) -> Result<Vec<C64>> {
    psi.iter()
        .map(|p| {
            let d = q + p;
            if d.norm() == 0.0 {
                Err(Error::Deformation(format!("q + psi vanishes at q = {q}")))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

pub(crate) trait Plan: Send + Sync {
    /// `L⁺`/`L⁻` node ranges at which the plan reads factors.
    fn std_ranges(&self) -> (Range<usize>, Range<usize>);
    fn register(&mut self, targets: &mut Targets);
    fn contours(&self) -> Vec<&SinhContour>;
    fn eval(&self, ctx: &QCtx, out: &mut [LaplaceValue]) -> Result<()>;
}

fn union(a: Range<usize>, b: Range<usize>) -> Range<usize> {
    if a.is_empty() {
        return b;
    }
    if b.is_empty() {
        return a;
    }
    a.start.min(b.start)..a.end.max(b.end)
}

/// Laplace-domain evaluator for a list of payoffs.
pub struct LaplacePricer {
    pub model: LevyModel,
    pub geometry: Geometry,
    engine: WhfEngine,
    targets: Targets,
    plans: Vec<Box<dyn Plan>>,
    n_out: usize,
}

impl std::fmt::Debug for LaplacePricer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaplacePricer")
            .field("n_plus", &self.geometry.plus.len())
            .field("n_minus", &self.geometry.minus.len())
            .field("payoffs", &self.n_out)
            .finish()
    }
}

impl LaplacePricer {
    pub fn new(model: &LevyModel, payoffs: &[Payoff], opts: &ContourOptions, force_double: bool) -> Result<Self> {
        Self::with_apex_fraction(model, payoffs, opts, force_double, 0.5)
    }

    pub fn with_apex_fraction(
        model: &LevyModel,
        payoffs: &[Payoff],
        opts: &ContourOptions,
        force_double: bool,
        apex_frac: f64,
    ) -> Result<Self> {
        for p in payoffs {
            p.validate()?;
        }
        let mut width: f64 = 2.0;
        for p in payoffs {
            if let Payoff::Exchange { beta, .. } = p {
                width = width.max(2.0 * beta + 1.0);
            }
        }
        let need_flat = payoffs.iter().any(|p| match *p {
            Payoff::Cpdf { x1, a1, a2, .. } => x1 == a1 && (a1 < a2 || force_double),
            Payoff::Barrier { x, payoff: BarrierPayoff::Digital { a }, h } => x == a && a < h,
            _ => false,
        });
        let geo = Geometry::new(model, opts, width, apex_frac, need_flat)?;

        let mut plans: Vec<Box<dyn Plan>> = Vec::new();
        let mut batch = cpdf::CpdfBatch::new(&geo);
        for (i, p) in payoffs.iter().enumerate() {
            match p {
                Payoff::Cpdf { x1, x2, a1, a2 } => batch.add_cpdf(&geo, i, *x1, *x2, *a1, *a2, force_double)?,
                Payoff::NoTouch { x1, x2, a2 } => batch.add_no_touch(&geo, i, *x1, *x2, *a2)?,
                Payoff::Barrier { x, h, payoff } => match payoff {
                    BarrierPayoff::Constant => batch.add_no_touch(&geo, i, *x, *x, *h)?,
                    BarrierPayoff::Digital { a } => batch.add_cpdf(&geo, i, *x, *x, *a, *h, force_double)?,
                    BarrierPayoff::Transform(g) => {
                        plans.push(Box::new(barrier::BarrierPlan::new(model, &geo, i, *x, *h, g.clone())?))
                    }
                },
                Payoff::Exchange { x1, x2, beta } => {
                    plans.push(Box::new(exchange::ExchangePlan::new(model, &geo, i, *x1, *x2, *beta)?))
                }
                Payoff::General { x1, x2, f } => {
                    plans.push(Box::new(general::GeneralPlan::new(model, &geo, i, *x1, *x2, f.clone())?))
                }
            }
        }
        if !batch.is_empty() {
            plans.insert(0, Box::new(batch));
        }
        let (mut sp, mut sm) = (0..0, 0..0);
        for p in &plans {
            let (a, b) = p.std_ranges();
            sp = union(sp, a);
            sm = union(sm, b);
        }
        let mut targets = Targets::new(&geo, sp, sm);
        for p in plans.iter_mut() {
            p.register(&mut targets);
        }
        let engine = WhfEngine::new(
            model,
            geo.plus.clone(),
            geo.minus.clone(),
            targets.plus.clone(),
            targets.minus.clone(),
        )?;
        Ok(Self { model: *model, geometry: geo, engine, targets, plans, n_out: payoffs.len() })
    }

    /// Every contour the pricer evaluates `ψ` on.
    pub fn contours(&self) -> Vec<&SinhContour> {
        let mut v = vec![&self.geometry.plus, &self.geometry.minus];
        if let Some(f) = &self.geometry.flat {
            v.push(f);
        }
        for p in &self.plans {
            v.extend(p.contours());
        }
        v
    }

    /// Checks every contour against `q_set`.
    pub fn validate(&self, q_set: &[C64]) -> Result<()> {
        for c in self.contours() {
            validate_deformation(&self.model, c, q_set)?.into_result()?;
        }
        Ok(())
    }

    /// Smallest real `q` for which `q + ψ(i·apex) > 0` on every contour.
    pub fn q_floor(&self) -> Result<f64> {
        let mut floor = 0.0f64;
        for c in self.contours() {
            let p = self.model.psi(C64::new(0.0, c.apex()))?;
            floor = floor.max(-p.re);
        }
        Ok(floor)
    }

    pub fn eval(&self, q: C64) -> Result<Vec<LaplaceValue>> {
        let geo = &self.geometry;
        let ctx = QCtx {
            q,
            tab: self.engine.table(q)?,
            inv_plus: inverse_symbol(q, &geo.psi_plus)?,
            inv_minus: inverse_symbol(q, &geo.psi_minus)?,
            inv_flat: inverse_symbol(q, &geo.psi_flat)?,
            geo,
            engine: &self.engine,
            targets: &self.targets,
        };
        let mut out = vec![LaplaceValue::zero(q); self.n_out];
        for p in &self.plans {
            p.eval(&ctx, &mut out)?;
        }
        for v in &out {
            if !(v.value.re.is_finite() && v.value.im.is_finite()) {
                return Err(Error::Numerical(format!("non-finite transform value at q = {q}")));
            }
        }
        Ok(out)
    }
}

const APEX_FRACTIONS: [f64; 3] = [0.5, 0.25, 0.1];

/// Builds contours, evaluates the transforms on the `q` grid and inverts.
pub fn price(task: &PricingTask, scheme: &LaplaceScheme) -> Result<PricingResult> {
    let start = Instant::now();
    if !(task.t > 0.0 && task.t.is_finite()) {
        return Err(Error::InvalidParameter(format!("maturity must be positive, got {}", task.t)));
    }
    if !(task.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", task.tol)));
    }
    if task.payoffs.is_empty() {
        return Err(Error::InvalidParameter("no payoffs to price".into()));
    }
    let fv_drift = task.model.profile.finite_variation_with_drift();
    let family = match scheme {
        LaplaceScheme::Gwr { .. } => Family::RealQ,
        LaplaceScheme::SinhBromwich { family, .. } => {
            if fv_drift {
                return Err(Error::Unsupported(
                    "finite-variation models with drift need GWR inversion".into(),
                ));
            }
            if *family == Family::RealQ {
                return Err(Error::InvalidParameter("Bromwich inversion needs deformation family I or II".into()));
            }
            *family
        }
    };
    let mut opts = ContourOptions::new(internal_tol(task.tol), family);
    let ov = &task.overrides;
    opts.omega_plus = ov.omega_plus;
    opts.omega_minus = ov.omega_minus;
    opts.omega_ell = ov.omega_ell;
    opts.n_xi = ov.n_xi;
    opts.n_ell = ov.n_ell;

    let mut last_err = None;
    for &frac in &APEX_FRACTIONS {
        let pricer = match LaplacePricer::with_apex_fraction(&task.model, &task.payoffs, &opts, ov.force_double, frac) {
            Ok(p) => p,
            Err(e @ Error::Deformation(_)) | Err(e @ Error::SingularKernel(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let setup = start.elapsed();
        let sizes = |n_q| GridSizes { n_plus: pricer.geometry.plus.len(), n_minus: pricer.geometry.minus.len(), n_q };
        let outcome = match scheme {
            LaplaceScheme::Gwr { m, shift_a } => {
                let floor = pricer.q_floor()?;
                let a = shift_a.max(shift_for_floor(floor, task.t));
                let gs = GwrScheme::with_m(task.t, *m, a)?;
                let qs: Vec<C64> = gs.sample_points().into_iter().map(|q| C64::new(q, 0.0)).collect();
                if let Err(e) = pricer.validate(&qs) {
                    last_err = Some(e);
                    continue;
                }
                let t0 = Instant::now();
                let inv = invert_gwr_batch(&gs, |q| {
                    Ok(pricer.eval(C64::new(q, 0.0))?.into_iter().map(|v| v.value.re).collect())
                });
                inv.map(|inv| PricingResult {
                    values: inv.values,
                    method: "gwr",
                    est_error: 10f64.powf(-0.9 * *m as f64).max(task.tol),
                    timings: Timings { setup, transform: t0.elapsed(), total: Duration::ZERO },
                    sizes: sizes(qs.len()),
                    shift_a: a,
                })
            }
            LaplaceScheme::SinhBromwich { shift_a, .. } => {
                let bs = BromwichScheme::new(bromwich_contour(task.t, &opts)?, task.t)?.with_shift(*shift_a)?;
                let qs = bs.sample_points();
                if let Err(e) = pricer.validate(&qs) {
                    last_err = Some(e);
                    continue;
                }
                let t0 = Instant::now();
                let v = invert_sinh_bromwich_batch(&bs, |q| Ok(pricer.eval(q)?.into_iter().map(|v| v.value).collect()));
                v.map(|values| PricingResult {
                    values,
                    method: "sinh",
                    est_error: task.tol,
                    timings: Timings { setup, transform: t0.elapsed(), total: Duration::ZERO },
                    sizes: sizes(qs.len()),
                    shift_a: *shift_a,
                })
            }
        };
        match outcome {
            Ok(mut r) => {
                r.timings.total = start.elapsed();
                return Ok(r);
            }
            Err(e @ Error::Deformation(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Deformation("no admissible contour found".into())))
}

/// Default contour options for evaluating transforms at real `q`.
pub fn real_q_options(tol: f64) -> ContourOptions {
    ContourOptions::new(internal_tol(tol), Family::RealQ)
}

fn single(model: &LevyModel, q: C64, payoff: Payoff, tol: f64) -> Result<LaplaceValue> {
    let family = if q.im == 0.0 { Family::RealQ } else { Family::II };
    let opts = ContourOptions::new(internal_tol(tol), family);
    Ok(LaplacePricer::new(model, &[payoff], &opts, false)?.eval(q)?[0])
}

/// `Ṽ(q)` for the joint cpdf at one point.
pub fn cpdf_laplace(model: &LevyModel, q: C64, x1: f64, x2: f64, a1: f64, a2: f64, tol: f64) -> Result<LaplaceValue> {
    single(model, q, Payoff::Cpdf { x1, x2, a1, a2 }, tol)
}

pub fn no_touch_laplace(model: &LevyModel, q: C64, x1: f64, x2: f64, a2: f64, tol: f64) -> Result<LaplaceValue> {
    single(model, q, Payoff::NoTouch { x1, x2, a2 }, tol)
}

pub fn barrier_laplace(model: &LevyModel, q: C64, x: f64, h: f64, payoff: BarrierPayoff, tol: f64) -> Result<LaplaceValue> {
    single(model, q, Payoff::Barrier { x, h, payoff }, tol)
}

pub fn exchange_laplace(model: &LevyModel, q: C64, x1: f64, x2: f64, beta: f64, tol: f64) -> Result<LaplaceValue> {
    single(model, q, Payoff::Exchange { x1, x2, beta }, tol)
}

pub fn laplace_value_general(
    model: &LevyModel,
    q: C64,
    x1: f64,
    x2: f64,
    f: Arc<dyn PayoffTransform>,
    tol: f64,
) -> Result<LaplaceValue> {
    single(model, q, Payoff::General { x1, x2, f }, tol)
}
