//! Shared fixtures for the criterion benches.

use levymax::golden::GoldenSet;
use levymax::{Payoff, PricingTask, Result};

/// Joint-cpdf task over every reference cell of `set` at maturity `t`.
pub fn reference_task(set: &GoldenSet, t: f64, tol: f64) -> Result<PricingTask> {
    let payoffs = set.cells_at(t).iter().map(|c| Payoff::Cpdf { x1: 0.0, x2: 0.0, a1: c.a1, a2: c.a2 }).collect();
    Ok(PricingTask::new(set.model()?, t, payoffs, tol))
}
