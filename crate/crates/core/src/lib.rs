//! Joint distribution of a Lévy process and its running maximum, and options
//! on both, via Wiener-Hopf factors on sinh-deformed contours and Laplace
//! inversion in time.
//!
//! ```
//! use levymax::{price, LaplaceScheme, LevyModel, Payoff, PricingTask};
//!
//! let model = LevyModel::kobol_calibrated(0.2, 1.0, -2.0, 0.1, 0.0).unwrap();
//! let payoff = Payoff::Cpdf { x1: 0.0, x2: 0.0, a1: -0.075, a2: 0.025 };
//! let task = PricingTask::new(model, 0.25, vec![payoff], 1e-10);
//! let r = price(&task, &LaplaceScheme::gwr()).unwrap();
//! assert!((r.values[0] - 0.0528532412024316).abs() < 1e-5);
//! ```

pub mod contours;
pub mod error;
pub mod golden;
pub mod laplace;
pub mod models;
pub mod oracle;
pub mod pricers;
pub mod quad;
pub mod whf;

pub use contours::{ContourOptions, Family, SinhContour};
pub use error::{Error, Result};
pub use golden::{GoldenCell, GoldenSet};
pub use models::{LevyModel, ModelKind, RegularityProfile};
pub use num_complex::Complex64;
pub use oracle::OracleReport;
pub use pricers::{
    barrier_laplace, cpdf_laplace, exchange_laplace, laplace_value_general, no_touch_laplace, price, BarrierPayoff,
    CpdfTransform, EuropeanDigital, GTransform, LaplaceScheme, LaplaceValue, Overrides, PayoffTransform, Payoff,
    PricingResult, PricingTask, ZeroPayoff,
};
pub use whf::{WhfEngine, WhfTable};
