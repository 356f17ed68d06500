#![forbid(unsafe_code)]

//! Scheduling analysis for distributed deadlock detection.
//!
//! Running a distributed deadlock detector too often wastes messages when no
//! deadlock exists; running it too rarely lets deadlocks grow and drives up
//! resolution cost. This crate models that tradeoff and finds the detection
//! interval that minimizes the long-run message cost per unit time:
//!
//! - [`cost_model`] — deadlock-size and resolution-cost families, the
//!   analytic cost rate `C(T)`, its derivative sign carrier `φ(T)`, and the
//!   cost `C_H` of uncoordinated (randomly scheduled) detection.
//! - [`optimizer`] — the unique optimal interval as the root of `φ`, sweep
//!   tables, and the `(λn)^{−1/3}` scaling law with an empirical log-log fit.
//! - [`simulator`] — an independent Monte Carlo renewal-reward simulator
//!   with deterministic parallel substreams, used to cross-validate the
//!   analytic results.
//!
//! ```
//! use detsched::{CostModel, optimizer};
//!
//! let model = CostModel::example(100, 1.0).unwrap();
//! let solved = optimizer::solve_optimal_interval(
//!     &model,
//!     optimizer::DEFAULT_T_MAX,
//!     optimizer::DEFAULT_REL_TOL,
//! )
//! .unwrap();
//! let t_star = solved.t_star().unwrap();
//! assert!((t_star - 0.1485547).abs() < 1e-6);
//! ```

pub mod cost_model;
pub mod error;
pub mod numeric;
pub mod optimizer;
pub mod simulator;

pub use cost_model::{
    ComplexityPreset, CostModel, DeadlockSizeModel, IntervalDistribution, ResolutionCostModel,
};
pub use error::{Error, Result};
pub use optimizer::{OptimizeResult, SlopeFit};
pub use simulator::{CycleOutcome, SchedulePolicy, SimEstimate};
