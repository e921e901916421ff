//! Numerical toolkit for sequential Riemann–Liouville equations
//! D^α(D^α f) + P f = V, 1/2 < α < 1: weighted-space product integration,
//! a weakly singular Volterra solver, zero localization, the Fite-type
//! length bound, and a scenario harness that tests the bound.
//!
//! The numerical core is generic over [`Real`]; the aliases below fix it to
//! `f64`, which is what the harness and the command-line tool use.

pub mod bounds;
pub mod error;
pub mod rlops;
pub mod scalar;
pub mod sfde;
pub mod specfn;
pub mod verify;
pub mod weighted;
pub mod zeros;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Order64 = weighted::Order<f64>;
pub type Grid64 = weighted::GradedGrid<f64>;
pub type WeightedFn64 = weighted::WeightedFn<f64>;
pub type ProductRule64 = rlops::ProductRule<f64>;
pub type RuleCache64 = rlops::RuleCache<f64>;
pub type CoefficientSet64 = sfde::CoefficientSet<f64>;
pub type SolveReport64 = sfde::SolveReport<f64>;
pub type SolveOptions64 = sfde::SolveOptions<f64>;
pub type ZeroSet64 = zeros::ZeroSet<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;
pub type ConstantChain64 = bounds::ConstantChain<f64>;
