//! Constrained assortment optimization under the cross-nested logit (CNL)
//! choice model.
//!
//! The pipeline runs in four stages:
//!
//! * [`choice`] evaluates exact CNL choice probabilities and revenues.
//! * [`constraints`] holds the feasible set `A x ≤ b` and nest-weight bounds.
//! * [`discretize`] builds piecewise-linear inner approximations of
//!   `W^(σ-1)` and `W^σ` with a certified relative error.
//! * [`reformulate`] turns the approximation into a linear-fractional
//!   program and its mixed-integer linear counterparts.
//!
//! [`solver`] solves the exact and approximate problems at desk scale and
//! [`lab`] generates random instances and runs benchmarks.
//!
//! ```
//! use cnl_assort::choice::{Assortment, Instance};
//!
//! let inst = Instance::new(
//!     vec![6.0, 6.0, 9.0],
//!     vec![1.0, 1.0, 4.0],
//!     vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.25, 0.75]],
//!     vec![0.5, 0.5],
//!     vec![1.0, 0.0],
//! )
//! .unwrap();
//! let f = inst.expected_revenue(&Assortment::from_bits(&[1, 0, 1])).unwrap();
//! assert!((f - 7.0).abs() < 1e-9);
//! ```

pub mod choice;
pub mod constraints;
pub mod discretize;
pub mod error;
pub mod io;
pub mod lab;
pub mod reformulate;
pub mod solver;

pub use choice::{Assortment, Instance, MixtureInstance, PricingInstance};
pub use constraints::{ConstraintSet, NestBounds};
pub use discretize::{KnBounds, PiecewiseApprox};
pub use reformulate::{LfpCoefficients, MilpModel};
pub use solver::SolveReport;
pub use error::{CnlError, Result};


