//! Heat flow on `[0, 1]` with mass-reservoir boundary conditions.
//!
//! Three independent routes to the same solution:
//!
//! * [`volterra`] and [`field`]: image-series heat kernel plus boundary
//!   integral equations for the wall traces;
//! * [`stochastic`]: Monte Carlo over sticky Brownian motion and the sticky
//!   random walk;
//! * [`fd_oracle`]: a conservative Crank–Nicolson discretization.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod initial_data;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod theta_kernel;
pub mod fd_oracle;
pub mod field;
pub mod stochastic;
pub mod volterra;

pub use error::{Error, Result};
pub use initial_data::{InitialData, Profile};
pub use theta_kernel::{Side, ThetaEvalConfig};
pub use field::FieldSolution;
pub use stochastic::{MCEstimate, McMethod, PathRecord};
pub use volterra::{BoundaryTraces, Regime, TimeGrid, VolterraConfig};
