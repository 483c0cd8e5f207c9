//! Numerical core for the weighted parabolic p-Laplacian
//!
//! ```text
//! u_t - div(σ(x)|∇u|^{p-2}∇u) + β(x)u + f(u) = g(x)
//! ```
//!
//! on a truncated cube with homogeneous Dirichlet data, together with the
//! diagnostics used to study its long-time behaviour: weighted energy norms,
//! energy ledgers, semigroup contraction, absorbing balls and ensemble
//! diameter shrinkage.
//!
//! The crate is `no_std` and only needs `alloc`; transcendental functions go
//! through `libm` (via `num-traits`). File formats, configuration and the
//! command-line tool live in the `plap` companion crate.

#![no_std]
// when std is in the build graph (dev-dependencies) its inherent float methods shadow `Float`
#![allow(unused_imports)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod embedding;
mod error;
pub mod exec;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod linsolve;
pub mod model;
pub mod nonlinearity;
pub mod operator;
pub mod profile;
pub mod quadrature;

pub use error::{Error, Result};
pub use grid::{GradientStencil, Grid, State};
pub use integrator::{EnergyLedger, LedgerRow, LedgerSink, Scheme, StepConfig};
pub use model::{ProblemSpec, Strictness, ValidationReport};
pub use nonlinearity::NonlinearityModel;
pub use operator::DiscreteOperator;
pub use profile::CoefficientProfile;
