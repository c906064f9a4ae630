//! Numerical and exact verification of the shifted GL(3) Estermann function
//! and the Voronoi summation formula for the shifted triple divisor function
//! twisted by additive characters.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`] holds the exact integer kernels (factorization, shifted divisor
//!   functions, Ramanujan and Kloosterman sums, the triple exponential-sum
//!   lemma).
//! * [`special`] holds the complex special functions (Γ, Hurwitz, Lerch and
//!   Riemann zeta) together with the vertical-line and circular-contour
//!   quadratures.
//! * [`estermann`] evaluates `D_{α,β,γ}(s, H/K)` by two independent routes,
//!   computes its polar data and assembles the functional equation.
//! * [`voronoi`] evaluates both sides of the summation formula and of its
//!   alternating-sum specialisation.
//! * [`suites`] packages the above into named check suites producing
//!   [`CheckReport`] records.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod compensated;
pub mod error;
pub mod estermann;
pub mod report;
pub mod special;
pub mod suites;
pub mod voronoi;

pub use num_complex::Complex64 as C64;

pub use arith::{AdditiveTwist, Factorization, ShiftTriple, Signs};
pub use error::{Error, Result};
pub use report::{CheckReport, Metric, SkipReason, Status};
pub use special::{ContourSpec, Quadrature};
pub use voronoi::{PhasedModulus, TestFunction};
