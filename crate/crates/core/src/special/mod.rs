//! Complex special functions and contour quadrature.

pub mod contour;
pub mod factors;
pub mod gamma;
pub mod zeta;

pub use contour::{contour_residue, mellin_barnes, mellin_barnes_fixed, ContourSpec, PhasedKernel, Quadrature};
pub use factors::{chi_factor, gamma_factor, gamma_factor_triple, sign_sum_closed};
pub use gamma::{gamma, ln_gamma};
pub use zeta::{
    check_hurwitz_fe, hurwitz_combination, hurwitz_zeta, hurwitz_zeta_arith, lerch_fraction, lerch_zeta, riemann_zeta,
};
