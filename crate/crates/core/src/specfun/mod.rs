//! Special functions and quadrature shared by every model component.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
mod gamma;
mod marcum;
mod quad;

pub use bessel::{bessel_i0, bessel_i0e, bessel_i1, bessel_i1e};
pub use gamma::{erf, erfc, gamma, gamma_density, gamma_p, gamma_q, ln_gamma, lower_incomplete_gamma};
pub use marcum::{marcum_p1, marcum_q1};
pub use quad::{integrate, Integral, QuadratureSpec};
