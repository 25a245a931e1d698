//! Numerical kernels for the AB system of coupled integrable PDEs and its
//! deformations.
//!
//! The AB system couples a complex envelope `A(x, t)` to a real mean-flow
//! field `B(x, t)`:
//!
//! ```text
//! 2 B_x + (|A|^2)_t = 0,        A_xt = A B,        |A_t|^2 + B^2 = 1
//! ```
//!
//! This crate provides, on uniform symmetric space-time grids:
//!
//! * finite-difference calculus, quadrature and parity decomposition
//!   ([`stencil`], [`quadrature`], [`parity`]);
//! * an exact solution catalog with residual verification ([`solutions`]);
//! * the su(2) Lax pair, zero-curvature residuals and the curvature anomaly
//!   ([`laxcurv`]);
//! * the sl(2) loop algebra, gauge Abelianization and quasi-conserved
//!   charges ([`loopalg`], [`charges`]);
//! * non-holonomic deformation of the temporal Lax component ([`nhd`]);
//! * quasi-integrable deformation of the potential term ([`qid`]).
//!
//! The crate is `no_std`-compatible (enable the `libm` feature and disable
//! default features); all heavy lifting needs only `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod charges;
pub mod error;
pub mod field;
pub mod grid;
pub mod laxcurv;
pub mod loopalg;
pub mod nhd;
pub mod parity;
pub mod qid;
pub mod quadrature;
pub mod solutions;
pub mod stencil;

pub use error::{AbError, Result};
pub use field::ComplexField;
pub use grid::Grid;

/// Complex scalar used throughout.
pub type Cpx = num_complex::Complex<f64>;

pub(crate) mod prelude {
    pub use crate::{Cpx, Grid, ComplexField, AbError, Result};
    #[allow(unused_imports)]
    pub use alloc::{format, string::String, string::ToString, vec, vec::Vec};
    #[allow(unused_imports)]
    pub use num_traits::Float as _;
}
