//! Fixed point machinery for finite-dimensional spaces carrying a family of
//! matrix seminorms `q(x) = ‖A x‖₂`.
//!
//! The crate provides:
//!
//! * [`space`]: vectors, seminorms, seminorm families and convex regions.
//! * [`duality`]: the q-duality mapping `J_q`, the dual seminorm and
//!   executable forms of the duality inequalities.
//! * [`maps`]: declarative nonexpansive maps and contractions with modulus
//!   verification and fixed-set oracles.
//! * [`contraction`]: Picard iteration with the a-priori certified error bound.
//! * [`viscosity`]: the implicit viscosity scheme
//!   `z_n = ε_n f(z_n) + (1 − ε_n) T(z_n)` and its diagnostics.
//! * [`retraction`]: construction and audit of the sunny retraction onto
//!   `Fix(T)`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod contraction;
pub mod duality;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod retraction;
pub mod sampling;
pub mod space;
pub mod viscosity;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use space::{RegionSpec, Seminorm, SeminormFamily, Vector};
