//! Spectral analysis of the curvature Laplacian `Δ − cS` on α-Grushin manifolds.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! - [`params`]: indicial polynomial, discriminant μ, the Θ lattice and the
//!   essential self-adjointness classifier;
//! - [`bessel`]: modified Bessel functions of real and imaginary order and the
//!   model operator `x²∂² + ax∂ + b − hx^{2β}`;
//! - [`deficiency`]: per-mode half-line operators, Weyl endpoint classification
//!   and shooting-based deficiency counts;
//! - [`frobenius`]: Θ-graded series solutions including the resonant log case;
//! - [`extensions`]: boundary jets, asymmetry forms, Lagrangian constraints and
//!   the named extension families;
//! - [`indexset`]: index-set algebra and b-map bookkeeping;
//! - [`curvature`]: moving-frame scalar curvature and a finite-difference oracle;
//! - [`matrix`]: small dense complex matrices.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN falls on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bessel;
pub mod curvature;
pub mod deficiency;
mod error;
pub mod extensions;
pub mod frobenius;
pub mod indexset;
pub mod matrix;
pub mod numerics;
pub mod params;

pub use error::{Error, Result};
pub use num_complex::{self, Complex64};
