//! Numerical laboratory for periodized wavelet analysis on the unit torus.
//!
//! The crate provides, in one and two dimensions:
//!
//! * orthonormal discrete wavelet transforms (compactly supported
//!   minimal-phase filter banks and a band-limited frequency-mask family),
//! * square functions and cube-supremum norms (Sobolev, Morrey, logarithmic
//!   Morrey, BMO-type seminorms, decay envelopes),
//! * multiscale product decompositions, interaction coefficients, and
//!   almost-diagonal operators on coefficient fields,
//! * level-set decompositions into combination atoms with peeled cube covers,
//! * a Cantor-type extremal construction with its kernel-weighted quadratic
//!   functional and divergence experiment,
//! * a fixed-point solver for `(I + (-Δ)^{r/2} + V) f = g` with rough `V`.
//!
//! Everything is deterministic: the only randomness source is the seeded
//! [`rng::SplitMix64`] generator, and all container iteration orders are
//! fixed, so identical inputs produce bit-identical outputs.

pub mod atoms;
pub mod decomp;
pub mod dyadic;
pub mod error;
pub mod field;
pub mod fractal;
pub mod grid;
pub mod io;
mod numeric;
pub mod params;
pub mod qfunc;
pub mod rng;
pub mod solver;
pub mod spaces;
pub mod wavelet;

pub use error::Error;
pub use field::CoefficientField;
pub use grid::GridFunction;
pub use params::SpaceParams;
