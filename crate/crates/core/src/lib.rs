//! Finite-depth constructions around microsets of compact sets.
//!
//! The crate covers five pieces that fit together:
//!
//! * [`seqgen`]: binary branching sequences with long zero runs at every
//!   scale and a lower Cesàro mean close to one.
//! * [`moran`]: uniformly branching (Moran) cube trees built from those
//!   sequences, their dyadic microsets, the closed-form Assouad dimension
//!   and the small-covering check for microsets.
//! * [`symtree`]: generic prefix-closed code trees with cylinder counts and
//!   a lower-dimension estimator.
//! * [`cubes`]: inner regular partitions (generalized dyadic cubes) of
//!   finite point clouds.
//! * [`pigeonhole`] and [`measures`]: the cylinder search that yields
//!   uniformly heavy cylinders, discrete measures, packing sums and the
//!   tangent-measure pipeline bounding the packing pre-measure.
//!
//! Everything is `no_std` with `alloc`; file formats and the command-line
//! driver live in the companion `microset` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cubes;
mod error;
mod grid;
pub mod measures;
pub mod moran;
pub mod pigeonhole;
pub mod seqgen;
pub mod symtree;

pub use error::{Error, Result};

/// Rational numbers with unsigned 64-bit parts.
pub type Rational = num_rational::Ratio<u64>;

/// Default seed for every randomized step (sampling of leaves, points and scales).
pub const DEFAULT_SEED: u64 = 0x4d49_4352_4f53_4554;

/// Relative slack used when comparing floating-point masses and ratios
/// against thresholds that can be attained with equality.
pub const RELATIVE_SLACK: f64 = 1e-12;
