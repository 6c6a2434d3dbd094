//! Differential-form modulus and classical modulus of homology classes on
//! metric cubical complexes, with the Poincaré-duality checks that tie them
//! together.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] builds structured cubical complexes with periodic or twisted
//!   gluing and a `D`/`E` marking of the boundary.
//! * [`chain`] holds chains and cochains.
//! * [`homology`] computes relative integer homology exactly.
//! * [`dec`] is the discrete exterior calculus kernel.
//! * [`dmod`] minimizes the form modulus and checks duality.
//! * [`cmod`] brackets the classical modulus by constraint generation.
//! * [`scenes`] and [`runner`] provide the built-in geometries and the batch runner.

pub mod chain;
pub mod cmod;
pub mod dec;
pub mod dmod;
pub mod error;
pub mod homology;
pub mod linalg;
pub mod mesh;
pub mod runner;
pub mod scenes;
pub mod sparse;

pub use chain::{Chain, Cochain};
pub use error::{Error, Result};
pub use mesh::{build_complex, BoundaryRule, GridSpec, Identification, Marking, MetricComplex, Rel, Side};
