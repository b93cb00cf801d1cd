//! Simulation toolkit for critical percolation on the hierarchical (edge-colored)
//! configuration model.
//!
//! The crate is organised bottom-up:
//!
//! * [`degree_model`] builds heavy-tailed two-color degree sequences and their
//!   scaling constants.
//! * [`graph`] samples the white/black configuration model and answers
//!   component queries with a union-find oracle.
//! * [`exploration`] runs the breadth-first exploration and produces the
//!   walks `X_n`, `Y_n`, `N_n`.
//! * [`path`], [`levy`] and [`excursions`] handle the continuum side: exact
//!   piecewise-linear càdlàg paths, thinned Lévy limits and excursion
//!   decompositions.
//! * [`mcmw`] is the multiplicative coalescent with mass and weight.
//! * [`percolation`] drives the dynamic and modified black-edge processes.
//! * [`stats`] and [`experiments`] provide norms, KS tests and the
//!   desk-scale convergence experiments.
//!
//! Path and coalescent code is generic over a [`Scalar`]; the aliases below fix
//! the two instantiations used in practice.

pub mod degree_model;
pub mod error;
pub mod excursions;
pub mod experiments;
pub mod exploration;
pub mod graph;
pub mod levy;
pub mod mcmw;
pub mod path;
pub mod percolation;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Arbitrary-precision rational used for exact excursion and merge identities.
pub type Rational = num_rational::BigRational;

/// Floating-point càdlàg path.
pub type Path = path::CadlagPath<f64>;
/// Exact rational càdlàg path.
pub type ExactPath = path::CadlagPath<Rational>;

/// Floating-point excursion interval.
pub type Excursion = excursions::ExcursionInterval<f64>;

/// Floating-point mass/weight configuration.
pub type MassWeights = mcmw::MassWeightVector<f64>;
/// Exact mass/weight configuration.
pub type ExactMassWeights = mcmw::MassWeightVector<Rational>;
/// Floating-point block system.
pub type Blocks = mcmw::BlockSystem<f64>;
