//! Simulation kernel for first passage percolation on the d-dimensional
//! cubic lattice.
//!
//! The crate covers the full experimental pipeline:
//!
//! * [`lattice`] — boxes of Z^d, canonical edge ids, rounding of real
//!   directions to lattice sites;
//! * [`weights`] — edge-weight laws (atoms plus uniform/exponential parts)
//!   with exact CDFs, quantiles and moments, and the standing-assumption
//!   checks;
//! * [`field`] — deterministic lazily-sampled weight fields keyed by
//!   (seed, edge);
//! * [`passage`] — shortest-path passage times, geodesics, set-to-set
//!   times, and the enlarged-endpoint sandwich bound;
//! * [`truncation`] — the renormalised weights that replace extreme values
//!   on large bad/unhealthy clusters, and the Monte Carlo couplings that
//!   compare them to the original field;
//! * [`percolation`] — bond-percolation diagnostics, the oriented growth
//!   model and its edge speed, and the flat-edge geometry they determine;
//! * [`scaling`] — time-constant estimation, convergence-gap fits, the
//!   displacement relaxation (Lambda), geodesic skeletons, and variance
//!   growth scans;
//! * [`stats`] — confidence intervals, robust regression and KS checks;
//! * [`rng`] — counter-based hashing behind all randomness.
//!
//! Everything is deterministic given a master seed: replica seeds are pure
//! functions of (master seed, experiment tag, replica index), so the same
//! configuration reproduces identical numbers on any worker count.

pub mod error;
pub mod field;
pub mod lattice;
pub mod passage;
pub mod percolation;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod truncation;
pub mod unionfind;
pub mod weights;

pub use error::{Error, Result};
pub use field::{EdgeWeights, WeightField};
pub use lattice::{round_to_lattice, EdgeId, LatticeSpec, Site};
pub use weights::{validate_assumptions, AssumptionReport, WeightDistribution};
