//! Desk-scale numerical laboratory for universal approximation by shallow
//! dictionaries `span{φ∘g : g affine}` and for generating sublattices of
//! finite-dimensional vector lattices.
//!
//! The crate is organised bottom-up:
//!
//! - [`grids`]: finite samples of compact domains and functions on them.
//! - [`subspaces`]: tolerance-aware linear subspaces of `R^d`.
//! - [`activations`]: scalar activations, the leaky map `Φ`, and
//!   finite-difference polynomial detection.
//! - [`approximator`]: dictionaries, least-squares fits, polynomial baselines,
//!   annihilator probes and vector-valued / positively homogeneous fits.
//! - [`lattice`]: lattice operations on `R^d`, generated sublattices,
//!   `Φ`-spans, the spanning constructor and dominated approximation.
//! - [`harness`]: JSON experiment configs, CSV results, SVG plots and the
//!   manifest-driven check runner behind the `uat` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

// `!(x < y)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activations;
pub mod approximator;
pub mod grids;
pub mod harness;
pub mod lattice;
pub mod linalg;
pub mod subspaces;

mod rng;

pub use activations::{Activation, LeakyPhi};
pub use approximator::{AffineMap, Dictionary, FitResult};
pub use grids::{Grid, SampledFunction};
pub use lattice::{GeneratorSet, LatticeExpr, LatticeVector};
pub use subspaces::Subspace;
