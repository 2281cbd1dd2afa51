//! Exact Voronoi-cell navigation in rational lattices and a randomized
//! closest-vector solver with preprocessing.
//!
//! All geometry is done over `BigRational`. The relevant vectors of a
//! lattice are computed once ([`voronoi::compute_relevant_vectors`]); queries
//! then walk the Voronoi graph along a perturbed straight line
//! ([`navigation::randomized_straight_line`]) and certify the endpoint
//! exactly ([`cvpp::query`]).

pub mod cvpp;
pub mod error;
pub mod io;
pub mod lattice;
pub mod navigation;
pub mod oracle;
pub mod rational;
pub mod sampling;
pub mod voronoi;

pub use cvpp::{preprocess, query, PreprocessedLattice, SolveResult};
pub use error::{Error, Result};
pub use lattice::{LatticeBasis, LatticePoint, Limits, Target};
pub use rational::{Matrix, Scalar};
pub use voronoi::{compute_relevant_vectors, RelevantVector, VoronoiCellData};
