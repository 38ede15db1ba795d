//! The oscillator Racah algebra realized on fixed-level Fock spaces.
//!
//! Modules, bottom up:
//! - [`fock`]: the realization, its basis and the intermediate Casimirs `Q_K`;
//! - [`algebra`]: commutators, the relation catalogue, sl2 triples and Serre checks;
//! - [`trees`]: coupling trees, swaps and the recoupling graph;
//! - [`spectra`]: sectors, labelled joint eigenbases and overlap matrices;
//! - [`special`]: Krawtchouk polynomials and closed-form recoupling coefficients;
//! - [`rotations`]: planar rotations and the conjugation of embedded sl(n-1).

pub mod algebra;
pub mod error;
pub mod fock;
pub mod rotations;
pub mod special;
pub mod spectra;
pub mod trees;

pub use algebra::{RelationReport, SlTriple};
pub use error::{Error, Result};
pub use fock::{FockSpace, ModeParams, ModeSet, MultiIndex, SparseOperator};
pub use rotations::{RotationMatrix, RotationStep};
pub use special::{KrawtchoukParams, RTriple};
pub use spectra::{LabelledBasis, OverlapMatrix, Sector};
pub use trees::{CouplingTree, RecouplingGraph, Swap};
