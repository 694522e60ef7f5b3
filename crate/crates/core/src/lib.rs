//! Haar-moment machinery and learning-tree simulation for distinguishing a
//! global Haar-random unitary from a product of two Haar-random blocks with
//! out-of-time-order correlators.

pub mod error;
pub mod matrix;
pub mod otoc;
pub mod parallel;
pub mod perm;
pub mod rng;
pub mod stats;
pub mod tree;
pub mod weingarten;

pub use error::{Error, Result};
pub use otoc::{otoc_value, EnsembleKind, OtocInstance};
pub use matrix::{sample_haar_unitary, ComplexMatrix, QuantumState, UnitaryMatrix, C64};
pub use perm::{CycleType, Permutation};
pub use rng::RandomSource;
pub use weingarten::{gram_matrix, weingarten_table, GramMatrix, WeingartenTable};
