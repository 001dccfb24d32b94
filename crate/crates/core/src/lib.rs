//! Laplacian spectra of Laakso spaces.
//!
//! A Laakso space is fixed by an integer sequence `{j_n}` with every
//! `j_n >= 2`. From it this crate derives
//!
//! * the exact spectrum with multiplicities ([`spectrum`]),
//! * the approximating quantum graphs `F_n` and their discretized
//!   Laplacians ([`graph`], [`sparse`]),
//! * a sparse eigensolver to check the two against each other ([`eigen`]),
//! * heat-kernel traces, spectral zeta functions, complex dimensions and
//!   small-time asymptotics ([`heat`]).
//!
//! ```
//! use laakso::{JSequence, spectrum::full_spectrum};
//!
//! let seq = JSequence::parse("2,3").unwrap();
//! let table = full_spectrum(&seq, 360.0).unwrap();
//! let mults: Vec<String> = table.entries.iter().map(|e| e.multiplicity.to_string()).collect();
//! assert_eq!(mults, ["1", "3", "1", "8", "1", "3", "26"]);
//! ```

pub mod bigdec;
pub mod compare;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod heat;
pub mod par;
pub mod reference;
pub mod sequence;
pub mod sparse;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use par::Execution;
pub use sequence::{JSequence, SequenceKind};

pub use num_complex::Complex64;
