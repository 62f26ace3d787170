//! Kron reduction of loopy Laplacian matrices, with effective resistance,
//! spectral diagnostics and DC power-network applications.
//!
//! Node indices are 0-based in the API and 1-based in files and messages.

pub mod error;
pub mod generate;
pub mod graph;
pub mod io;
pub mod kron;
pub mod linalg;
pub mod power;
pub mod resistance;
pub mod spectral;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{augment, laplacian_from_graph, Augmented, LaplacianClass, LoopyLaplacian, WeightedGraph};
pub use io::{CutsetFile, GraphFile};
pub use kron::{kron_reduce, kron_reduce_iterative, KronReduction, Partition};
pub use power::{CutsetResult, DcNetwork, SyncAssessment, SyncCondition};
pub use resistance::{effective_resistance, ResistanceMatrix};
pub use spectral::SpectralReport;
pub use tol::Tolerances;
pub use verify::{verify, VerifyOptions, VerifyReport};
pub use nalgebra::{DMatrix, DVector};
