//! Quantum linear time-invariant systems in the frequency domain.

pub mod apps;
pub mod decompose;
pub mod detect;
pub mod error;
pub mod group;
pub mod io;
pub mod linalg;
pub mod matfn;
pub mod quantize;
pub mod sdm;
pub mod transfer;

pub use error::{Error, ErrorClass, Result};
pub use group::{AlgebraElement, LadderBasisMap, SymplecticForm};
pub use matfn::{FrequencyGrid, MatrixFunction};
