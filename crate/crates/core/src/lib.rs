pub mod bch;
pub mod catalog;
pub mod error;
pub mod lie;
pub mod linalg;
pub mod pencil;
pub mod poly;
pub mod scalar;
pub mod stats;
pub mod walk;
pub mod words;

pub use error::{Error, Result};
pub use lie::{
    check_jacobi, direct_product, lower_central_series, quotient_algebra, CentralSeries, JacobiReport,
    LieVector, NilpotentAlgebra, StructureConstants,
};
pub use scalar::{int, rat, Rational, Scalar};
