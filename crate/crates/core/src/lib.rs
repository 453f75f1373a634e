pub mod error;
pub mod distance_field;
pub mod expr;
pub mod kernels;
pub mod manifolds;
pub mod numerics;
pub mod tube_geometry;
pub mod verifiers;

pub use error::{Error, Result};
