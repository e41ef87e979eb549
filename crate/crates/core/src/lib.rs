pub mod cli;
pub mod error;
pub mod geometry;
pub mod norms;
pub mod oracles;
pub mod partition;
pub mod quad;
pub mod smoothing;

pub use error::{Error, Result};
