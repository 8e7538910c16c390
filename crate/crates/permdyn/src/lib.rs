pub mod deg2;
pub mod error;
pub mod graph;
pub mod harness;
pub mod limits;
pub mod partition;
pub mod perm;
pub mod rng;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
