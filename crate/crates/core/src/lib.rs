pub mod clifford;
pub mod dense;
pub mod error;
pub mod experiment;
mod hp;
pub mod minimax;
pub mod pauli;
pub mod resources;
pub mod shadow;
pub mod stats;
pub mod thermal;

pub use error::{Error, FieldIssue, Result};
