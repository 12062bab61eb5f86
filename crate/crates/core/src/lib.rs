pub mod diff;
pub mod error;
pub mod eval;
pub mod evolution;
pub mod mapping;
pub mod matcher;
pub mod obo;
pub mod ontology;
pub mod pipeline;
pub mod prediction;

pub use error::{Error, ErrorClass, Result};
