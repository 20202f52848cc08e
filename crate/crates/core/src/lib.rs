//! QDDC specifications compiled to automata, synthesized into run-time
//! enforcement shields, and analysed quantitatively.

pub mod analysis;
pub mod automata;
pub mod cli;
pub mod error;
pub mod gen;
pub mod prop;
pub mod qddc;
pub mod runtime;
pub mod shield;
pub mod synthesis;

pub use error::{Error, Result};
