pub mod analysis;
pub mod cli;
pub mod error;
pub mod gateset;
pub mod modring;
pub mod quantum_core;
pub mod rbsim;
pub mod twirl;

pub use error::{Error, Result};
