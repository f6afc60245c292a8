//! Multifrequency, multiport model of scatterers with time-modulated loads.

pub mod assembly;
pub mod error;
pub mod io;
mod linalg;
pub mod model;
pub mod modulation;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::RCOND_THRESHOLD;
