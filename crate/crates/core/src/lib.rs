pub mod error;
pub mod groups;
pub mod odometer;
pub mod oracle;
pub mod scales;
pub mod toeplitz;

pub use error::{Error, Result};
