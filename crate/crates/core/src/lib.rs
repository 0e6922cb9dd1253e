pub mod choi;
pub mod cli;
pub mod error;
pub mod faces;
pub mod json;
pub mod linalg;
pub mod oracle;
pub mod spanning;

pub use error::{Error, Result};
