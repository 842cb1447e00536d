pub mod dataio;
pub mod error;
pub mod eval;
pub mod explain;
pub mod featsel;
pub mod models;
pub mod neural;
pub mod numkernel;
pub mod par;
pub mod splits;

pub use error::{Error, Result};
