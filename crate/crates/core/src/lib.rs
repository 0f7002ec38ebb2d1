pub mod analysis;
pub mod error;
pub mod guidance;
pub mod numerics;
pub mod outcome;
pub mod pointer;
pub mod scenarios;

pub use error::{Error, Result};
pub use outcome::Outcome;
