pub mod bernoulli;
#[cfg(feature = "cli")]
pub mod cli;
pub mod cmdeg;
pub mod error;
pub mod kernel;
pub mod polygamma;
pub mod real;
pub mod remainders;

pub use error::{Error, Result};
pub use real::{PrecisionPolicy, Real};
