pub mod density;
pub mod dynamics;
pub mod eigenflow;
pub mod eigensolver;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod quasimodes;
pub mod specfun;
pub mod spectral_approx;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
