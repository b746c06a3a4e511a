pub mod bridge;
pub mod dist;
pub mod drift;
pub mod endpoint;
pub mod error;
pub mod exact;
pub mod quadrature;
pub mod rng;
pub mod skeleton;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
pub use rng::RngStream;
