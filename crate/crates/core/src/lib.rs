//! Hankel-norm approximation of descriptor systems.

pub mod bench;
pub mod dense;
pub mod balance;
pub mod error;
pub mod hna;
pub mod io;
pub mod lyap;
pub mod scalar;
pub mod specfact;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use system::{DescriptorSystem, FrequencyGrid, FrequencyResponse};

pub type System64 = DescriptorSystem<f64>;
pub type System32 = DescriptorSystem<f32>;
