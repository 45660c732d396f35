pub mod eikonal;
pub mod error;
pub mod evolution;
pub mod fd;
pub mod fp;
pub mod gibbs;
pub mod hjb;
pub mod linalg;
pub mod linearized;
pub mod particles;
pub mod torus;

pub use error::{Error, Result};
