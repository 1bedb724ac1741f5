//! Exact exponents and finite-scale checks for upper bounds on average Fourier
//! decay rates of fractal measures over the sphere and the paraboloid.

pub mod checks;
pub mod cli;
pub mod construction;
pub mod error;
pub mod experiment;
pub mod exponents;
pub mod extension;
pub mod measure;
pub mod rational;
pub mod sampling;

pub use error::{Error, Result};
pub use exponents::Surface;
pub use rational::Rational;
