//! Reduced-order modeling with POD and autoencoder latent dynamics, plus the
//! error estimators and sweep drivers around it.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod neural;
pub mod rom;
pub mod solvers;

pub use error::{Error, Result};
