//! Numerical laboratory for higher-order Kuramoto–Sivashinsky-type equations.

pub mod acceptance;
pub mod app;
pub mod capacity;
pub mod config;
pub mod error;
pub mod evolve;
pub mod field;
pub mod flows;
pub mod io;
pub mod kernels;
pub mod models;
pub mod rescale;
pub mod volterra;

pub use error::{Error, Result};
