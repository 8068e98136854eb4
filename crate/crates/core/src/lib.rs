pub mod check;
pub mod cli;
pub mod error;
pub mod expr;
pub mod fock;
pub mod gauss;
pub mod geometry;
pub mod models;
pub mod qgt;

pub use error::{Error, ErrorKind, Result};
