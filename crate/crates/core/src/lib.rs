//! Solver and verification harness for the helically reduced wave equation
//! on a ball in two and three dimensions with Sommerfeld boundary data.

pub mod assembly;
pub mod band;
pub mod cli;
pub mod config;
mod error;
pub mod energy;
pub mod field;
pub mod grid;
pub mod modes;
pub mod profiles;
pub mod quadrature;
pub mod reduction;
pub mod solver;
pub mod suites;

pub use error::{Error, Result};
