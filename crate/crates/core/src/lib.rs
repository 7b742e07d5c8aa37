pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod gbt;
pub mod grid;
pub mod netmodel;
pub mod phys;
pub mod planner;
pub mod qot;

pub use error::{Error, Result};
