//! Independent reference engine used to cross-check the gadgets.

pub mod density;
mod engine;
pub mod golden;
pub mod verify;

pub use density::{density_of, fidelity, DensityMatrix};
pub use engine::*;
pub use golden::Golden;
pub use verify::{aligned_deviation, verify_all, verify_table, RowReport, TableReport};
