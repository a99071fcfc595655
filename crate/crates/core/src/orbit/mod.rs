//! Schottky presets, enumerated orbit tables and the estimators built on them.

pub mod preset;
pub mod stats;
pub mod table;

pub use preset::SchottkyPreset;
pub use stats::*;
pub use table::{OrbitEntry, OrbitTable};
