//! Numerical toolkit for Anosov (Schottky) subgroups of `SL(d, R)`.

pub mod error;
pub mod lie;
pub mod measure;
pub mod metrics;
pub mod orbit;
pub mod words;

pub use error::{Error, Result};
