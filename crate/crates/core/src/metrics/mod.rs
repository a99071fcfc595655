//! Shadows, Busemann bounds, virtual visual metrics and covering lemmas.

pub mod limit;
pub mod shadow;
pub mod visual;

pub use limit::*;
pub use shadow::*;
pub use visual::*;
