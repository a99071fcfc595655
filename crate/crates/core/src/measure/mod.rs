//! Discrete Patterson-Sullivan measures on the flag variety and the
//! measure-theoretic checks built on them.

pub mod conformal;
pub mod diagnostics;
pub mod essential;
pub mod ps;

pub use conformal::*;
pub use diagnostics::*;
pub use essential::*;
pub use ps::*;
