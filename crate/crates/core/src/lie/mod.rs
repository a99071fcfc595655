//! Linear-algebraic core: Cartan subspace, group elements, flags and the
//! cocycles built from them.

pub mod cartan;
pub mod cloud;
pub mod exterior;
pub mod flag;
pub mod group;
pub mod ops;
pub mod random;

pub use cartan::{CartanVector, LinearForm};
pub use cloud::{Action, FlagCloud};
pub use flag::{Flag, FlagPair, HopfPoint};
pub use group::GroupElement;
pub use ops::*;
