//! Presheaf semantics of labelled transition systems, and checkers for strong, fair and
//! branching bisimulation built on it.

pub mod corpus;
pub mod equiv;
pub mod error;
pub mod io;
pub mod lts;
pub mod presheaf;
mod product;
pub mod semantics;

pub use error::{Error, Result};
pub use lts::{Execution, FairLts, FairnessSpec, Label, Lasso, Lts, StateMap, Word};
