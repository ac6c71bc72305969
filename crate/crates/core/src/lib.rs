//! Symmetry-adapted, term-sparse moment-SOS relaxations for polynomial
//! optimization problems invariant under a finite group of variable
//! permutations.

pub mod bench;
pub mod error;
pub mod groups;
pub mod ipsolver;
pub mod polyring;
pub mod problem;
pub mod relax;
pub mod sabasis;
pub mod sdpbuild;
pub mod tsp;

pub use error::{Error, Result};
