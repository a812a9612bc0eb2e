//! Gaussian functorial field theory toolkit: positive operator algebra,
//! truncated Fock space, Bargmann transforms, cylinder geometry, zeta
//! regularized determinants and the resulting amplitude functor.

pub mod bargmann;
pub mod cli;
pub mod error;
pub mod fock;
pub mod fqft;
pub mod geom;
pub mod opalg;
pub mod special;
pub mod symplectic;
pub mod zeta;

pub use error::{Error, Result};
