//! Integrability, momentum-map stratification and domain-of-motion topology
//! for natural Hamiltonian systems on flat tori.

pub mod dynamics;
pub mod error;
pub mod geodesics;
pub mod homology;
pub mod model;
pub mod observables;
pub mod strata;
pub mod trig1d;

pub use error::{Error, Result};
