//! Numerical model of a recoiling-slit interferometer built from a single
//! trapped atom: the atom's momentum spread, set by the tweezer depth, decides
//! how much which-path information a scattered photon leaves behind, and thus
//! the single-photon fringe visibility.

pub mod dynamics;
pub mod error;
pub mod fit;
pub mod fringes;
pub mod physics;
pub mod rng;
pub mod thermometry;

pub use error::{Error, Result};
