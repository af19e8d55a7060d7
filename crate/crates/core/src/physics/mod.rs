//! Constants, trap tuning, oscillator states and closed-form visibility.

pub mod constants;
pub mod recoil;
pub mod state;
pub mod trap;

pub use constants::PhysicalConstants;
pub use recoil::{eta, eta_eff, momentum_overlap, visibility, RecoilState};
pub use state::{ground_state_sigmas, MotionalState};
pub use trap::{trap_frequencies, TrapModel};
