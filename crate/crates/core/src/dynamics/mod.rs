//! Phase-space Monte Carlo of the trapped atom under continuous scattering.

mod ensemble;
mod estimate;
mod evolve;

pub use ensemble::{sample_wigner, Ensemble, Estimate, Sample};
pub use estimate::{
    time_binned_visibility, time_binned_visibility_with_snapshots, visibility_estimator,
    wigner_histogram, VisibilitySeries, WignerGrid,
};
pub use evolve::{evolve, EmissionPattern, ScatteringParams, DEFAULT_ANTITRAP_FACTOR};
