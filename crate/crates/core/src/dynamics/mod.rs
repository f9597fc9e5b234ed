//! Open-system simulation on the truncated atom-cavity space.

pub mod liouvillian;
pub mod mcwf;
pub mod spectrum;

pub use liouvillian::{
    evolve_master_equation, steady_state, steady_state_photon_number, steady_state_unchecked,
    OpenSystem, SteadyState, CUTOFF_LIMIT,
};
pub use mcwf::{
    derive_seed, run_ensemble, run_trajectories, run_trajectories_at, summarize, trajectory_rng,
    JumpRecord, Mcwf, TrajectoryConfig, TrajectoryEstimate, TrajectoryOutcome,
};
pub use spectrum::{
    transmission_spectrum, Provenance, SpectrumMeta, SpectrumTrace, SPECTRUM_COLUMNS,
};
