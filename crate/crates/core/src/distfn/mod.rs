//! Cesàro distribution functions, their envelopes over a trailing window,
//! the gap area between them and the search for the measure of chaos.

pub mod estimate;
pub mod grid;
pub mod profile;

pub use estimate::{
    estimate_mu, pair_seed, symbolic_profile, ChaosEstimate, MethodInfo, PairArea, PairPoint,
    PairStrategy,
};
pub use grid::{GridScheme, GridSpec, ThresholdGrid, TRIADIC_DEPTH};
pub use profile::{
    cesaro, gap_area, profile, profile_exact, window_start, DistributionProfile, EngineParams,
    ProfileParams, Source, DEFAULT_SAMPLES,
};
