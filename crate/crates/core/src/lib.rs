//! Free/bound particle exchange on the unit square: parameter checks, spatially
//! constant equilibria, finite-volume time stepping, Picard iteration with
//! a-priori certificates, and convergence diagnostics.

pub mod diagnostics;
pub mod evolve;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod picard;
pub mod stationary;

pub use diagnostics::{
    convergence_study, exponential_rate_fit, mean_value, spatial_average, ConvergenceSeries,
    DiagnosticsError, DiagnosticsRecord, RateFit,
};
pub use evolve::{run, RunConfig, RunOutput, State, StopReason, StopRule, VScheme};
pub use grid::{
    integrate, laplacian_neumann, sample_initial, Field, Grid, GridError, InitialProfile,
};
pub use model::{
    derived_constants, lipschitz_constant, partial_bounds, DerivedConstants, ParamIssue, Params,
    RawParams, ValidationError, ValidationMode,
};
pub use picard::{
    cauchy_norms, picard_solve, theoretical_bound, PicardCertificate, PicardError, PicardOutput,
    Trajectory,
};
pub use stationary::{
    normalized_stationary, sweep_epsilon, v_of_constant_u, CubicRootReport, StationaryCubic,
    StationaryError, StationaryPair,
};
