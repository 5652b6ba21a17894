#![allow(clippy::needless_range_loop)] // index loops mirror the matrix algebra

//! Simulation and analysis toolkit for a nonlocal polarization
//! interferometer: two balanced Sagnac or Mach-Zehnder interferometers
//! sharing a polarization-entangled photon source.
//!
//! The crate propagates two-photon density matrices through the 16-mode
//! optical model, generates realistic coincidence data, and recovers the
//! anti-diagonal density-matrix observables that detect entanglement,
//! identify Bell states, and drive the polarization-outcome CHSH test.
//!
//! - [`states`]: polarization density matrices and their observables
//! - [`optics`]: interferometer operators, propagation, detection
//! - [`correlations`]: correlation coefficients, verdicts, Bell parameters
//! - [`countsim`]: Monte Carlo counts/timestamps and the counting pipeline
//! - [`io`]: file formats (JSON/CSV)
//! - [`sample`]: random states for tests and studies

pub mod correlations;
pub mod countsim;
pub mod io;
pub mod optics;
pub mod sample;
pub mod states;

pub use correlations::{
    bootstrap_antidiagonals, bootstrap_bell_parameters, chsh_bell_parameters, chsh_report,
    chsh_verdict, correlation_set, entanglement_test, estimate_antidiagonals, fidelity_bounds,
    identify_bell, standard_chsh_correlation, standard_report, AnalysisReport,
    AntidiagonalEstimate, BellIdentification, BellParameters, ChshVerdict, CorrelationError,
    CorrelationSet, Detection, EntanglementVerdict, FidelityBounds, Measured, MeasurementConfig,
    ParameterVerdict, WitnessBound, DEFAULT_SIGNIFICANCE, LOCAL_BOUND, SEPARABLE_BOUND,
    SEPARABLE_S_BOUND, TSIRELSON_BOUND,
};
pub use countsim::{
    accidental_correction, bin_and_count, calibrate, generate_timestamps,
    generate_timestamps_labeled, normalize, simulate_counts, CalibrationRecord, CountError,
    CountsRecord, ExperimentConfig, GroundTruth, TimestampEvent, TimestampStream,
    DEFAULT_BIN_WIDTH_NS,
};
pub use optics::{
    analytic_bell_probabilities, build_m, build_u, detection_probabilities, embed, kron4,
    marginal_coherences, propagate, simulate_probabilities, singles_probabilities,
    CoincidenceTable, InterferometerConfig, MarginalCoherences, ModeState, OpticsError, Pol,
    TableKind, Variant, CHSH_PRE_PHASE, STANDARD_PHASE,
};
pub use states::{
    partial_transpose, AntidiagonalSummary, BellKind, CMat4, CVec4, PolarizationState, StateError,
};
