//! Simulation of a driven two-level quantum Otto engine working between a
//! positive-temperature and a negative-temperature spin reservoir.
//!
//! Units: `h = 1`, frequencies in Hz, times in seconds and energies in h·Hz.
//! Constructors and reports use kHz, μs and h·kHz.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod cycle;
pub mod disorder;
pub mod error;
pub mod evolution;
pub mod mat2;
pub mod model;
pub mod sweep;
pub mod thermal;

pub use coherence::{l1_coherence, stroke_coherence, stroke_coherence_series, CoherenceReport};
pub use cycle::{
    efficiency_closed_form, heat_cold_closed_form, heat_hot_closed_form, otto_threshold,
    run_cycle_trace, simulate, work_closed_form, ClosedForm, CycleResult, OperationMode,
    OttoThreshold,
};
pub use disorder::{
    quenched_efficiency, sample_delta, AveragingMethod, DisorderKind, DisorderSpec, QuenchedResult,
};
pub use error::{OttoError, Result};
pub use evolution::{
    analytic_propagator_g1, propagator_lab, propagator_rotating, transition_probability,
    PropagatorResult,
};
pub use mat2::{DensityOp, EigenPair, HermitianOp, Mat2, UnitaryOp, C64};
pub use model::EngineParams;
pub use sweep::{emit_csv, emit_json, parse_csv, run_sweep, RunRecord, SweepAxis, SweepSpec};
pub use thermal::{beta_from_population, gibbs_state, SpinTemperature};
