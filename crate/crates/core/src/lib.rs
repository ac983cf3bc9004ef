//! Measurement-induced entanglement of atoms in an optical cavity.
//!
//! Atoms with ground states `|g>` and `|f>` sit in a two-sided cavity; a
//! coherent probe transmitted through the cavity picks up a phase proportional
//! to the number `N` of atoms in `|f>`, and homodyne detection of that phase
//! projects the atoms onto a definite `N`. The crate covers the cavity
//! response, the outcome statistics including spontaneous emission, the
//! fidelity/success-probability trade-off, Monte Carlo simulation of the
//! repeat-until-success protocol, and the measurement-based CNOT gate.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity_optics;
pub mod error;
pub mod gate_sim;
pub mod gaussian;
pub mod optimizer;
pub mod outcome_distributions;
pub mod protocol_sim;
pub mod quadrature;
pub mod validation;

pub use cavity_optics::{CavityParams, ComplexAmplitude};
pub use error::{Error, Result};
pub use gate_sim::{AtomState, CorrectionTable, MeasurementOutcome, TwoAtomState};
pub use optimizer::{FidelityMode, OptimizationProblem, OptimizationResult};
pub use outcome_distributions::{AcceptanceWindow, OutcomeModel, PulseConfig};
pub use protocol_sim::{AttemptRecord, ProtocolConfig, ProtocolStats};
