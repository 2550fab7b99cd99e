//! Ancilla-assisted measurement of the characteristic function of quantum
//! work, simulated on a driven harmonic oscillator in a truncated Fock space.
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigensolver, `expm`, partial traces.
//! - [`model`]: oscillator operators, Hamiltonians, thermal states, scenarios.
//! - [`propagate`]: stepped and closed-form propagators of the driven oscillator.
//! - [`workstats`]: two-point-measurement statistics and the direct characteristic function.
//! - [`interferometer`]: gates, dephasing and the Ramsey readout.
//! - [`sweep`]: grid evaluations, parallel or sequential.

pub mod error;
pub mod experiment;
pub mod interferometer;
pub mod linalg;
pub mod model;
pub mod parallel;
pub mod propagate;
pub mod sweep;
pub mod workstats;

pub use error::{Error, Result};
pub use experiment::Experiment;
pub use interferometer::{run_protocol, DephasingModel, DurationRule, ProtocolResult, Variant};
pub use linalg::ComplexMatrix;
pub use model::{DriveProfile, Scenario};
pub use parallel::Execution;
pub use sweep::{sweep, SweepRow};
pub use workstats::{ChiSample, Process, WorkDistribution};
