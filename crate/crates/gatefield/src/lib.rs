//! Krotov-method optimal control for unitary gate synthesis on multilevel systems.
//!
//! The crate finds a time-dependent driving field `ε(t)` that steers a
//! multilevel quantum system (two vibronic manifolds coupled by a dipole
//! operator) so that its evolution over `[0, T]` implements a target unitary
//! gate — e.g. a quantum Fourier transform encoded in a subset of levels — up
//! to a global phase.
//!
//! The optimizer is a monotonically convergent iterative scheme: each
//! iteration runs one backward pass for the costates under the old field and
//! one forward pass that updates the field implicitly while propagating. The
//! objective `J` (gate functional plus field-change penalty) never increases
//! from one iteration to the next; the engine aborts if discretization error
//! ever breaks that guarantee.
//!
//! Layout:
//! - [`linalg`], [`propagate`]: complex linear algebra, one-step propagators
//!   and full-grid evolution (dense reference path plus a cached fast path).
//! - [`model`], [`franck_condon`], [`target`], [`field`], [`basis`]: the
//!   two-surface vibronic model, its dipole couplings, gate targets, pulse
//!   shapes and the state sets tracked by the optimizer.
//! - [`functionals`]: the three gate functionals (phase-sensitive overlap,
//!   its modulus square, and the state-to-state sum) with their variational
//!   coefficients.
//! - [`krotov`]: the iteration engine, its descent diagnostics and the
//!   stationarity residual.
//! - [`analysis`], [`config`], [`persist`], [`runner`]: pulse intensity and
//!   spectra, scaling-law fits, the flat-text config format, and reproducible
//!   run directories.

pub mod analysis;
pub mod basis;
pub mod config;
pub mod error;
pub mod field;
pub mod franck_condon;
pub mod functionals;
mod kernels;
pub mod krotov;
pub mod linalg;
pub mod model;
pub mod persist;
pub mod propagate;
pub mod runner;
pub mod target;

pub use analysis::{
    field_energy, field_spectrum, fit_scaling_law, integrated_intensity, ScalingFit,
    ScalingPoint, SpectrumPoint,
};
pub use basis::{
    build_state_sets, reconstruct_canonical_endpoints, BasisFlavor, StateSet,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use field::{
    build_guess_field, build_guess_field_shaped, sample_shape, shape_function, ControlField,
    ShapeKind,
};
pub use franck_condon::franck_condon_dipole;
pub use functionals::{
    coefficients_a, f_re, f_sm, f_ss, fidelity_log10, tau, FunctionalKind, ObjectiveValue,
    TauValue,
};
pub use krotov::{
    delta1, delta2_integral, run_optimization, run_optimization_diagnostic,
    stationarity_residual, variational_coefficients_b, EngineDiagnostics, IterationRecord,
    KrotovConfig, OptimizationOutcome, StopReason, FIELD_CHANGE_FLOOR,
};
pub use linalg::{inner, matrix_exponential, CMatrix, CVector, Operator, UnitaryMatrix};
pub use model::{build_two_surface_model, global_phase_phi1, SurfaceSpectrum, SystemModel};
pub use persist::{
    parse_field_table, parse_iterations_column, parse_spectrum_table, write_run_dir,
};
pub use propagate::{evolve_states, propagate_step, Direction, StatePropagation, StepPropagator};
pub use runner::{
    milestone_iteration, persist_run, run_from_config, sweep_qubits, sweep_table,
    write_sweep_dir, RunResult, SweepResult, FIDELITY_MILESTONES,
};
pub use target::{build_qft_target, TargetGate};
