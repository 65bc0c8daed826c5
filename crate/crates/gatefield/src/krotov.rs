//! The monotonically convergent optimization loop.
//!
//! Each iteration alternates two passes over the time grid:
//!
//! 1. **Backward (costate) pass** — the target states χ_k(T) = Ô|φ_ik⟩,
//!    weighted by the functional's coefficients a_k evaluated from the *old*
//!    endpoints, are propagated from T to 0 under the old field and stored
//!    at every state-grid point.
//! 2. **Forward (update) pass** — marching from t = 0, the field at each
//!    midpoint sample (j+1/2)Δt is corrected by
//!    `Δε = −(s(t)/λ₀ħ)·Im[Σ_k a_k ⟨χ_k(jΔt)|μ̂|φ_k(jΔt)⟩]` using the stored
//!    costates and the states already advanced under the *new* field; the
//!    states then take one step with the corrected sample.
//!
//! The interleaved state/field grids resolve the implicit dependence of the
//! update on the newly propagated states. With the quadratic change penalty
//! `g = λ₀(Δε)²/s(t)` referenced to the previous field, the total objective
//! `J = F + ∫g dt` is guaranteed non-increasing; a rise beyond tolerance is
//! a numerical red flag (grid too coarse, propagator inaccurate) and aborts
//! the run. Per-iteration diagnostics record the descent split into the
//! endpoint term Δ₁ ≥ 0 and the field-change term ∫Δ₂dt ≥ 0.

use num_complex::Complex64 as C64;

use crate::analysis::{field_energy, integrated_intensity};
use crate::basis::{build_state_sets, reconstruct_canonical_endpoints, BasisFlavor, StateSet};
use crate::error::{Error, Result};
use crate::field::{build_guess_field_shaped, sample_shape, ControlField, ShapeKind};
use crate::functionals::{coefficients_a, f_re, f_sm, f_ss, fidelity_log10, tau, FunctionalKind};
use crate::kernels::{apply_real_matrix, check_finite_step, imag_inner_sum, SplitStates};
use crate::linalg::inner;
use crate::model::SystemModel;
use crate::propagate::{evolve_states, Direction, StepPropagator};
use crate::target::TargetGate;

/// Iteration stops once the largest per-sample field change falls below
/// this floor — the update has reached machine stagnation.
pub const FIELD_CHANGE_FLOOR: f64 = 1e-14;

/// Default absolute tolerance on a per-iteration rise of J.
pub const DEFAULT_MONOTONICITY_TOLERANCE: f64 = 1e-9;

/// Costate storage cap; the backward trajectory must fit comfortably in
/// memory (N_t · M · N complex amplitudes).
const COSTATE_STORAGE_CAP_BYTES: usize = 3 << 30;

/// Everything one optimization run needs besides the physical model and the
/// target gate.
#[derive(Debug, Clone, PartialEq)]
pub struct KrotovConfig {
    /// Penalty scale on per-iteration field change (a.u.); small = bold
    /// search, large = conservative.
    pub lambda0: f64,
    pub functional: FunctionalKind,
    pub basis_flavor: BasisFlavor,
    pub max_iterations: usize,
    /// Stop once log₁₀(1−|τ|²/N²) falls to this value (clamped at −16).
    pub fidelity_target: f64,
    /// Guess pulse amplitude ε₀ (a.u.).
    pub epsilon0: f64,
    /// Guess pulse carrier frequency Ω (angular a.u.).
    pub omega: f64,
    pub total_time: f64,
    pub n_steps: usize,
    pub shape: ShapeKind,
    pub monotonicity_tolerance: f64,
    /// Optional second penalty scale, switched in at
    /// `lambda0_switch_iteration` (mixed bold/conservative strategy).
    pub lambda0_phase2: Option<f64>,
    pub lambda0_switch_iteration: Option<usize>,
}

impl KrotovConfig {
    /// Defaults matching the reference two-surface scenario: λ₀ = 10³,
    /// ε₀ = 5×10⁻³, Ω = 0.06601, T = 4.5×10⁴, N_t = 32768.
    pub fn standard(functional: FunctionalKind) -> Self {
        KrotovConfig {
            lambda0: 1.0e3,
            functional,
            basis_flavor: functional.default_flavor(),
            max_iterations: 100,
            fidelity_target: -16.0,
            epsilon0: 5.0e-3,
            omega: 0.06601,
            total_time: 4.5e4,
            n_steps: 32768,
            shape: ShapeKind::Gaussian,
            monotonicity_tolerance: DEFAULT_MONOTONICITY_TOLERANCE,
            lambda0_phase2: None,
            lambda0_switch_iteration: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(Error::config(
                "lambda0",
                format!("must be positive and finite, got {}", self.lambda0),
            ));
        }
        if self.n_steps < 2 {
            return Err(Error::config(
                "n_steps",
                format!("needs at least 2 time steps, got {}", self.n_steps),
            ));
        }
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(Error::config(
                "total_time",
                format!("must be positive and finite, got {}", self.total_time),
            ));
        }
        if !self.fidelity_target.is_finite() || self.fidelity_target > 0.0 {
            return Err(Error::config(
                "fidelity_target",
                format!(
                    "log₁₀-scale fidelity cannot exceed 0, got {}",
                    self.fidelity_target
                ),
            ));
        }
        if !(self.epsilon0 >= 0.0) || !self.epsilon0.is_finite() {
            return Err(Error::config(
                "epsilon0",
                format!("must be finite and >= 0, got {}", self.epsilon0),
            ));
        }
        if !self.omega.is_finite() {
            return Err(Error::config("omega", "carrier frequency must be finite"));
        }
        if !(self.monotonicity_tolerance >= 0.0) {
            return Err(Error::config(
                "monotonicity_tolerance",
                format!("must be >= 0, got {}", self.monotonicity_tolerance),
            ));
        }
        if !self.functional.accepts_flavor(self.basis_flavor) {
            return Err(Error::config(
                "basis_flavor",
                format!(
                    "functional `{}` is not defined over flavor `{}`",
                    self.functional.as_str(),
                    self.basis_flavor.as_str()
                ),
            ));
        }
        match (self.lambda0_phase2, self.lambda0_switch_iteration) {
            (None, None) => {}
            (Some(l2), Some(_)) => {
                if !(l2 > 0.0) || !l2.is_finite() {
                    return Err(Error::config(
                        "lambda0_phase2",
                        format!("must be positive and finite, got {l2}"),
                    ));
                }
            }
            _ => {
                return Err(Error::config(
                    "lambda0_phase2",
                    "lambda0_phase2 and lambda0_switch_iteration must be set together",
                ));
            }
        }
        Ok(())
    }

    fn effective_lambda0(&self, sweep: usize) -> f64 {
        match (self.lambda0_phase2, self.lambda0_switch_iteration) {
            (Some(l2), Some(switch)) if sweep >= switch => l2,
            _ => self.lambda0,
        }
    }
}

/// Per-iteration diagnostics. Record 0 describes the guess field (no update
/// yet: Δ₁ = ∫Δ₂ = max|Δε| = 0, J = F).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Total objective J = F + ∫λ₀(Δε)²/s dt for the sweep producing this field.
    pub j: f64,
    /// J divided by its target magnitude (N for re/ss, N² for sm).
    pub j_norm: f64,
    /// Complex trace overlap of the evolved gate with the target.
    pub tau: C64,
    /// log₁₀(1 − |τ|²/N²), clamped at −16; lower is better.
    pub fidelity: f64,
    pub delta1: f64,
    pub delta2_integral: f64,
    /// ∫ε² dt of this iteration's field.
    pub field_energy: f64,
    /// ∫|μ₀ε| dt of this iteration's field.
    pub intensity: f64,
    pub max_field_change: f64,
}

/// Why the iteration loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    FidelityTarget,
    MaxIterations,
    FieldChangeFloor,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::FidelityTarget => "fidelity_target",
            StopReason::MaxIterations => "max_iterations",
            StopReason::FieldChangeFloor => "field_change_floor",
        }
    }
}

/// Run-level numerical health indicators, aligned with the record sequence.
#[derive(Debug, Clone)]
pub struct EngineDiagnostics {
    /// Worst relative norm drift of any propagated state (forward states and
    /// costates) during the passes that produced record i.
    pub norm_deviations: Vec<f64>,
    pub max_norm_deviation: f64,
    /// Times the cached step propagator had to widen its field range.
    pub cache_rebuilds: usize,
    pub stop_reason: StopReason,
}

/// Full result of an optimization: the final field, the per-iteration
/// records, and the engine health diagnostics.
#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    pub field: ControlField,
    pub records: Vec<IterationRecord>,
    pub diagnostics: EngineDiagnostics,
}

/// Optimize the field for the given model/target under `config`; returns the
/// final field and the full diagnostic sequence.
pub fn run_optimization(
    model: &SystemModel,
    target: &TargetGate,
    config: &KrotovConfig,
) -> Result<(ControlField, Vec<IterationRecord>)> {
    let outcome = run_optimization_diagnostic(model, target, config)?;
    Ok((outcome.field, outcome.records))
}

/// [`run_optimization`] variant that also returns engine diagnostics
/// (norm drift per iteration, cache rebuilds, stop reason).
pub fn run_optimization_diagnostic(
    model: &SystemModel,
    target: &TargetGate,
    config: &KrotovConfig,
) -> Result<OptimizationOutcome> {
    Engine::new(model, target, config)?.run()
}

struct ForwardSweep {
    samples: Vec<f64>,
    delta2_integral: f64,
    max_field_change: f64,
    norm_deviation: f64,
}

struct Engine<'a> {
    model: &'a SystemModel,
    config: &'a KrotovConfig,
    kind: FunctionalKind,
    flavor: BasisFlavor,
    dim: usize,
    count: usize,
    n_steps: usize,
    dt: f64,
    initial_block: SplitStates,
    targets_set: StateSet,
    canonical_targets: StateSet,
    mu_flat: Vec<f64>,
    shape_samples: Vec<f64>,
    propagator: StepPropagator,
    // Costates at state-grid points 0..N_t−1, step-major blocks.
    chi_re: Vec<f64>,
    chi_im: Vec<f64>,
    phi: SplitStates,
    chi_work: SplitStates,
    apply_scratch: SplitStates,
    dipole_scratch: SplitStates,
    cos_scratch: Vec<f64>,
    sin_scratch: Vec<f64>,
    norm_scratch: Vec<f64>,
    unit_norms: Vec<f64>,
    seed_norms: Vec<f64>,
    cache_rebuilds: usize,
}

impl<'a> Engine<'a> {
    fn new(model: &'a SystemModel, target: &TargetGate, config: &'a KrotovConfig) -> Result<Self> {
        config.validate()?;
        let kind = config.functional;
        let flavor = config.basis_flavor;
        let (initial_set, targets_set) = build_state_sets(model, target, flavor)?;
        let canonical_targets = if flavor == BasisFlavor::CanonicalBasis {
            StateSet::new(targets_set.members().to_vec(), BasisFlavor::CanonicalBasis)?
        } else {
            build_state_sets(model, target, BasisFlavor::CanonicalBasis)?.1
        };

        let dim = model.dim();
        let count = initial_set.len();
        let n_steps = config.n_steps;
        let block_len = dim * count;
        let storage = n_steps
            .saturating_mul(block_len)
            .saturating_mul(2 * std::mem::size_of::<f64>());
        if storage > COSTATE_STORAGE_CAP_BYTES {
            return Err(Error::Validation(format!(
                "costate storage would need {:.1} GiB (N_t={} × M={} × N={}); \
                 reduce n_steps or the register size",
                storage as f64 / (1u64 << 30) as f64,
                n_steps,
                dim,
                count
            )));
        }

        let guess = build_guess_field_shaped(
            config.epsilon0,
            config.omega,
            config.total_time,
            n_steps,
            config.shape,
        )?;
        let half_range = (4.0 * guess.max_abs()).max(1e-6);
        let propagator = StepPropagator::new(model, guess.dt(), half_range)?;

        let mu_flat: Vec<f64> = model.dipole_matrix().iter().copied().collect();
        let shape_samples = sample_shape(config.shape, config.total_time, n_steps);
        let initial_block = SplitStates::from_state_set(&initial_set);
        let mut unit_norms = vec![0.0; count];
        initial_block.norms_sq_into(&mut unit_norms);
        for n in unit_norms.iter_mut() {
            *n = n.sqrt();
        }

        Ok(Engine {
            model,
            config,
            kind,
            flavor,
            dim,
            count,
            n_steps,
            dt: guess.dt(),
            initial_block,
            targets_set,
            canonical_targets,
            mu_flat,
            shape_samples,
            propagator,
            chi_re: vec![0.0; n_steps * block_len],
            chi_im: vec![0.0; n_steps * block_len],
            phi: SplitStates::zeros(dim, count),
            chi_work: SplitStates::zeros(dim, count),
            apply_scratch: SplitStates::zeros(dim, count),
            dipole_scratch: SplitStates::zeros(dim, count),
            cos_scratch: vec![0.0; dim * dim],
            sin_scratch: vec![0.0; dim * dim],
            norm_scratch: vec![0.0; count],
            unit_norms,
            seed_norms: vec![0.0; count],
            cache_rebuilds: 0,
        })
    }

    fn run(mut self) -> Result<OptimizationOutcome> {
        let mut field = build_guess_field_shaped(
            self.config.epsilon0,
            self.config.omega,
            self.config.total_time,
            self.n_steps,
            self.config.shape,
        )?;

        let mut records: Vec<IterationRecord> = Vec::new();
        let mut norm_deviations: Vec<f64> = Vec::new();

        let dev0 = self.forward_frozen(&field)?;
        let mut prev_endpoints = self.phi.to_state_set(self.flavor)?;
        let record0 = self.make_record(0, &prev_endpoints, &field, 0.0, 0.0, 0.0)?;
        let mut prev_j = record0.j;
        let fidelity0 = record0.fidelity;
        records.push(record0);
        norm_deviations.push(dev0);

        let mut stop = if fidelity0 <= self.config.fidelity_target {
            Some(StopReason::FidelityTarget)
        } else if self.config.max_iterations == 0 {
            Some(StopReason::MaxIterations)
        } else {
            None
        };

        let mut sweep = 1;
        while stop.is_none() {
            let lambda = self.config.effective_lambda0(sweep);
            let coeffs = coefficients_a(self.kind, &prev_endpoints, &self.targets_set)?;
            let backward_dev = self.backward_pass(&field, &coeffs)?;
            let forward = self.forward_update(&field, lambda)?;
            let new_field = ControlField::new(forward.samples, self.config.total_time)?;
            let new_endpoints = self.phi.to_state_set(self.flavor)?;
            let d1 = delta1(self.kind, &prev_endpoints, &new_endpoints, &self.targets_set)?;
            let record = self.make_record(
                sweep,
                &new_endpoints,
                &new_field,
                d1,
                forward.delta2_integral,
                forward.max_field_change,
            )?;

            let rise = record.j - prev_j;
            if rise > self.config.monotonicity_tolerance {
                return Err(Error::Monotonicity {
                    record: Box::new(record),
                    rise,
                    tolerance: self.config.monotonicity_tolerance,
                });
            }

            prev_j = record.j;
            let fidelity = record.fidelity;
            let max_change = record.max_field_change;
            norm_deviations.push(backward_dev.max(forward.norm_deviation));
            records.push(record);
            field = new_field;
            prev_endpoints = new_endpoints;

            stop = if fidelity <= self.config.fidelity_target {
                Some(StopReason::FidelityTarget)
            } else if max_change < FIELD_CHANGE_FLOOR {
                Some(StopReason::FieldChangeFloor)
            } else if sweep >= self.config.max_iterations {
                Some(StopReason::MaxIterations)
            } else {
                None
            };
            sweep += 1;
        }

        let max_norm_deviation = norm_deviations.iter().copied().fold(0.0, f64::max);
        Ok(OptimizationOutcome {
            field,
            records,
            diagnostics: EngineDiagnostics {
                norm_deviations,
                max_norm_deviation,
                cache_rebuilds: self.cache_rebuilds,
                stop_reason: stop.expect("loop exits only with a stop reason"),
            },
        })
    }

    /// Propagate the initial states forward without touching the field
    /// (evaluates the guess iterate). Leaves the endpoints in `self.phi`.
    fn forward_frozen(&mut self, field: &ControlField) -> Result<f64> {
        self.phi.copy_from(&self.initial_block);
        let mut deviation = 0.0f64;
        let samples = field.samples();
        for j in 0..self.n_steps {
            if self.propagator.ensure_covers(self.model, samples[j])? {
                self.cache_rebuilds += 1;
            }
            self.propagator
                .evaluate_into(samples[j], &mut self.cos_scratch, &mut self.sin_scratch)?;
            self.propagator.step_block(
                &self.cos_scratch,
                &self.sin_scratch,
                Direction::Forward,
                &mut self.phi,
                &mut self.apply_scratch,
            );
            check_finite_step(&self.phi, j)?;
            deviation = deviation
                .max(self.phi.max_norm_deviation(&self.unit_norms, &mut self.norm_scratch));
        }
        Ok(deviation)
    }

    /// Backward costate pass under the old field: seeds χ_k(T) with the
    /// coefficient-weighted targets and stores χ at grid points N_t−1..0.
    fn backward_pass(&mut self, field: &ControlField, coefficients: &[C64]) -> Result<f64> {
        self.chi_work = SplitStates::from_state_set(&self.targets_set);
        for (k, a) in coefficients.iter().enumerate() {
            // a_k⟨χ_k| = ⟨conj(a_k)·χ_k|: fold the weight into the seed.
            self.chi_work.scale_column(k, a.conj());
        }
        self.chi_work.norms_sq_into(&mut self.seed_norms);
        for n in self.seed_norms.iter_mut() {
            *n = n.sqrt();
        }

        let block_len = self.dim * self.count;
        let samples = field.samples();
        let mut deviation = 0.0f64;
        for j in (0..self.n_steps).rev() {
            self.propagator
                .evaluate_into(samples[j], &mut self.cos_scratch, &mut self.sin_scratch)?;
            self.propagator.step_block(
                &self.cos_scratch,
                &self.sin_scratch,
                Direction::Backward,
                &mut self.chi_work,
                &mut self.apply_scratch,
            );
            check_finite_step(&self.chi_work, j)?;
            deviation = deviation
                .max(self.chi_work.max_norm_deviation(&self.seed_norms, &mut self.norm_scratch));
            self.chi_work.store_into(
                &mut self.chi_re[j * block_len..(j + 1) * block_len],
                &mut self.chi_im[j * block_len..(j + 1) * block_len],
            );
        }
        Ok(deviation)
    }

    /// Forward pass with the interleaved-grid field update. Leaves the new
    /// endpoints in `self.phi`.
    fn forward_update(&mut self, old_field: &ControlField, lambda: f64) -> Result<ForwardSweep> {
        self.phi.copy_from(&self.initial_block);
        let block_len = self.dim * self.count;
        let old = old_field.samples();
        let dt = self.dt;
        let mut samples = Vec::with_capacity(self.n_steps);
        let mut delta2 = 0.0f64;
        let mut max_change = 0.0f64;
        let mut deviation = 0.0f64;

        for j in 0..self.n_steps {
            apply_real_matrix(&self.mu_flat, &self.phi, &mut self.dipole_scratch);
            let im_sum = imag_inner_sum(
                &self.chi_re[j * block_len..(j + 1) * block_len],
                &self.chi_im[j * block_len..(j + 1) * block_len],
                &self.dipole_scratch,
            );
            let s_j = self.shape_samples[j];
            let delta_eps = -(s_j / lambda) * im_sum;
            if !delta_eps.is_finite() {
                return Err(Error::Numeric(format!(
                    "field update became non-finite at step {j}"
                )));
            }
            let eps_new = old[j] + delta_eps;
            if self.propagator.ensure_covers(self.model, eps_new)? {
                self.cache_rebuilds += 1;
            }
            self.propagator
                .evaluate_into(eps_new, &mut self.cos_scratch, &mut self.sin_scratch)?;
            self.propagator.step_block(
                &self.cos_scratch,
                &self.sin_scratch,
                Direction::Forward,
                &mut self.phi,
                &mut self.apply_scratch,
            );
            check_finite_step(&self.phi, j)?;
            deviation = deviation
                .max(self.phi.max_norm_deviation(&self.unit_norms, &mut self.norm_scratch));

            samples.push(eps_new);
            delta2 += (lambda / s_j) * delta_eps * delta_eps * dt;
            max_change = max_change.max(delta_eps.abs());
        }

        Ok(ForwardSweep {
            samples,
            delta2_integral: delta2,
            max_field_change: max_change,
            norm_deviation: deviation,
        })
    }

    fn make_record(
        &self,
        iteration: usize,
        endpoints: &StateSet,
        field: &ControlField,
        delta1_value: f64,
        delta2_value: f64,
        max_field_change: f64,
    ) -> Result<IterationRecord> {
        let canonical_endpoints = reconstruct_canonical_endpoints(endpoints)?;
        let tau_value = tau(&canonical_endpoints, &self.canonical_targets)?;
        let objective = match self.kind {
            FunctionalKind::Re => f_re(&tau_value),
            FunctionalKind::Sm => f_sm(&tau_value),
            FunctionalKind::Ss => f_ss(endpoints, &self.targets_set)?,
        };
        let j = objective.value + delta2_value;
        Ok(IterationRecord {
            iteration,
            j,
            j_norm: j / self.kind.normalization(self.count),
            tau: tau_value.value(),
            fidelity: fidelity_log10(&tau_value),
            delta1: delta1_value,
            delta2_integral: delta2_value,
            field_energy: field_energy(field),
            intensity: integrated_intensity(field, self.model.mu0()),
            max_field_change,
        })
    }
}

/// Endpoint part of the per-iteration descent:
/// re → 0; sm → |Σ_n⟨φ_fn|φ_n^old(T)−φ_n^new(T)⟩|²;
/// ss → Σ_l |⟨φ_fl|φ_l^old(T)−φ_l^new(T)⟩|². Non-negative by construction.
pub fn delta1(
    kind: FunctionalKind,
    old_endpoints: &StateSet,
    new_endpoints: &StateSet,
    targets: &StateSet,
) -> Result<f64> {
    if old_endpoints.len() != new_endpoints.len()
        || old_endpoints.len() != targets.len()
        || old_endpoints.dim() != new_endpoints.dim()
        || old_endpoints.dim() != targets.dim()
    {
        return Err(Error::Validation(
            "endpoint/target state sets must share shape".into(),
        ));
    }
    match kind {
        FunctionalKind::Re => Ok(0.0),
        FunctionalKind::Sm => {
            let mut total = C64::new(0.0, 0.0);
            for ((old, new), tgt) in old_endpoints
                .members()
                .iter()
                .zip(new_endpoints.members())
                .zip(targets.members())
            {
                total += inner(tgt, old) - inner(tgt, new);
            }
            Ok(total.norm_sqr())
        }
        FunctionalKind::Ss => {
            let mut total = 0.0;
            for ((old, new), tgt) in old_endpoints
                .members()
                .iter()
                .zip(new_endpoints.members())
                .zip(targets.members())
            {
                total += (inner(tgt, old) - inner(tgt, new)).norm_sqr();
            }
            Ok(total)
        }
    }
}

/// Field-change part of the per-iteration descent:
/// `Σ_j (λ₀/s(t_j))·(ε_new(t_j)−ε_old(t_j))²·Δt ≥ 0`.
pub fn delta2_integral(
    field_old: &ControlField,
    field_new: &ControlField,
    lambda0: f64,
    shape_samples: &[f64],
) -> Result<f64> {
    if field_old.n_steps() != field_new.n_steps()
        || field_old.total_time() != field_new.total_time()
    {
        return Err(Error::Validation(
            "fields must share the same time grid".into(),
        ));
    }
    if shape_samples.len() != field_old.n_steps() {
        return Err(Error::Validation(format!(
            "shape sampled on {} points but the field grid has {} steps",
            shape_samples.len(),
            field_old.n_steps()
        )));
    }
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(Error::Validation(format!(
            "lambda0 must be positive and finite, got {lambda0}"
        )));
    }
    let dt = field_old.dt();
    let mut total = 0.0;
    for ((old, new), s) in field_old
        .samples()
        .iter()
        .zip(field_new.samples())
        .zip(shape_samples)
    {
        let de = new - old;
        total += (lambda0 / s) * de * de * dt;
    }
    Ok(total)
}

/// Max-magnitude of the would-be field correction with costates and states
/// evolved under the SAME field:
/// `C(t_j) = Im[Σ_k a_k ⟨χ_k(jΔt)|μ̂|φ_k(jΔt)⟩]` over the field grid.
/// Zero identifies a fixed point of the iteration — which certifies
/// stationarity, not success (spurious fixed points exist).
pub fn stationarity_residual(
    model: &SystemModel,
    field: &ControlField,
    initial_states: &StateSet,
    target_states: &StateSet,
    kind: FunctionalKind,
) -> Result<f64> {
    if initial_states.len() != target_states.len() || initial_states.dim() != target_states.dim() {
        return Err(Error::Validation(
            "initial/target state sets must share shape".into(),
        ));
    }
    if !kind.accepts_flavor(initial_states.flavor()) {
        return Err(Error::Validation(format!(
            "functional `{}` is not defined over flavor `{}`",
            kind.as_str(),
            initial_states.flavor().as_str()
        )));
    }

    let forward = evolve_states(initial_states, model, field, Direction::Forward, true)?;
    let coefficients = coefficients_a(kind, forward.endpoint(), target_states)?;
    let backward = evolve_states(target_states, model, field, Direction::Backward, true)?;
    let phi = forward.trajectory().expect("recorded");
    let chi = backward.trajectory().expect("recorded");

    let mu = model
        .dipole_matrix()
        .mapv(|v| C64::new(v, 0.0));
    let mut worst = 0.0f64;
    for j in 0..field.n_steps() {
        let mut sum = C64::new(0.0, 0.0);
        for k in 0..initial_states.len() {
            let driven = mu.dot(phi[j].member(k));
            sum += coefficients[k] * inner(chi[j].member(k), &driven);
        }
        worst = worst.max(sum.im.abs());
    }
    Ok(worst)
}

/// Per-state coefficients recomputed through the variational route: for each
/// l-basis member, apply the target gate to the initial state afresh and
/// conjugate-project the endpoint on it, `b_l = ⟨φ_fl|φ_l(T)⟩*`. Exposed for
/// the equivalence check `b_l ≡ a_ss,l`.
pub fn variational_coefficients_b(
    l_basis_initial: &StateSet,
    endpoints: &StateSet,
    target: &TargetGate,
) -> Result<Vec<C64>> {
    if l_basis_initial.len() != endpoints.len() || l_basis_initial.dim() != endpoints.dim() {
        return Err(Error::Validation(
            "initial/endpoint state sets must share shape".into(),
        ));
    }
    if !FunctionalKind::Ss.accepts_flavor(l_basis_initial.flavor()) {
        return Err(Error::Validation(
            "variational coefficients are defined over an l-basis".into(),
        ));
    }
    l_basis_initial
        .members()
        .iter()
        .zip(endpoints.members())
        .map(|(init, end)| {
            let fresh_target = target.apply_embedded(init)?;
            // conj(⟨φ_f|φ(T)⟩) = ⟨φ(T)|φ_f⟩.
            Ok(inner(end, &fresh_target))
        })
        .collect()
}
