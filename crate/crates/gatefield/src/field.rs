//! Control fields on the interleaved time grid, the switch-on/off envelope,
//! and the initial guess pulse.
//!
//! States live on the grid `jΔt`, `j = 0..N_t`; the field lives at the
//! midpoints `(j+1/2)Δt`, `j = 0..N_t−1`. That half-step offset is what lets
//! the optimizer update the field implicitly from already-updated states
//! while marching forward.

use crate::error::{Error, Result};

/// Envelope variant. The Gaussian form is the default; the linear-exponent
/// form (no square on the argument) is kept selectable because the two are
/// easy to confuse and differ visibly in switch-on behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShapeKind {
    #[default]
    Gaussian,
    LinearExponent,
}

impl ShapeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeKind::Gaussian => "gaussian",
            ShapeKind::LinearExponent => "linear-exponent",
        }
    }
}

impl std::str::FromStr for ShapeKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gaussian" => Ok(ShapeKind::Gaussian),
            "linear-exponent" => Ok(ShapeKind::LinearExponent),
            other => Err(format!(
                "unknown shape function `{other}` (expected `gaussian` or `linear-exponent`)"
            )),
        }
    }
}

/// Gaussian envelope `s(t) = exp(−32·(t/T − 1/2)²)`: 1 at the pulse center,
/// e⁻⁸ ≈ 3.35e-4 at both ends.
pub fn shape_function(t: f64, total_time: f64) -> f64 {
    let u = t / total_time - 0.5;
    (-32.0 * u * u).exp()
}

/// Envelope for an explicit [`ShapeKind`].
pub fn shape_function_kind(kind: ShapeKind, t: f64, total_time: f64) -> f64 {
    match kind {
        ShapeKind::Gaussian => shape_function(t, total_time),
        ShapeKind::LinearExponent => {
            let u = t / total_time - 0.5;
            (-32.0 * u).exp()
        }
    }
}

/// Field samples on the midpoint grid plus the grid definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    samples: Vec<f64>,
    total_time: f64,
}

impl ControlField {
    pub fn new(samples: Vec<f64>, total_time: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("field needs at least one sample".into()));
        }
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::Validation(format!(
                "total time must be finite and > 0, got {total_time}"
            )));
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "field sample {idx} is not finite"
            )));
        }
        Ok(ControlField {
            samples,
            total_time,
        })
    }

    /// All-zero field on the given grid.
    pub fn zero(total_time: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Validation("grid needs at least one step".into()));
        }
        ControlField::new(vec![0.0; n_steps], total_time)
    }

    pub fn n_steps(&self) -> usize {
        self.samples.len()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Δt = T / N_t.
    pub fn dt(&self) -> f64 {
        self.total_time / self.samples.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Midpoint time of step `j`: `(j + 1/2)·Δt`.
    pub fn sample_time(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dt()
    }

    /// All midpoint times, in step order.
    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.n_steps()).map(|j| self.sample_time(j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Shape-function samples on the midpoint field grid, `s((j+1/2)Δt)`.
pub fn sample_shape(kind: ShapeKind, total_time: f64, n_steps: usize) -> Vec<f64> {
    let dt = total_time / n_steps as f64;
    (0..n_steps)
        .map(|j| shape_function_kind(kind, (j as f64 + 0.5) * dt, total_time))
        .collect()
}

/// Guess pulse `ε(t) = ε₀·s(t)·cos(Ωt)` sampled on the midpoint grid.
pub fn build_guess_field(
    epsilon0: f64,
    omega: f64,
    total_time: f64,
    n_steps: usize,
) -> Result<ControlField> {
    build_guess_field_shaped(epsilon0, omega, total_time, n_steps, ShapeKind::Gaussian)
}

/// Guess pulse with an explicit envelope variant.
pub fn build_guess_field_shaped(
    epsilon0: f64,
    omega: f64,
    total_time: f64,
    n_steps: usize,
    kind: ShapeKind,
) -> Result<ControlField> {
    if epsilon0 < 0.0 || !epsilon0.is_finite() {
        return Err(Error::Validation(format!(
            "guess amplitude must be finite and >= 0, got {epsilon0}"
        )));
    }
    if n_steps == 0 {
        return Err(Error::Validation("grid needs at least one step".into()));
    }
    let dt = total_time / n_steps as f64;
    let samples = (0..n_steps)
        .map(|j| {
            let t = (j as f64 + 0.5) * dt;
            epsilon0 * shape_function_kind(kind, t, total_time) * (omega * t).cos()
        })
        .collect();
    ControlField::new(samples, total_time)
}
