//! Post-processing of control fields: integrated intensity, field energy,
//! discrete spectra, and the iteration-count scaling fit.
//!
//! The integrated intensity 𝓘 = ∫|μ₀ε(t)|dt is the resource figure of merit
//! for a pulse — a proxy for the accumulated Rabi angle and hence for the
//! number of interference pathways the field can exploit. The scaling fit
//! captures how the iteration count needed to reach a fidelity |f| grows
//! with the transformation size: N_it ≈ b·e^{N|f|/a} with a, b > 0.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::field::ControlField;

/// Integrated intensity `Σ_j |μ₀ ε(t_j)| Δt` (rectangle rule on the field
/// grid).
pub fn integrated_intensity(field: &ControlField, mu0: f64) -> f64 {
    let sum: f64 = field.samples().iter().map(|e| (mu0 * e).abs()).sum();
    sum * field.dt()
}

/// Field energy `Σ_j ε(t_j)² Δt`.
pub fn field_energy(field: &ControlField) -> f64 {
    let sum: f64 = field.samples().iter().map(|e| e * e).sum();
    sum * field.dt()
}

/// One bin of a field spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Angular frequency of bin k: `2πk/T`.
    pub frequency: f64,
    /// Unnormalized DFT magnitude `|Σ_j ε_j e^{−2πi jk/N_t}|`.
    pub magnitude: f64,
}

/// Discrete Fourier transform magnitudes of the field samples, no windowing.
/// All `N_t` bins are returned; for the real-valued field the upper half
/// mirrors the lower (`|ε̂_k| = |ε̂_{N−k}|`). Satisfies Parseval's identity
/// `Σ_j ε_j² = (1/N_t)·Σ_k |ε̂_k|²`.
pub fn field_spectrum(field: &ControlField) -> Vec<SpectrumPoint> {
    let n = field.n_steps();
    let mut buffer: Vec<C64> = field.samples().iter().map(|&e| C64::new(e, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let bin_width = 2.0 * std::f64::consts::PI / field.total_time();
    buffer
        .iter()
        .enumerate()
        .map(|(k, z)| SpectrumPoint {
            frequency: bin_width * k as f64,
            magnitude: z.norm(),
        })
        .collect()
}

/// One measurement for the scaling fit: a transformation over `levels = 2^Q`
/// states reached fidelity magnitude `|f|` after `iterations` sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub levels: f64,
    pub fidelity_magnitude: f64,
    pub iterations: f64,
}

/// Least-squares fit of `ln N_it = ln b + N|f|/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// Fidelity digits bought per unit of N — larger means cheaper scaling.
    pub a: f64,
    /// Iteration-count prefactor.
    pub b: f64,
    /// Largest |ln N_it − ln N̂_it| over the fitted points.
    pub residual: f64,
    pub points: Vec<ScalingPoint>,
}

impl ScalingFit {
    /// Model prediction `b·e^{N|f|/a}`.
    pub fn predicted_iterations(&self, levels: f64, fidelity_magnitude: f64) -> f64 {
        self.b * (levels * fidelity_magnitude / self.a).exp()
    }
}

/// Fit `ln N_it = ln b + N|f|/a` over the given points by least squares in
/// `x = N·|f|`. Needs at least two points with distinct `x`; a non-positive
/// slope (iteration counts not growing with N·|f|) cannot be expressed as
/// positive `a` and is reported as a fit error.
pub fn fit_scaling_law(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    for p in points {
        let ok = p.levels.is_finite()
            && p.levels > 0.0
            && p.fidelity_magnitude.is_finite()
            && p.fidelity_magnitude >= 0.0
            && p.iterations.is_finite()
            && p.iterations > 0.0;
        if !ok {
            return Err(Error::Fit(format!(
                "invalid point (N={}, |f|={}, N_it={})",
                p.levels, p.fidelity_magnitude, p.iterations
            )));
        }
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|p| p.levels * p.fidelity_magnitude)
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.iterations.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let x_scale = xs.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    if sxx <= 1e-24 * x_scale * x_scale {
        return Err(Error::Fit(
            "all points share the same N·|f|; the slope is undetermined".into(),
        ));
    }
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::Fit(format!(
            "fitted slope {slope:.3e} is not positive; iteration counts do not grow with N·|f|"
        )));
    }
    let intercept = mean_y - slope * mean_x;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (intercept + slope * x - y).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        a: 1.0 / slope,
        b: intercept.exp(),
        residual,
        points: points.to_vec(),
    })
}
