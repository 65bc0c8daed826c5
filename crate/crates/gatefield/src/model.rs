//! The two-electronic-surface level system driven by one control field.
//!
//! The model is a ground manifold of `M_g` vibrational levels and an excited
//! manifold of `M_e` levels offset by the electronic gap Ω, coupled only
//! across the surfaces by a transition dipole whose matrix elements are
//! Franck–Condon overlaps scaled by μ₀. The Hamiltonian under a field sample
//! ε is `H(ε) = H₀ − μ̂·ε` with diagonal `H₀` (atomic units, ħ = 1
//! throughout).
//!
//! Both vibrational ladders use a weakly anharmonic surrogate spectrum
//! `E_n = ω(n−1) − x(n−1)²`: non-degenerate spacings and pairwise-distinct
//! couplings are what matter for gate synthesis, not any specific molecule's
//! level data.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::franck_condon::franck_condon_dipole;
use crate::linalg::{CMatrix, Operator};

/// Anharmonic ladder parameters for the two surfaces (atomic units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSpectrum {
    pub omega_g: f64,
    pub x_g: f64,
    pub omega_e: f64,
    pub x_e: f64,
}

/// Immutable system description used by propagation and optimization.
#[derive(Debug, Clone)]
pub struct SystemModel {
    ground_energies: Vec<f64>,
    excited_energies: Vec<f64>,
    /// μ₀·⟨g_i|e_j⟩, shape `(M_g, M_e)`; the only nonzero dipole block.
    dipole_cross: Array2<f64>,
    mu0: f64,
    subspace_dim: usize,
    controllability_warning: Option<String>,
}

impl SystemModel {
    /// General constructor from explicit parts. `dipole_cross` must already
    /// include the μ₀ scale; `mu0` is kept for intensity bookkeeping.
    pub fn from_parts(
        ground_energies: Vec<f64>,
        excited_energies: Vec<f64>,
        dipole_cross: Array2<f64>,
        mu0: f64,
        subspace_dim: usize,
    ) -> Result<Self> {
        if ground_energies.is_empty() {
            return Err(Error::Validation("model needs at least one ground level".into()));
        }
        let m_g = ground_energies.len();
        let m_e = excited_energies.len();
        if dipole_cross.dim() != (m_g, m_e) {
            return Err(Error::Validation(format!(
                "dipole cross block must be {}x{}, got {}x{}",
                m_g,
                m_e,
                dipole_cross.nrows(),
                dipole_cross.ncols()
            )));
        }
        for (label, energies) in [("ground", &ground_energies), ("excited", &excited_energies)] {
            if energies.iter().any(|e| !e.is_finite()) {
                return Err(Error::Validation(format!("{label} energies contain non-finite values")));
            }
            for w in energies.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::Validation(format!(
                        "{label} energies must be strictly increasing; got {} then {}",
                        w[0], w[1]
                    )));
                }
            }
        }
        if dipole_cross.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("dipole entries must be finite".into()));
        }
        if subspace_dim == 0 {
            return Err(Error::Validation("computational subspace must be non-empty".into()));
        }
        if subspace_dim > m_g {
            return Err(Error::Validation(format!(
                "computational subspace dimension {subspace_dim} exceeds the {m_g} ground levels"
            )));
        }
        Ok(SystemModel {
            ground_energies,
            excited_energies,
            dipole_cross,
            mu0,
            subspace_dim,
            controllability_warning: None,
        })
    }

    pub fn m_g(&self) -> usize {
        self.ground_energies.len()
    }

    pub fn m_e(&self) -> usize {
        self.excited_energies.len()
    }

    /// Total level count M = M_g + M_e.
    pub fn dim(&self) -> usize {
        self.m_g() + self.m_e()
    }

    /// N: dimension of the computational block (first N ground levels).
    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn ground_energies(&self) -> &[f64] {
        &self.ground_energies
    }

    pub fn excited_energies(&self) -> &[f64] {
        &self.excited_energies
    }

    /// All M level energies, ground ladder first.
    pub fn energies(&self) -> Vec<f64> {
        let mut e = self.ground_energies.clone();
        e.extend_from_slice(&self.excited_energies);
        e
    }

    /// The μ₀-scaled cross block of the dipole operator.
    pub fn dipole_cross(&self) -> &Array2<f64> {
        &self.dipole_cross
    }

    /// Set if the couplings are degenerate (all Franck–Condon factors
    /// diagonal), which leaves most targets unreachable.
    pub fn controllability_warning(&self) -> Option<&str> {
        self.controllability_warning.as_deref()
    }

    /// Full M×M real symmetric dipole matrix (zero intra-surface blocks).
    pub fn dipole_matrix(&self) -> Array2<f64> {
        let (m_g, m_e) = (self.m_g(), self.m_e());
        let m = m_g + m_e;
        let mut mu = Array2::<f64>::zeros((m, m));
        for i in 0..m_g {
            for j in 0..m_e {
                mu[[i, m_g + j]] = self.dipole_cross[[i, j]];
                mu[[m_g + j, i]] = self.dipole_cross[[i, j]];
            }
        }
        mu
    }

    /// `H(ε) = H₀ − μ̂ ε` as a (Hermitian) complex operator.
    pub fn hamiltonian(&self, field_sample: f64) -> Result<Operator> {
        if !field_sample.is_finite() {
            return Err(Error::Numeric(format!(
                "field sample must be finite, got {field_sample}"
            )));
        }
        let m = self.dim();
        let mut h = CMatrix::zeros((m, m));
        for (i, e) in self.energies().iter().enumerate() {
            h[[i, i]] = C64::new(*e, 0.0);
        }
        let mu = self.dipole_matrix();
        for i in 0..m {
            for j in 0..m {
                h[[i, j]] -= C64::new(field_sample * mu[[i, j]], 0.0);
            }
        }
        Operator::new(h)
    }
}

/// Build the default-style model: two anharmonic ladders separated by the
/// electronic gap `omega_00`, dipole-coupled through Franck–Condon overlaps
/// with displacement `d` and frequency ratio ρ = ω_e/ω_g, scaled by μ₀.
pub fn build_two_surface_model(
    m_g: usize,
    m_e: usize,
    omega_00: f64,
    spectrum: &SurfaceSpectrum,
    displacement: f64,
    mu0: f64,
    subspace_dim: usize,
) -> Result<SystemModel> {
    if m_g < 1 || m_e < 1 {
        return Err(Error::Validation(
            "both surfaces need at least one level".into(),
        ));
    }
    if !(omega_00 > 0.0) {
        return Err(Error::Validation(format!(
            "electronic gap omega_00 must be > 0, got {omega_00}"
        )));
    }
    if spectrum.omega_g <= 0.0 || spectrum.omega_e <= 0.0 {
        return Err(Error::Validation(
            "surface frequencies must be positive".into(),
        ));
    }

    let ladder = |k: usize, omega: f64, x: f64| {
        let n = k as f64;
        omega * n - x * n * n
    };
    let ground: Vec<f64> = (0..m_g).map(|k| ladder(k, spectrum.omega_g, spectrum.x_g)).collect();
    let excited: Vec<f64> = (0..m_e)
        .map(|k| omega_00 + ladder(k, spectrum.omega_e, spectrum.x_e))
        .collect();

    for (label, energies) in [("ground", &ground), ("excited", &excited)] {
        for w in energies.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Validation(format!(
                    "anharmonicity makes the {label} ladder non-monotone within the requested range; \
                     reduce the level count or the anharmonicity"
                )));
            }
        }
    }

    let ratio = spectrum.omega_e / spectrum.omega_g;
    let fc = franck_condon_dipole(m_g, m_e, displacement, ratio)?;
    let dipole_cross = fc.mapv(|v| mu0 * v);

    let mut model = SystemModel::from_parts(ground, excited, dipole_cross, mu0, subspace_dim)?;
    if displacement == 0.0 && (ratio - 1.0).abs() < 1e-12 {
        model.controllability_warning = Some(
            "degenerate couplings: displacement 0 with equal frequencies makes all \
             Franck-Condon factors diagonal, so transitions cannot be addressed individually"
                .to_string(),
        );
    }
    Ok(model)
}

/// Average free-evolution phase over M levels: `φ₁ = Σ_m E_m · T / M` (ħ=1).
///
/// The physically irrelevant global phase of the evolved gate relative to the
/// target; compensated summation keeps it reproducible to the last digit for
/// comparisons against high-precision references.
pub fn global_phase_phi1(energies: &[f64], total_time: f64) -> f64 {
    if energies.is_empty() {
        return 0.0;
    }
    // Kahan summation.
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &e in energies {
        let y = e - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum * total_time / energies.len() as f64
}
