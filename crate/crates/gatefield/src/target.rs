//! Target gates on the computational block.
//!
//! A target is an N×N unitary acting on the first N ground-surface levels.
//! Its extension to the full M-level space is block-diagonal with the
//! identity on the remaining M−N levels: the gate never populates spurious
//! levels at the final time, although the optimizer is free to route
//! amplitude through them at intermediate times.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Unitarity defect allowed for a target gate (tighter than generic
/// propagator wrappers: targets are constructed analytically).
pub const TARGET_UNITARITY_TOL: f64 = 1e-12;

/// N×N unitary gate on the computational block.
#[derive(Debug, Clone)]
pub struct TargetGate {
    block: CMatrix,
}

impl TargetGate {
    pub fn new(block: CMatrix) -> Result<Self> {
        if block.nrows() != block.ncols() || block.nrows() == 0 {
            return Err(Error::Validation(format!(
                "target block must be square and non-empty, got {}x{}",
                block.nrows(),
                block.ncols()
            )));
        }
        let defect = crate::linalg::unitarity_error(&block);
        if defect > TARGET_UNITARITY_TOL {
            return Err(Error::Validation(format!(
                "target block is not unitary: defect {defect:.3e} > {TARGET_UNITARITY_TOL:.1e}"
            )));
        }
        Ok(TargetGate { block })
    }

    pub fn identity(n: usize) -> Self {
        TargetGate {
            block: CMatrix::eye(n),
        }
    }

    /// N: dimension of the computational block.
    pub fn dim(&self) -> usize {
        self.block.nrows()
    }

    pub fn block(&self) -> &CMatrix {
        &self.block
    }

    /// M×M extension: the gate on the block, identity elsewhere.
    pub fn embed(&self, m: usize) -> Result<CMatrix> {
        let n = self.dim();
        if m < n {
            return Err(Error::Validation(format!(
                "cannot embed {n}-dim target into {m}-dim space"
            )));
        }
        let mut full = CMatrix::eye(m);
        for i in 0..n {
            for j in 0..n {
                full[[i, j]] = self.block[[i, j]];
            }
        }
        Ok(full)
    }

    /// Apply the embedded gate to an M-dim vector without materializing the
    /// M×M matrix: block action on the first N amplitudes, identity on the
    /// rest.
    pub fn apply_embedded(&self, v: &CVector) -> Result<CVector> {
        let n = self.dim();
        if v.len() < n {
            return Err(Error::Validation(format!(
                "vector dimension {} smaller than target block {n}",
                v.len()
            )));
        }
        let mut out = v.clone();
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.block[[i, j]] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }
}

/// Discrete-Fourier-transform gate on Q qubits:
/// `O_jk = exp(2πi·jk/N)/√N` (0-based indices), N = 2^Q.
pub fn build_qft_target(qubits: u32) -> Result<TargetGate> {
    if qubits < 1 {
        return Err(Error::Validation("qubit count must be at least 1".into()));
    }
    if qubits > 6 {
        return Err(Error::Validation(format!(
            "qubit count {qubits} too large; registers beyond 6 qubits exceed the level budget"
        )));
    }
    let n = 1usize << qubits;
    let norm = 1.0 / (n as f64).sqrt();
    let mut block = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            // Reduce the phase index mod N before multiplying by 2π/N so the
            // angle stays small and full precision is kept.
            let phase_index = (j * k) % n;
            let angle = 2.0 * std::f64::consts::PI * phase_index as f64 / n as f64;
            block[[j, k]] = C64::new(angle.cos(), angle.sin()) * norm;
        }
    }
    TargetGate::new(block)
}
