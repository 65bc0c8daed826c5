//! Flat split-complex state blocks and the dense inner loops of the
//! propagation and field-update passes.
//!
//! A block holds K states of dimension M in two `Vec<f64>` (real and
//! imaginary parts) laid out `[level-major][state-minor]`, so the innermost
//! loops run contiguously over the K states for a fixed matrix entry. Step
//! unitaries for a real-symmetric Hamiltonian factor as `U = C − iS` with
//! `C = cos(HΔt)` and `S = sin(HΔt)` both real symmetric; applying the
//! adjoint `U† = C + iS` with the same two arrays makes the backward step
//! the exact adjoint of the forward step.

use num_complex::Complex64 as C64;

use crate::basis::{BasisFlavor, StateSet};
use crate::error::{Error, Result};
use crate::linalg::CVector;

/// K states of dimension M, split into real and imaginary parts with
/// `[level][state]` layout: entry (m, k) lives at `m*count + k`.
#[derive(Debug, Clone)]
pub(crate) struct SplitStates {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    dim: usize,
    count: usize,
}

impl SplitStates {
    pub fn zeros(dim: usize, count: usize) -> Self {
        SplitStates {
            re: vec![0.0; dim * count],
            im: vec![0.0; dim * count],
            dim,
            count,
        }
    }

    pub fn from_state_set(set: &StateSet) -> Self {
        let (dim, count) = (set.dim(), set.len());
        let mut block = SplitStates::zeros(dim, count);
        for (k, member) in set.members().iter().enumerate() {
            for m in 0..dim {
                block.re[m * count + k] = member[m].re;
                block.im[m * count + k] = member[m].im;
            }
        }
        block
    }

    pub fn column(&self, k: usize) -> CVector {
        CVector::from_iter(
            (0..self.dim).map(|m| C64::new(self.re[m * self.count + k], self.im[m * self.count + k])),
        )
    }

    pub fn to_state_set(&self, flavor: BasisFlavor) -> Result<StateSet> {
        StateSet::new((0..self.count).map(|k| self.column(k)).collect(), flavor)
    }

    pub fn copy_from(&mut self, other: &SplitStates) {
        debug_assert_eq!(self.dim, other.dim);
        debug_assert_eq!(self.count, other.count);
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }

    pub fn store_into(&self, re_dst: &mut [f64], im_dst: &mut [f64]) {
        re_dst.copy_from_slice(&self.re);
        im_dst.copy_from_slice(&self.im);
    }

    /// Per-state squared norms, accumulated row-contiguously.
    pub fn norms_sq_into(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count);
        out.fill(0.0);
        for (re_row, im_row) in self
            .re
            .chunks_exact(self.count)
            .zip(self.im.chunks_exact(self.count))
        {
            for ((acc, r), i) in out.iter_mut().zip(re_row).zip(im_row) {
                *acc += r * r + i * i;
            }
        }
    }

    /// Largest deviation of any state norm from the given reference norms.
    pub fn max_norm_deviation(&self, reference: &[f64], scratch: &mut [f64]) -> f64 {
        self.norms_sq_into(scratch);
        scratch
            .iter()
            .zip(reference)
            .map(|(n2, r)| (n2.sqrt() - r).abs() / r.max(1e-300))
            .fold(0.0, f64::max)
    }

    /// Scale state k by a complex factor.
    pub fn scale_column(&mut self, k: usize, factor: C64) {
        for m in 0..self.dim {
            let idx = m * self.count + k;
            let (re, im) = (self.re[idx], self.im[idx]);
            self.re[idx] = factor.re * re - factor.im * im;
            self.im[idx] = factor.re * im + factor.im * re;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().all(|x| x.is_finite()) && self.im.iter().all(|x| x.is_finite())
    }
}

/// Apply `C − iS` (forward) or its adjoint `C + iS` (backward) to a block:
/// `sign = +1` forward, `−1` backward.
pub(crate) fn apply_step_pair(
    cos_part: &[f64],
    sin_part: &[f64],
    sign: f64,
    input: &SplitStates,
    output: &mut SplitStates,
) {
    let (m, k) = (input.dim, input.count);
    debug_assert_eq!(cos_part.len(), m * m);
    debug_assert_eq!(sin_part.len(), m * m);
    debug_assert_eq!(output.dim, m);
    debug_assert_eq!(output.count, k);
    for (i, (out_re_row, out_im_row)) in output
        .re
        .chunks_exact_mut(k)
        .zip(output.im.chunks_exact_mut(k))
        .enumerate()
    {
        out_re_row.fill(0.0);
        out_im_row.fill(0.0);
        let c_row = &cos_part[i * m..(i + 1) * m];
        let s_row = &sin_part[i * m..(i + 1) * m];
        for (j, (&c, &s)) in c_row.iter().zip(s_row).enumerate() {
            let s = sign * s;
            let in_re_row = &input.re[j * k..(j + 1) * k];
            let in_im_row = &input.im[j * k..(j + 1) * k];
            for t in 0..k {
                out_re_row[t] += c * in_re_row[t] + s * in_im_row[t];
                out_im_row[t] += c * in_im_row[t] - s * in_re_row[t];
            }
        }
    }
}

/// Apply a real matrix entrywise to both parts of a block: `y = A·v`.
pub(crate) fn apply_real_matrix(matrix: &[f64], input: &SplitStates, output: &mut SplitStates) {
    let (m, k) = (input.dim, input.count);
    debug_assert_eq!(matrix.len(), m * m);
    for (i, (out_re_row, out_im_row)) in output
        .re
        .chunks_exact_mut(k)
        .zip(output.im.chunks_exact_mut(k))
        .enumerate()
    {
        out_re_row.fill(0.0);
        out_im_row.fill(0.0);
        let a_row = &matrix[i * m..(i + 1) * m];
        for (j, &a) in a_row.iter().enumerate() {
            let in_re_row = &input.re[j * k..(j + 1) * k];
            let in_im_row = &input.im[j * k..(j + 1) * k];
            for t in 0..k {
                out_re_row[t] += a * in_re_row[t];
                out_im_row[t] += a * in_im_row[t];
            }
        }
    }
}

/// `Σ_{m,k} Im[ conj(χ_{mk}) · y_{mk} ]` with χ given as raw slices over the
/// same layout as the block.
pub(crate) fn imag_inner_sum(chi_re: &[f64], chi_im: &[f64], y: &SplitStates) -> f64 {
    debug_assert_eq!(chi_re.len(), y.re.len());
    let mut acc = 0.0;
    for (((cr, ci), yr), yi) in chi_re.iter().zip(chi_im).zip(&y.re).zip(&y.im) {
        // Im[(cr − i·ci)(yr + i·yi)] = cr·yi − ci·yr
        acc += cr * yi - ci * yr;
    }
    acc
}

/// Non-finite propagation guard with the offending step named.
pub(crate) fn check_finite_step(block: &SplitStates, step: usize) -> Result<()> {
    if block.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "propagated states became non-finite at step {step}"
        )))
    }
}
