//! Franck–Condon overlaps between the vibrational ladders of two harmonic
//! surfaces with different frequencies and displaced minima.
//!
//! Entry `(i, j)` is `⟨g_i | e_j⟩`: the overlap of eigenstate `i` of the
//! ground oscillator (frequency ω_g, minimum at 0) with eigenstate `j` of the
//! excited oscillator (frequency ω_e = ρ·ω_g, minimum at `d` in ground-
//! oscillator length units). These overlaps set the relative strength of
//! every optical transition between the surfaces, so for generic `d` and `ρ`
//! each transition is distinct — the property that makes the level scheme
//! controllable.
//!
//! The table is filled by two exact recurrences obtained from expressing the
//! excited-surface ladder operator in terms of the ground-surface one,
//! `b = σ⁺ a + σ⁻ a† − √ρ d/√2` with `σ± = (ρ ± 1)/(2√ρ)`, seeded by the
//! closed-form Gaussian overlap `S(0,0)`. Both recurrences divide by
//! `√(index+1)`, so roundoff is damped rather than amplified; a quadrature
//! oracle cross-checks the construction in the tests.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Overlap matrix `S(i,j) = ⟨g_i|e_j⟩`, `i < m_g`, `j < m_e`.
///
/// `displacement` is in the ground oscillator's natural length unit;
/// `ratio` is ω_e/ω_g.
pub fn franck_condon_dipole(
    m_g: usize,
    m_e: usize,
    displacement: f64,
    ratio: f64,
) -> Result<Array2<f64>> {
    if m_g == 0 || m_e == 0 {
        return Err(Error::Validation(
            "franck_condon_dipole requires at least one level per surface".into(),
        ));
    }
    if displacement < 0.0 || !displacement.is_finite() {
        return Err(Error::Validation(format!(
            "displacement must be finite and >= 0, got {displacement}"
        )));
    }
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(Error::Validation(format!(
            "frequency ratio must be finite and > 0, got {ratio}"
        )));
    }

    let rho = ratio;
    let sig_p = (rho + 1.0) / (2.0 * rho.sqrt());
    let sig_m = (rho - 1.0) / (2.0 * rho.sqrt());
    let shift = rho.sqrt() * displacement / std::f64::consts::SQRT_2;

    // Column j+1 consumes row i+1 of column j, so the working table keeps
    // m_e extra rows beyond the m_g that are returned.
    let rows = m_g + m_e + 2;
    let mut table = Array2::<f64>::zeros((rows, m_e));

    // S(0,0): overlap of the two Gaussian ground states.
    table[[0, 0]] = (2.0 * rho.sqrt() / (1.0 + rho)).sqrt()
        * (-rho * displacement * displacement / (2.0 * (1.0 + rho))).exp();

    // Column 0, upward in i:  σ⁺√(i+1)·S(i+1,0) = shift·S(i,0) − σ⁻√i·S(i−1,0).
    for i in 0..rows - 1 {
        let prev = if i == 0 { 0.0 } else { table[[i - 1, 0]] };
        table[[i + 1, 0]] =
            (shift * table[[i, 0]] - sig_m * (i as f64).sqrt() * prev) / (sig_p * ((i + 1) as f64).sqrt());
    }

    // Column j+1 from column j:
    //   √(j+1)·S(i,j+1) = σ⁺√i·S(i−1,j) + σ⁻√(i+1)·S(i+1,j) − shift·S(i,j).
    for j in 0..m_e.saturating_sub(1) {
        let valid_rows = rows - 1 - j;
        for i in 0..valid_rows {
            let below = if i == 0 { 0.0 } else { table[[i - 1, j]] };
            let above = table[[i + 1, j]];
            table[[i, j + 1]] = (sig_p * (i as f64).sqrt() * below
                + sig_m * ((i + 1) as f64).sqrt() * above
                - shift * table[[i, j]])
                / ((j + 1) as f64).sqrt();
        }
    }

    let out = table.slice(ndarray::s![..m_g, ..]).to_owned();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "Franck-Condon recurrence overflowed; requested ladder too deep for these parameters"
                .into(),
        ));
    }
    Ok(out)
}
