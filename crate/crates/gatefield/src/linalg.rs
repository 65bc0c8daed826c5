//! Dense complex linear algebra: operator/unitary wrappers and the matrix
//! exponential used to build one-step propagators.
//!
//! Matrices are small (tens of levels), so everything here is dense and
//! allocation is not a concern. The hot per-step kernels live elsewhere; this
//! module is the accuracy reference.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CVector = Array1<C64>;
pub type CMatrix = Array2<C64>;

/// Max absolute entry of `m`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max absolute entrywise difference between two matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Max entrywise deviation from `M = M†`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &adjoint(m))
}

/// Max entrywise deviation from `G = −G†`.
pub fn anti_hermiticity_error(g: &CMatrix) -> f64 {
    let neg_adj = adjoint(g).mapv(|z| -z);
    max_abs_diff(g, &neg_adj)
}

/// Max entrywise deviation of `U†U` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let prod = adjoint(u).dot(u);
    let n = u.nrows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            err = err.max((prod[[i, j]] - expected).norm());
        }
    }
    err
}

/// Euclidean norm of a complex vector.
pub fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product `⟨a|b⟩` (conjugate-linear in the first argument).
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Tolerance below which a constructed operator is flagged Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Unitarity defect allowed when wrapping a matrix as [`UnitaryMatrix`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// Dense complex matrix tagged with whether it is Hermitian.
///
/// The flag is measured from the entries at construction (relative to the
/// largest entry), so it can never disagree with the data.
#[derive(Debug, Clone)]
pub struct Operator {
    entries: CMatrix,
    hermitian: bool,
}

impl Operator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Validation(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("operator has non-finite entries".into()));
        }
        let scale = max_abs(&entries).max(1.0);
        let hermitian = hermiticity_error(&entries) <= HERMITICITY_TOL * scale;
        Ok(Operator { entries, hermitian })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `O |v⟩`.
    pub fn apply(&self, v: &CVector) -> CVector {
        self.entries.dot(v)
    }
}

/// Dense complex matrix validated unitary at construction
/// (`‖U†U − 1‖_max ≤ 1e-10`).
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    entries: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Validation(format!(
                "unitary must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let defect = unitarity_error(&entries);
        if defect > UNITARITY_TOL {
            return Err(Error::Numeric(format!(
                "matrix fails unitarity check: defect {defect:.3e} > {UNITARITY_TOL:.1e}"
            )));
        }
        Ok(UnitaryMatrix { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        // Adjoint of a unitary is unitary to the same defect; skip re-checking.
        UnitaryMatrix {
            entries: adjoint(&self.entries),
        }
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        self.entries.dot(v)
    }
}

/// Unitarity defect required of `matrix_exponential` output.
const EXP_UNITARITY_TOL: f64 = 1e-12;

/// `exp(G)` for an anti-Hermitian generator `G`, by scaling and squaring with
/// a degree-18 Taylor evaluation of the scaled matrix.
///
/// The scaled norm is held below 1/2, where the degree-18 truncation error
/// (~1.6e-23) is far beneath double rounding; repeated squaring of a unitary
/// is perfectly conditioned. The result is checked unitary to 1e-12.
pub fn matrix_exponential(generator: &CMatrix) -> Result<UnitaryMatrix> {
    let n = generator.nrows();
    if generator.ncols() != n {
        return Err(Error::Validation(format!(
            "generator must be square, got {}x{}",
            n,
            generator.ncols()
        )));
    }
    let scale = max_abs(generator).max(1.0);
    let mut defect = 0.0f64;
    let mut worst = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            let d = (generator[[i, j]] + generator[[j, i]].conj()).norm();
            if d > defect {
                defect = d;
                worst = (i, j);
            }
        }
    }
    if defect > 1e-10 * scale {
        return Err(Error::Validation(format!(
            "generator is not anti-Hermitian: entry ({},{}) violates G = -G† by {defect:.3e}",
            worst.0, worst.1
        )));
    }

    // 1-norm (max column sum) controls the Taylor remainder bound.
    let mut one_norm = 0.0f64;
    for j in 0..n {
        let col_sum: f64 = generator.column(j).iter().map(|z| z.norm()).sum();
        one_norm = one_norm.max(col_sum);
    }

    let squarings = if one_norm <= 0.5 {
        0
    } else {
        (one_norm / 0.5).log2().ceil() as u32
    };
    let factor = C64::new(0.5f64.powi(squarings as i32), 0.0);
    let scaled = generator.mapv(|z| z * factor);

    // Horner evaluation of sum_{k<=18} B^k / k!.
    let eye = CMatrix::eye(n);
    let mut result = eye.clone();
    for k in (1..=18u32).rev() {
        let prod = scaled.dot(&result);
        result = &eye + &prod.mapv(|z| z / k as f64);
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }

    let defect = unitarity_error(&result);
    if defect > EXP_UNITARITY_TOL {
        return Err(Error::Numeric(format!(
            "exponential lost unitarity: defect {defect:.3e} > {EXP_UNITARITY_TOL:.1e}"
        )));
    }
    Ok(UnitaryMatrix { entries: result })
}
