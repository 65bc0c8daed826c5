//! Gate functionals, fidelity, and the per-state coefficients entering the
//! field update.
//!
//! Everything is built from final-time overlaps of propagated states with
//! target states. The complex trace overlap
//! `τ = Σ_n ⟨φ_fn|φ_n(T)⟩` satisfies `|τ| ≤ N`, with equality exactly when
//! the evolution implements the gate up to a global phase. Three objectives
//! are supported:
//!
//! - `re`:  F = −Re τ       (phase-sensitive; drives the global phase to ±1)
//! - `sm`:  F = −|τ|²       (phase-insensitive; the workhorse)
//! - `ss`:  F = −Σ_l |⟨φ_fl|φ_l(T)⟩|²  (sum of per-transition probabilities;
//!   meaningful only with the ss-basis, and a documented pitfall with a
//!   plain orthonormal basis)
//!
//! The Krotov update weights each state's dipole matrix element by a
//! coefficient `a_k` fixed from the *previous* iteration's endpoints; the
//! three functionals differ only through these coefficients.

use num_complex::Complex64 as C64;

use crate::basis::{BasisFlavor, StateSet};
use crate::error::{Error, Result};
use crate::linalg::inner;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    Re,
    Sm,
    Ss,
}

impl FunctionalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FunctionalKind::Re => "re",
            FunctionalKind::Sm => "sm",
            FunctionalKind::Ss => "ss",
        }
    }

    /// Denominator of the normalized objective J_norm.
    pub fn normalization(&self, n: usize) -> f64 {
        match self {
            FunctionalKind::Re | FunctionalKind::Ss => n as f64,
            FunctionalKind::Sm => (n as f64) * (n as f64),
        }
    }

    /// Flavors the functional is defined over.
    pub fn accepts_flavor(&self, flavor: BasisFlavor) -> bool {
        match self {
            FunctionalKind::Re | FunctionalKind::Sm => flavor == BasisFlavor::CanonicalBasis,
            FunctionalKind::Ss => {
                flavor == BasisFlavor::SsBasis || flavor == BasisFlavor::OrthonormalLBasis
            }
        }
    }

    /// Default basis prescription for each functional.
    pub fn default_flavor(&self) -> BasisFlavor {
        match self {
            FunctionalKind::Re | FunctionalKind::Sm => BasisFlavor::CanonicalBasis,
            FunctionalKind::Ss => BasisFlavor::SsBasis,
        }
    }
}

impl std::str::FromStr for FunctionalKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "re" => Ok(FunctionalKind::Re),
            "sm" => Ok(FunctionalKind::Sm),
            "ss" => Ok(FunctionalKind::Ss),
            other => Err(format!(
                "unknown functional `{other}` (expected `re`, `sm`, or `ss`)"
            )),
        }
    }
}

/// The complex trace overlap τ together with the block dimension N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauValue {
    value: C64,
    subspace_dim: usize,
}

/// Slack on the |τ| ≤ N bound to absorb propagation roundoff.
pub const TAU_BOUND_SLACK: f64 = 1e-9;

impl TauValue {
    pub fn new(value: C64, subspace_dim: usize) -> Result<Self> {
        if subspace_dim == 0 {
            return Err(Error::Validation("τ needs a non-empty subspace".into()));
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Numeric("τ is not finite".into()));
        }
        let bound = subspace_dim as f64 + TAU_BOUND_SLACK;
        if value.norm() > bound {
            return Err(Error::Numeric(format!(
                "|τ| = {} exceeds the dimension bound {}",
                value.norm(),
                subspace_dim
            )));
        }
        Ok(TauValue {
            value,
            subspace_dim,
        })
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace_dim
    }
}

/// Objective value together with its normalized form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub kind: FunctionalKind,
    pub value: f64,
    pub normalized: f64,
}

impl ObjectiveValue {
    fn new(kind: FunctionalKind, value: f64, n: usize) -> Self {
        ObjectiveValue {
            kind,
            value,
            normalized: value / kind.normalization(n),
        }
    }
}

/// `τ = Σ_n ⟨φ_fn | φ_n(T)⟩` over canonical-basis endpoint/target pairs.
pub fn tau(final_states: &StateSet, target_states: &StateSet) -> Result<TauValue> {
    if final_states.len() != target_states.len() {
        return Err(Error::Validation(format!(
            "state-set size mismatch: {} final vs {} target",
            final_states.len(),
            target_states.len()
        )));
    }
    if final_states.dim() != target_states.dim() {
        return Err(Error::Validation(format!(
            "state dimension mismatch: {} final vs {} target",
            final_states.dim(),
            target_states.dim()
        )));
    }
    if final_states.flavor() != BasisFlavor::CanonicalBasis
        || target_states.flavor() != BasisFlavor::CanonicalBasis
    {
        return Err(Error::Validation(
            "τ is defined over canonical-basis state sets".into(),
        ));
    }
    let value: C64 = final_states
        .members()
        .iter()
        .zip(target_states.members())
        .map(|(fin, tgt)| inner(tgt, fin))
        .sum();
    TauValue::new(value, final_states.len())
}

/// `F_re = −Re τ`.
pub fn f_re(tau: &TauValue) -> ObjectiveValue {
    ObjectiveValue::new(FunctionalKind::Re, -tau.value().re, tau.subspace_dim())
}

/// `F_sm = −|τ|²`.
pub fn f_sm(tau: &TauValue) -> ObjectiveValue {
    ObjectiveValue::new(FunctionalKind::Sm, -tau.value().norm_sqr(), tau.subspace_dim())
}

/// `F_ss = −Σ_l |⟨φ_fl|φ_l(T)⟩|²` over an l-basis (ss-basis, or the
/// orthonormal pitfall basis).
pub fn f_ss(final_states: &StateSet, target_states: &StateSet) -> Result<ObjectiveValue> {
    if final_states.len() != target_states.len() || final_states.dim() != target_states.dim() {
        return Err(Error::Validation(
            "state-set shape mismatch in state-to-state objective".into(),
        ));
    }
    if !FunctionalKind::Ss.accepts_flavor(final_states.flavor()) {
        return Err(Error::Validation(format!(
            "state-to-state objective needs ss-basis or orthonormal-lbasis states, got {}",
            final_states.flavor().as_str()
        )));
    }
    let value: f64 = final_states
        .members()
        .iter()
        .zip(target_states.members())
        .map(|(fin, tgt)| inner(tgt, fin).norm_sqr())
        .sum();
    Ok(ObjectiveValue::new(
        FunctionalKind::Ss,
        -value,
        final_states.len(),
    ))
}

/// Floor of the fidelity argument: `1 − |τ|²/N²` rounds into noise near
/// convergence, so it is clamped at 1e-16 (fidelity bounded at −16).
pub const FIDELITY_CLAMP: f64 = 1e-16;

/// `log₁₀(1 − |τ|²/N²)`, clamped below at −16. More negative is better.
pub fn fidelity_log10(tau: &TauValue) -> f64 {
    let n = tau.subspace_dim() as f64;
    let arg = 1.0 - tau.value().norm_sqr() / (n * n);
    arg.max(FIDELITY_CLAMP).log10()
}

/// Per-state update coefficients `a_k`, frozen from the old iteration's
/// endpoint states:
///
/// - `re`: 1/2 for every state;
/// - `sm`: conj(τ under the old field), identical for every state;
/// - `ss`: per-state conjugated overlap `⟨φ_fl|φ_l(T)⟩*`.
pub fn coefficients_a(
    kind: FunctionalKind,
    old_final_states: &StateSet,
    target_states: &StateSet,
) -> Result<Vec<C64>> {
    if old_final_states.len() != target_states.len()
        || old_final_states.dim() != target_states.dim()
    {
        return Err(Error::Validation(
            "state-set shape mismatch in coefficient evaluation".into(),
        ));
    }
    if !kind.accepts_flavor(old_final_states.flavor()) {
        return Err(Error::Validation(format!(
            "functional `{}` is not defined over flavor `{}`",
            kind.as_str(),
            old_final_states.flavor().as_str()
        )));
    }
    let n = old_final_states.len();
    match kind {
        FunctionalKind::Re => Ok(vec![C64::new(0.5, 0.0); n]),
        FunctionalKind::Sm => {
            let t = tau(old_final_states, target_states)?;
            Ok(vec![t.value().conj(); n])
        }
        FunctionalKind::Ss => Ok(old_final_states
            .members()
            .iter()
            .zip(target_states.members())
            .map(|(fin, tgt)| inner(tgt, fin).conj())
            .collect()),
    }
}
