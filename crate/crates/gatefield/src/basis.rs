//! State sets tracked by the optimizer and the basis prescriptions for the
//! different functionals.
//!
//! The overlap functionals need only N propagated states, but *which* N
//! states matters:
//!
//! - `canonical-basis`: the N computational levels themselves — the natural
//!   choice for the phase-sensitive and modulus-squared functionals.
//! - `ss-basis`: the first N−1 canonical states plus the uniform
//!   superposition of all N. The superposition member is what ties the N
//!   relative phases together, so maximizing per-state overlaps in this basis
//!   certifies the full gate.
//! - `orthonormal-lbasis`: the N canonical states used *as* the l-basis for
//!   the state-to-state functional. Deliberately kept available as a pitfall
//!   demonstration: every per-transition overlap can reach 1 while the
//!   relative phases — and hence the gate fidelity — stay wrong.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::model::SystemModel;
use crate::target::TargetGate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFlavor {
    CanonicalBasis,
    SsBasis,
    OrthonormalLBasis,
    Custom,
}

impl BasisFlavor {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisFlavor::CanonicalBasis => "canonical-basis",
            BasisFlavor::SsBasis => "ss-basis",
            BasisFlavor::OrthonormalLBasis => "orthonormal-lbasis",
            BasisFlavor::Custom => "custom",
        }
    }
}

impl std::str::FromStr for BasisFlavor {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "canonical-basis" => Ok(BasisFlavor::CanonicalBasis),
            "ss-basis" => Ok(BasisFlavor::SsBasis),
            "orthonormal-lbasis" => Ok(BasisFlavor::OrthonormalLBasis),
            "custom" => Ok(BasisFlavor::Custom),
            other => Err(format!(
                "unknown basis flavor `{other}` (expected `canonical-basis`, `ss-basis`, \
                 `orthonormal-lbasis`, or `custom`)"
            )),
        }
    }
}

/// N complex vectors of equal dimension, tagged with their basis flavor.
#[derive(Debug, Clone)]
pub struct StateSet {
    members: Vec<CVector>,
    flavor: BasisFlavor,
}

impl StateSet {
    pub fn new(members: Vec<CVector>, flavor: BasisFlavor) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("state set must be non-empty".into()));
        }
        let dim = members[0].len();
        if members.iter().any(|v| v.len() != dim) {
            return Err(Error::Validation(
                "state set members must share one dimension".into(),
            ));
        }
        Ok(StateSet { members, flavor })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Hilbert-space dimension M of each member.
    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn flavor(&self) -> BasisFlavor {
        self.flavor
    }

    pub fn members(&self) -> &[CVector] {
        &self.members
    }

    pub fn member(&self, k: usize) -> &CVector {
        &self.members[k]
    }
}

fn canonical_state(dim: usize, level: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[level] = C64::new(1.0, 0.0);
    v
}

/// Initial and target state sets for an optimization run.
///
/// Initial members follow the flavor prescription, embedded in the full
/// M-dim space; target member k is the embedded gate applied to initial
/// member k.
pub fn build_state_sets(
    model: &SystemModel,
    target: &TargetGate,
    flavor: BasisFlavor,
) -> Result<(StateSet, StateSet)> {
    let n = target.dim();
    let m = model.dim();
    if n != model.subspace_dim() {
        return Err(Error::Validation(format!(
            "target block dimension {n} does not match the model's computational subspace {}",
            model.subspace_dim()
        )));
    }
    if n > model.m_g() {
        return Err(Error::Validation(format!(
            "computational subspace {n} exceeds the {} ground levels",
            model.m_g()
        )));
    }

    let initial_members: Vec<CVector> = match flavor {
        BasisFlavor::CanonicalBasis | BasisFlavor::OrthonormalLBasis => {
            (0..n).map(|k| canonical_state(m, k)).collect()
        }
        BasisFlavor::SsBasis => {
            let mut members: Vec<CVector> = (0..n.saturating_sub(1))
                .map(|k| canonical_state(m, k))
                .collect();
            let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
            let mut uniform = CVector::zeros(m);
            for k in 0..n {
                uniform[k] = amp;
            }
            members.push(uniform);
            members
        }
        BasisFlavor::Custom => {
            return Err(Error::Validation(
                "custom flavor has no prescription; construct the StateSet directly".into(),
            ))
        }
    };

    let target_members: Vec<CVector> = initial_members
        .iter()
        .map(|v| target.apply_embedded(v))
        .collect::<Result<_>>()?;

    Ok((
        StateSet::new(initial_members, flavor)?,
        StateSet::new(target_members, flavor)?,
    ))
}

/// Recover the canonical-basis evolution endpoints from an l-basis run.
///
/// The ss-basis members are the first N−1 canonical states plus the uniform
/// superposition over all N, so linearity of the evolution gives the missing
/// N-th canonical endpoint as `√N·(uniform endpoint) − Σ_{k<N−1} endpoints`.
/// Orthonormal-lbasis members already are the canonical states; only the
/// flavor tag changes.
pub fn reconstruct_canonical_endpoints(endpoints: &StateSet) -> Result<StateSet> {
    match endpoints.flavor() {
        BasisFlavor::CanonicalBasis => {
            StateSet::new(endpoints.members().to_vec(), BasisFlavor::CanonicalBasis)
        }
        BasisFlavor::OrthonormalLBasis => {
            StateSet::new(endpoints.members().to_vec(), BasisFlavor::CanonicalBasis)
        }
        BasisFlavor::SsBasis => {
            let n = endpoints.len();
            let root_n = C64::new((n as f64).sqrt(), 0.0);
            let mut last = endpoints.member(n - 1).mapv(|z| z * root_n);
            for k in 0..n - 1 {
                last = &last - endpoints.member(k);
            }
            let mut members = endpoints.members()[..n - 1].to_vec();
            members.push(last);
            StateSet::new(members, BasisFlavor::CanonicalBasis)
        }
        BasisFlavor::Custom => Err(Error::Validation(
            "cannot reconstruct canonical endpoints from a custom state set".into(),
        )),
    }
}
