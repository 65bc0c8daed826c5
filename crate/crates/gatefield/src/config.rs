//! Flat key/value run configuration: defaults, file parsing, validation,
//! and exact-round-trip snapshots.
//!
//! Every key has a default matching the reference two-surface scenario, so a
//! config file only lists overrides. The snapshot written next to run
//! results serializes every effective value with 17 significant digits;
//! parsing a snapshot reproduces the configuration bit-for-bit.

use std::path::Path;
use std::str::FromStr;

use crate::basis::BasisFlavor;
use crate::error::{Error, Result};
use crate::field::ShapeKind;
use crate::functionals::FunctionalKind;
use crate::krotov::{KrotovConfig, DEFAULT_MONOTONICITY_TOLERANCE};
use crate::model::{build_two_surface_model, SurfaceSpectrum, SystemModel};
use crate::persist::fmt_f64;
use crate::target::{build_qft_target, TargetGate};

/// Largest register size the target constructor supports.
pub const MAX_QUBITS: u32 = 6;

/// Complete description of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Ground-surface levels kept in the model.
    pub m_g: usize,
    /// Excited-surface levels kept in the model.
    pub m_e: usize,
    /// Electronic gap Ω between the two surfaces; also the carrier frequency
    /// of the guess pulse.
    pub omega_00: f64,
    pub omega_g: f64,
    pub x_g: f64,
    pub omega_e: f64,
    pub x_e: f64,
    /// Dimensionless oscillator displacement entering the dipole overlaps.
    pub displacement: f64,
    pub mu0: f64,
    /// Register size Q; the transformation acts on N = 2^Q levels.
    pub qubits: u32,
    pub total_time: f64,
    pub n_steps: usize,
    pub epsilon0: f64,
    pub lambda0: f64,
    pub functional: FunctionalKind,
    pub basis_flavor: BasisFlavor,
    pub max_iterations: usize,
    pub fidelity_target: f64,
    pub shape_function: ShapeKind,
    pub monotonicity_tolerance: f64,
    pub lambda0_phase2: Option<f64>,
    pub lambda0_switch_iteration: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m_g: 40,
            m_e: 20,
            omega_00: 0.06601,
            omega_g: 8.0e-4,
            x_g: 5.0e-6,
            omega_e: 5.5e-4,
            x_e: 3.0e-6,
            displacement: 1.2,
            mu0: 1.0,
            qubits: 2,
            total_time: 4.5e4,
            n_steps: 32768,
            epsilon0: 5.0e-3,
            lambda0: 1.0e3,
            functional: FunctionalKind::Sm,
            basis_flavor: FunctionalKind::Sm.default_flavor(),
            max_iterations: 100,
            fidelity_target: -16.0,
            shape_function: ShapeKind::Gaussian,
            monotonicity_tolerance: DEFAULT_MONOTONICITY_TOLERANCE,
            lambda0_phase2: None,
            lambda0_switch_iteration: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| Error::Config {
        key: key.to_string(),
        message: format!("cannot parse `{raw}`: {e}"),
    })
}

impl RunConfig {
    /// Parse overrides over the defaults. Lines are `key = value`; `#`
    /// starts a comment; blank lines are skipped. Unknown or duplicate keys
    /// and unparsable values are configuration errors naming the key.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut explicit_flavor: Option<BasisFlavor> = None;
        let mut seen: Vec<String> = Vec::new();

        for raw_line in text.lines() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key_part, value_part)) = line.split_once('=') else {
                return Err(Error::Config {
                    key: line.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key_part.trim();
            let value = value_part.trim();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config {
                    key: line.to_string(),
                    message: "expected `key = value`".into(),
                });
            }
            if seen.iter().any(|s| s == key) {
                return Err(Error::Config {
                    key: key.to_string(),
                    message: "duplicate key".into(),
                });
            }
            seen.push(key.to_string());

            match key {
                "m_g" => config.m_g = parse_value(key, value)?,
                "m_e" => config.m_e = parse_value(key, value)?,
                "omega_00" => config.omega_00 = parse_value(key, value)?,
                "omega_g" => config.omega_g = parse_value(key, value)?,
                "x_g" => config.x_g = parse_value(key, value)?,
                "omega_e" => config.omega_e = parse_value(key, value)?,
                "x_e" => config.x_e = parse_value(key, value)?,
                "displacement" => config.displacement = parse_value(key, value)?,
                "mu0" => config.mu0 = parse_value(key, value)?,
                "qubits" => config.qubits = parse_value(key, value)?,
                "total_time" => config.total_time = parse_value(key, value)?,
                "n_steps" => config.n_steps = parse_value(key, value)?,
                "epsilon0" => config.epsilon0 = parse_value(key, value)?,
                "lambda0" => config.lambda0 = parse_value(key, value)?,
                "functional" => config.functional = parse_value(key, value)?,
                "basis_flavor" => explicit_flavor = Some(parse_value(key, value)?),
                "max_iterations" => config.max_iterations = parse_value(key, value)?,
                "fidelity_target" => config.fidelity_target = parse_value(key, value)?,
                "shape_function" => config.shape_function = parse_value(key, value)?,
                "monotonicity_tolerance" => {
                    config.monotonicity_tolerance = parse_value(key, value)?
                }
                "lambda0_phase2" => config.lambda0_phase2 = Some(parse_value(key, value)?),
                "lambda0_switch_iteration" => {
                    config.lambda0_switch_iteration = Some(parse_value(key, value)?)
                }
                other => {
                    return Err(Error::Config {
                        key: other.to_string(),
                        message: "unknown key".into(),
                    });
                }
            }
        }

        config.basis_flavor =
            explicit_flavor.unwrap_or_else(|| config.functional.default_flavor());
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse_str(&text)
    }

    /// Cross-field checks beyond per-value parsing, each naming the key.
    pub fn validate(&self) -> Result<()> {
        if self.m_g == 0 {
            return Err(Error::config("m_g", "needs at least one ground level"));
        }
        if self.m_e == 0 {
            return Err(Error::config("m_e", "needs at least one excited level"));
        }
        if !(self.omega_00 > 0.0) || !self.omega_00.is_finite() {
            return Err(Error::config(
                "omega_00",
                format!("electronic gap must be positive and finite, got {}", self.omega_00),
            ));
        }
        for (key, value) in [
            ("omega_g", self.omega_g),
            ("x_g", self.x_g),
            ("omega_e", self.omega_e),
            ("x_e", self.x_e),
            ("displacement", self.displacement),
            ("mu0", self.mu0),
        ] {
            if !value.is_finite() {
                return Err(Error::config(key, format!("must be finite, got {value}")));
            }
        }
        if self.displacement < 0.0 {
            return Err(Error::config(
                "displacement",
                format!("must be >= 0, got {}", self.displacement),
            ));
        }
        if self.qubits == 0 || self.qubits > MAX_QUBITS {
            return Err(Error::config(
                "qubits",
                format!("must be between 1 and {MAX_QUBITS}, got {}", self.qubits),
            ));
        }
        let n = 1usize << self.qubits;
        if n > self.m_g {
            return Err(Error::config(
                "qubits",
                format!(
                    "register of {} qubits needs N = {n} levels but only {} ground levels are kept",
                    self.qubits, self.m_g
                ),
            ));
        }
        // The iteration-level keys share the engine's validation.
        self.krotov_config().validate()
    }

    pub fn spectrum(&self) -> SurfaceSpectrum {
        SurfaceSpectrum {
            omega_g: self.omega_g,
            x_g: self.x_g,
            omega_e: self.omega_e,
            x_e: self.x_e,
        }
    }

    /// Subspace size N = 2^Q.
    pub fn subspace_dim(&self) -> usize {
        1usize << self.qubits
    }

    pub fn build_model(&self) -> Result<SystemModel> {
        build_two_surface_model(
            self.m_g,
            self.m_e,
            self.omega_00,
            &self.spectrum(),
            self.displacement,
            self.mu0,
            self.subspace_dim(),
        )
    }

    pub fn build_target(&self) -> Result<TargetGate> {
        build_qft_target(self.qubits)
    }

    pub fn krotov_config(&self) -> KrotovConfig {
        KrotovConfig {
            lambda0: self.lambda0,
            functional: self.functional,
            basis_flavor: self.basis_flavor,
            max_iterations: self.max_iterations,
            fidelity_target: self.fidelity_target,
            epsilon0: self.epsilon0,
            omega: self.omega_00,
            total_time: self.total_time,
            n_steps: self.n_steps,
            shape: self.shape_function,
            monotonicity_tolerance: self.monotonicity_tolerance,
            lambda0_phase2: self.lambda0_phase2,
            lambda0_switch_iteration: self.lambda0_switch_iteration,
        }
    }

    /// Same configuration with a different register size (sweep helper).
    pub fn with_qubits(&self, qubits: u32) -> Self {
        let mut config = self.clone();
        config.qubits = qubits;
        config
    }

    /// Serialize every effective value, one `key = value` per line, in a
    /// fixed order. `parse_str(snapshot())` reproduces the configuration
    /// exactly.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        push("m_g", self.m_g.to_string());
        push("m_e", self.m_e.to_string());
        push("omega_00", fmt_f64(self.omega_00));
        push("omega_g", fmt_f64(self.omega_g));
        push("x_g", fmt_f64(self.x_g));
        push("omega_e", fmt_f64(self.omega_e));
        push("x_e", fmt_f64(self.x_e));
        push("displacement", fmt_f64(self.displacement));
        push("mu0", fmt_f64(self.mu0));
        push("qubits", self.qubits.to_string());
        push("total_time", fmt_f64(self.total_time));
        push("n_steps", self.n_steps.to_string());
        push("epsilon0", fmt_f64(self.epsilon0));
        push("lambda0", fmt_f64(self.lambda0));
        push("functional", self.functional.as_str().to_string());
        push("basis_flavor", self.basis_flavor.as_str().to_string());
        push("max_iterations", self.max_iterations.to_string());
        push("fidelity_target", fmt_f64(self.fidelity_target));
        push("shape_function", self.shape_function.as_str().to_string());
        push(
            "monotonicity_tolerance",
            fmt_f64(self.monotonicity_tolerance),
        );
        if let Some(l2) = self.lambda0_phase2 {
            push("lambda0_phase2", fmt_f64(l2));
        }
        if let Some(switch) = self.lambda0_switch_iteration {
            push("lambda0_switch_iteration", switch.to_string());
        }
        out
    }
}
