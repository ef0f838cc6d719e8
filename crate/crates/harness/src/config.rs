//! Experiment configuration, read from flat TOML.
//!
//! ```toml
//! family = "relu"
//! estimators = ["mre-nc", "average", "single"]
//! m_values = [4, 8, 16, 32, 64, 128, 256]
//! n = 10
//! bits = 200
//! d = 4
//! seeds = [0, 1, 2]
//! quantization = "budgeted"   # or "diagnostic" with diagnostic_bits
//! delta = 0.25                # optional override of the computed edge scale
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use mrenc_core::encoder::Quantization;
use mrenc_core::grids::ProblemDims;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Relu,
    Cone,
    Wells,
    HatGrid,
    NinePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    MreNc,
    Average,
    Single,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::MreNc => "mre-nc",
            EstimatorKind::Average => "average",
            EstimatorKind::Single => "single",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizationKind {
    #[default]
    Budgeted,
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyKind,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_m_values")]
    pub m_values: Vec<u64>,
    pub n: u64,
    #[serde(alias = "B")]
    pub bits: u64,
    pub d: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub quantization: QuantizationKind,
    #[serde(default = "default_diagnostic_bits")]
    pub diagnostic_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Record wall-clock times; off keeps CSV output byte-identical across runs.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relu_truth: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_apex: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_centers: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_depths: Option<Vec<f64>>,
    #[serde(default = "default_hat_constant")]
    pub hat_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hat_target: Option<usize>,
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::MreNc, EstimatorKind::Average, EstimatorKind::Single]
}

fn default_m_values() -> Vec<u64> {
    (2..=8).map(|k| 1u64 << k).collect()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_diagnostic_bits() -> u32 {
    16
}

fn default_mc_samples() -> usize {
    10_000
}

fn default_noise_var() -> f64 {
    0.5
}

fn default_hat_constant() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// A config with every optional key at its default.
    pub fn new(family: FamilyKind, n: u64, bits: u64, d: usize) -> Self {
        ExperimentConfig {
            family,
            estimators: default_estimators(),
            m_values: default_m_values(),
            n,
            bits,
            d,
            seeds: default_seeds(),
            quantization: QuantizationKind::default(),
            diagnostic_bits: default_diagnostic_bits(),
            delta: None,
            mc_samples: default_mc_samples(),
            timing: false,
            output: None,
            noise_var: default_noise_var(),
            relu_truth: None,
            cone_apex: None,
            well_centers: None,
            well_depths: None,
            hat_constant: default_hat_constant(),
            hat_target: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: PathBuf::from("<string>"),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.into(),
            source: e,
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::Parse {
            path: path.into(),
            source: e,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn quantization_mode(&self) -> Quantization {
        match self.quantization {
            QuantizationKind::Budgeted => Quantization::Budgeted,
            QuantizationKind::Diagnostic => Quantization::Diagnostic {
                bits: self.diagnostic_bits,
            },
        }
    }

    pub fn dims(&self, m: u64) -> Result<ProblemDims> {
        Ok(ProblemDims::new(m, self.n, self.bits, self.d)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(config_err!("estimators must not be empty"));
        }
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return Err(config_err!("m_values must be a non-empty list of positive integers"));
        }
        if self.seeds.is_empty() {
            return Err(config_err!("seeds must not be empty"));
        }
        if self.mc_samples < 1000 {
            return Err(config_err!("mc_samples must be at least 1000"));
        }
        if self.quantization == QuantizationKind::Diagnostic && !(1..=52).contains(&self.diagnostic_bits) {
            return Err(config_err!("diagnostic_bits must be in 1..=52"));
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(config_err!("delta must be positive"));
            }
        }
        for &m in &self.m_values {
            self.dims(m)?;
        }
        self.validate_family()
    }

    fn validate_family(&self) -> Result<()> {
        let d = self.d;
        match self.family {
            FamilyKind::Relu => {
                if d != 4 {
                    return Err(config_err!("relu family needs d = 4"));
                }
                if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
                    return Err(config_err!("noise_var must be non-negative"));
                }
                if let Some(t) = self.relu_truth {
                    if t.iter().any(|v| !(v.abs() <= 2.0)) {
                        return Err(config_err!("relu_truth entries must lie in [-2, 2]"));
                    }
                }
            }
            FamilyKind::Cone => {
                if let Some(a) = &self.cone_apex {
                    if a.len() != d || a.iter().any(|v| !(v.abs() <= 1.0)) {
                        return Err(config_err!("cone_apex must have d entries in [-1, 1]"));
                    }
                }
            }
            FamilyKind::Wells => match (&self.well_centers, &self.well_depths) {
                (None, None) => {}
                (Some(c), Some(w)) => {
                    if c.is_empty() || c.len() != w.len() || c.iter().any(|x| x.len() != d) {
                        return Err(config_err!(
                            "well_centers and well_depths must match, with d-dimensional centers"
                        ));
                    }
                }
                _ => return Err(config_err!("well_centers and well_depths go together")),
            },
            FamilyKind::HatGrid => {
                if !(self.hat_constant >= 1.0) {
                    return Err(config_err!("hat_constant must be at least 1"));
                }
                for &m in &self.m_values {
                    let mb = m * self.bits;
                    let side = (mb as f64).powf(1.0 / d as f64).round() as u64;
                    if side.checked_pow(d as u32) != Some(mb) {
                        return Err(config_err!(
                            "hat-grid needs (mB)^(1/d) to be an integer; m = {m} gives mB = {mb}"
                        ));
                    }
                    if self.hat_target.is_some_and(|t| t as u64 >= mb) {
                        return Err(config_err!("hat_target outside the {mb}-point grid"));
                    }
                }
            }
            FamilyKind::NinePoint => {
                if d != 2 {
                    return Err(config_err!("nine-point family needs d = 2"));
                }
                if self.hat_target.is_some_and(|t| t >= 9) {
                    return Err(config_err!("hat_target must be below 9"));
                }
                if self.m_values.iter().any(|m| m * self.n < 4) {
                    return Err(config_err!("nine-point family needs mn >= 4"));
                }
            }
        }
        Ok(())
    }
}
