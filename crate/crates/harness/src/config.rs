//! Experiment configuration read from TOML.
//!
//! ```toml
//! campaign = "rmse"
//! seed = 1
//! trials = 10000
//!
//! [system]
//! m = 10
//! cofactors = ["3+4i", "3-4i", "4"]
//!
//! [noise]
//! snr_db = [26, 28, 30]
//! ```

use ccrt::adc::Centering;
use ccrt::{GaussianInt, ModulusSystem, RealSystem};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A configuration problem, reported with the offending key.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

pub fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    Rmse,
    Tfr,
    Prob,
    Adc,
}

impl Campaign {
    pub fn name(self) -> &'static str {
        match self {
            Campaign::Rmse => "rmse",
            Campaign::Tfr => "tfr",
            Campaign::Prob => "prob",
            Campaign::Adc => "adc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub m: i64,
    pub cofactors: Vec<String>,
}

impl SystemConfig {
    pub fn build(&self, key: &str) -> Result<ModulusSystem, ConfigError> {
        if self.cofactors.is_empty() {
            return Err(invalid(&format!("{key}.cofactors"), "list must be nonempty"));
        }
        let cofactors = parse_gaussians(&self.cofactors, &format!("{key}.cofactors"))?;
        ModulusSystem::build(self.m, cofactors).map_err(|e| invalid(key, e.to_string()))
    }
}

pub fn parse_gaussians(items: &[String], key: &str) -> Result<Vec<GaussianInt>, ConfigError> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<GaussianInt>()
                .map_err(|e| invalid(&format!("{key}[{i}]"), e.to_string()))
        })
        .collect()
}

/// Noise grid: exactly one of `snr_db` or `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub snr_db: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
}

/// One grid point with both noise descriptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePoint {
    pub snr_db: f64,
    pub u: f64,
}

impl NoiseConfig {
    pub fn points(&self) -> Result<Vec<NoisePoint>, ConfigError> {
        let pts: Vec<NoisePoint> = match (&self.snr_db, &self.u) {
            (Some(_), Some(_)) => return Err(invalid("noise", "give either `snr_db` or `u`, not both")),
            (None, None) => return Err(invalid("noise", "one of `snr_db` or `u` is required")),
            (Some(snr), None) => snr
                .iter()
                .map(|&s| NoisePoint {
                    snr_db: s,
                    u: ccrt::noise::u_from_snr(s),
                })
                .collect(),
            (None, Some(u)) => u
                .iter()
                .map(|&u| NoisePoint {
                    snr_db: ccrt::noise::snr_from_u(u),
                    u,
                })
                .collect(),
        };
        let key = if self.snr_db.is_some() {
            "noise.snr_db"
        } else {
            "noise.u"
        };
        if pts.is_empty() {
            return Err(invalid(key, "grid must be nonempty"));
        }
        if let Some(p) = pts
            .iter()
            .find(|p| !(p.u > 0.0 && p.u.is_finite() && p.snr_db.is_finite()))
        {
            return Err(invalid(
                key,
                format!("noise level must be finite and positive, got u = {}", p.u),
            ));
        }
        Ok(pts)
    }
}

/// `σ_i = sigma_base_i + k` for each `k` in the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbConfig {
    pub m: i64,
    pub sigma_base: Vec<f64>,
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MleCcrt,
    DualReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcConfig {
    pub amplitude: f64,
    pub methods: Vec<Method>,
    /// Complex bank used by `mle_ccrt`.
    pub complex: Option<SystemConfig>,
    /// Real moduli used by `dual_real` on both axes.
    pub real_moduli: Option<Vec<i64>>,
    /// Constant coefficients `[a, b]`; random coefficients when absent.
    pub constant: Option<[f64; 2]>,
    #[serde(default = "default_centering")]
    pub centering: Centering,
}

fn default_centering() -> Centering {
    Centering::Signed
}

/// Direct inputs for `reconstruct` and `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub remainders: Vec<String>,
    pub sigmas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub campaign: Option<Campaign>,
    #[serde(default)]
    pub seed: u64,
    pub trials: Option<u64>,
    pub tau: Option<f64>,
    pub output: Option<PathBuf>,
    pub system: Option<SystemConfig>,
    pub noise: Option<NoiseConfig>,
    pub prob: Option<ProbConfig>,
    pub adc: Option<AdcConfig>,
    pub input: Option<InputConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    /// Reads and parses a file, returning the raw text too so callers can
    /// hash exactly what was read.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok((Self::parse(&text)?, text))
    }

    /// Checks that the keys `campaign` needs are present and sane.
    pub fn validate(&self, campaign: Campaign) -> Result<(), ConfigError> {
        if let Some(c) = self.campaign {
            if c != campaign {
                return Err(invalid(
                    "campaign",
                    format!(
                        "config is for `{}` but `{}` was requested",
                        c.name(),
                        campaign.name()
                    ),
                ));
            }
        }
        let trials = self.trials.ok_or_else(|| invalid("trials", "required"))?;
        if trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(invalid("tau", format!("must be positive, got {tau}")));
            }
        }
        match campaign {
            Campaign::Rmse | Campaign::Tfr => {
                self.system()?;
                self.noise()?;
            }
            Campaign::Prob => {
                let p = self
                    .prob
                    .as_ref()
                    .ok_or_else(|| invalid("prob", "block is required"))?;
                if p.m < 1 {
                    return Err(invalid("prob.m", "must be a positive integer"));
                }
                if p.sigma_base.is_empty() {
                    return Err(invalid("prob.sigma_base", "list must be nonempty"));
                }
                if p.sigma_base.len() > ccrt::robustness::MAX_SUBSET_CHANNELS {
                    return Err(invalid(
                        "prob.sigma_base",
                        format!("at most {} channels", ccrt::robustness::MAX_SUBSET_CHANNELS),
                    ));
                }
                if p.k.is_empty() {
                    return Err(invalid("prob.k", "grid must be nonempty"));
                }
                for &k in &p.k {
                    if let Some(s) = p
                        .sigma_base
                        .iter()
                        .map(|b| b + k)
                        .find(|s| !(*s > 0.0 && s.is_finite()))
                    {
                        return Err(invalid(
                            "prob.k",
                            format!("k = {k} gives a nonpositive sigma {s}"),
                        ));
                    }
                }
            }
            Campaign::Adc => {
                self.noise()?;
                self.recoveries()?;
                let a = self.adc.as_ref().expect("checked by recoveries");
                if !(a.amplitude >= 0.0 && a.amplitude.is_finite()) {
                    return Err(invalid("adc.amplitude", "must be finite and nonnegative"));
                }
                if let Some([x, y]) = a.constant {
                    if !(-1.0..=1.0).contains(&x) || !(-1.0..=1.0).contains(&y) {
                        return Err(invalid("adc.constant", "coefficients must lie in [-1, 1]"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<ModulusSystem, ConfigError> {
        self.system
            .as_ref()
            .ok_or_else(|| invalid("system", "block is required"))?
            .build("system")
    }

    pub fn noise(&self) -> Result<Vec<NoisePoint>, ConfigError> {
        self.noise
            .as_ref()
            .ok_or_else(|| invalid("noise", "block is required"))?
            .points()
    }

    /// Recovery methods of the `adc` block, in the listed order.
    pub fn recoveries(&self) -> Result<Vec<ccrt::adc::Recovery>, ConfigError> {
        let a = self
            .adc
            .as_ref()
            .ok_or_else(|| invalid("adc", "block is required"))?;
        if a.methods.is_empty() {
            return Err(invalid("adc.methods", "list must be nonempty"));
        }
        a.methods
            .iter()
            .map(|m| match m {
                Method::MleCcrt => {
                    let s = a
                        .complex
                        .as_ref()
                        .ok_or_else(|| invalid("adc.complex", "required by method mle_ccrt"))?;
                    Ok(ccrt::adc::Recovery::MleCcrt(s.build("adc.complex")?))
                }
                Method::DualReal => {
                    let moduli = a
                        .real_moduli
                        .as_ref()
                        .ok_or_else(|| invalid("adc.real_moduli", "required by method dual_real"))?;
                    let sys =
                        RealSystem::build(moduli).map_err(|e| invalid("adc.real_moduli", e.to_string()))?;
                    Ok(ccrt::adc::Recovery::DualReal(sys))
                }
            })
            .collect()
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(1)
    }
}
