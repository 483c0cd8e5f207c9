//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [problem]
//! p = 3.0
//! dim = 2
//! beta0 = 1.0
//! r0 = 1.0
//! c_mono = 1.0
//! sigma = { kind = "power_law", alpha = 1.0 }
//! beta = { kind = "constant", value = 1.0 }
//! f = { kind = "odd_power", q = 3.0 }
//! g = { kind = "constant", value = 0.0 }
//!
//! [grid]
//! R = 4.0
//! m_per_axis = 33
//!
//! [stepping]
//! dt = 0.01
//! t_final = 1.0
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use plap_core::grid::GradientStencil;
use plap_core::{CoefficientProfile, NonlinearityModel, ProblemSpec, Scheme, StepConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub stepping: SteppingConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub io: IoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub p: f64,
    pub dim: usize,
    pub beta0: f64,
    pub r0: f64,
    pub c_mono: f64,
    pub sigma: ProfileConfig,
    pub beta: ProfileConfig,
    #[serde(default)]
    pub f: NonlinearityConfig,
    #[serde(default = "zero_profile")]
    pub g: ProfileConfig,
}

fn zero_profile() -> ProfileConfig {
    ProfileConfig::Constant { value: 0.0 }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant {
        value: f64,
    },
    PowerLaw {
        #[serde(default = "one")]
        amplitude: f64,
        alpha: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    TwoPower {
        #[serde(default = "one")]
        amplitude: f64,
        alpha: f64,
        gamma: f64,
    },
    RadialTable {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    GaussianBump {
        #[serde(default)]
        base: f64,
        amplitude: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
    ExpDecay {
        #[serde(default = "one")]
        amplitude: f64,
        rate: f64,
    },
    FlatAtOrigin {
        #[serde(default = "one")]
        amplitude: f64,
        /// Zero beyond this radius.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
}

impl ProfileConfig {
    pub fn to_profile(&self) -> Result<CoefficientProfile, ConfigError> {
        Ok(match self {
            ProfileConfig::Constant { value } => CoefficientProfile::Constant(*value),
            ProfileConfig::PowerLaw {
                amplitude,
                alpha,
                offset,
                cap,
            } => CoefficientProfile::PowerLaw {
                amplitude: *amplitude,
                alpha: *alpha,
                offset: *offset,
                cap: *cap,
            },
            ProfileConfig::TwoPower {
                amplitude,
                alpha,
                gamma,
            } => CoefficientProfile::TwoPower {
                amplitude: *amplitude,
                alpha: *alpha,
                gamma: *gamma,
            },
            ProfileConfig::RadialTable { radii, values } => {
                CoefficientProfile::radial_table(radii.clone(), values.clone())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
            ProfileConfig::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => CoefficientProfile::GaussianBump {
                base: *base,
                amplitude: *amplitude,
                center: *center,
                width: *width,
            },
            ProfileConfig::ExpDecay { amplitude, rate } => CoefficientProfile::ExpDecay {
                amplitude: *amplitude,
                rate: *rate,
            },
            ProfileConfig::FlatAtOrigin { amplitude, cutoff } => {
                let inner = CoefficientProfile::FlatAtOrigin { amplitude: *amplitude };
                match cutoff {
                    Some(radius) => CoefficientProfile::Cutoff {
                        inner: Box::new(inner),
                        radius: *radius,
                    },
                    None => inner,
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    #[default]
    Zero,
    OddPower {
        q: f64,
    },
    CubicMinusLinear {
        a: f64,
        b: f64,
    },
    ExpGrowth,
}

impl NonlinearityConfig {
    pub fn to_model(self) -> Result<NonlinearityModel, ConfigError> {
        Ok(match self {
            NonlinearityConfig::Zero => NonlinearityModel::Zero,
            NonlinearityConfig::OddPower { q } => {
                if !(q >= 1.0) {
                    return Err(ConfigError::Invalid(format!("odd_power needs q >= 1, got {q}")));
                }
                NonlinearityModel::OddPower { q }
            }
            NonlinearityConfig::CubicMinusLinear { a, b } => NonlinearityModel::CubicMinusLinear { a, b },
            NonlinearityConfig::ExpGrowth => NonlinearityModel::ExpGrowth,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilConfig {
    #[default]
    Full,
    NormalOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub m_per_axis: usize,
    #[serde(default)]
    pub stencil: StencilConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteppingConfig {
    pub dt: f64,
    pub scheme: SchemeConfig,
    pub nonlinear_tol: f64,
    pub max_picard: usize,
    pub max_newton: usize,
    pub damping: f64,
    pub explicit_safety: f64,
    /// Absolute end time of `simulate`, and the horizon of the experiments.
    pub t_final: f64,
}

impl Default for SteppingConfig {
    fn default() -> Self {
        let d = StepConfig::default();
        SteppingConfig {
            dt: d.dt,
            scheme: SchemeConfig::Implicit,
            nonlinear_tol: d.nonlinear_tol,
            max_picard: d.max_picard,
            max_newton: d.max_newton,
            damping: d.damping,
            explicit_safety: d.explicit_safety,
            t_final: 1.0,
        }
    }
}

impl SteppingConfig {
    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            dt: self.dt,
            scheme: match self.scheme {
                SchemeConfig::Implicit => Scheme::Implicit,
                SchemeConfig::Explicit => Scheme::Explicit,
            },
            nonlinear_tol: self.nonlinear_tol,
            max_picard: self.max_picard,
            max_newton: self.max_newton,
            damping: self.damping,
            explicit_safety: self.explicit_safety,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Validate,
    Simulate,
    Contract,
    Absorb,
    Compact,
    Attractor,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Validate => "validate",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Contract => "contract",
            ExperimentKind::Absorb => "absorb",
            ExperimentKind::Compact => "compact",
            ExperimentKind::Attractor => "attractor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// When set, must match the subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    /// Radius of the ball in the σ integrability check.
    pub probe_radius: f64,
    /// Half-width of the sampled range in the f check.
    pub f_range: f64,
    pub samples: usize,
    /// Pairs (contract) or trajectories (absorb, compact, attractor).
    pub count: usize,
    /// L² norm of random initial fields (contract, compact, attractor).
    pub initial_norm: f64,
    /// Initial norms in absorb span `[norm_factor_min ρ, norm_factor_max ρ]`.
    pub norm_factor_min: f64,
    pub norm_factor_max: f64,
    pub checkpoints: usize,
    /// ε of the compactness envelope; `t_final / 8` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub embedding_trials: usize,
    pub embedding_steps: usize,
    pub t_burn: f64,
    pub n_snapshots: usize,
    pub spacing: f64,
    /// Largest admissible spread of the final attractor snapshots.
    pub tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            probe_radius: 1.0,
            f_range: plap_core::model::DEFAULT_F_RANGE,
            samples: plap_core::model::DEFAULT_SAMPLES,
            count: 20,
            initial_norm: 1.0,
            norm_factor_min: 1.0,
            norm_factor_max: 100.0,
            checkpoints: plap_core::dynamics::DEFAULT_CHECKPOINTS,
            epsilon: None,
            embedding_trials: plap_core::embedding::DEFAULT_TRIALS,
            embedding_steps: plap_core::embedding::DEFAULT_ASCENT_STEPS,
            t_burn: 10.0,
            n_snapshots: 4,
            spacing: 1.0,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    Sine {
        #[serde(default = "one_usize")]
        mode: usize,
        amplitude: f64,
    },
    /// Seeded sum of Gaussian bumps with the given L² norm.
    Bumps {
        norm: f64,
    },
    /// Restart from a snapshot file; its time stamp becomes the start time.
    Snapshot {
        path: PathBuf,
    },
}

fn one_usize() -> usize {
    1
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Bumps { norm: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub out_dir: PathBuf,
    /// Write a snapshot every this many steps (0: final snapshot only).
    pub snapshot_every: usize,
    pub ledger: String,
}

impl Default for IoConfig {
    fn default() -> Self {
        IoConfig {
            out_dir: PathBuf::from("plap-out"),
            snapshot_every: 0,
            ledger: "ledger.csv".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // relative snapshot paths are taken from the config's directory
        if let InitialConfig::Snapshot { path: snap } = &mut cfg.initial {
            if snap.is_relative() {
                if let Some(dir) = path.parent() {
                    *snap = dir.join(&*snap);
                }
            }
        }
        Ok(cfg)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        Ok(ProblemSpec {
            p: p.p,
            n: p.dim,
            sigma: p.sigma.to_profile()?,
            beta: p.beta.to_profile()?,
            source_g: p.g.to_profile()?,
            nonlinearity: p.f.to_model()?,
            beta0: p.beta0,
            r0: p.r0,
            c_mono: p.c_mono,
        })
    }

    pub fn stencil(&self) -> GradientStencil {
        match self.grid.stencil {
            StencilConfig::Full => GradientStencil::Full,
            StencilConfig::NormalOnly => GradientStencil::NormalOnly,
        }
    }

    /// Canonical TOML rendering (field order fixed by the schema).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// SHA-256 of the canonical configuration, output directory excluded.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.io.out_dir = PathBuf::new();
        sha256_hex(c.canonical().as_bytes())
    }

    /// SHA-256 of the canonical `[problem]` section.
    pub fn spec_hash(&self) -> String {
        let text = toml::to_string(&self.problem).expect("problem section is always serializable");
        sha256_hex(text.as_bytes())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
