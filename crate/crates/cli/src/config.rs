//! Run configuration. Every section is optional; missing values fall back to
//! the defaults listed in the README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use siphon_core::calibration::FitOptions;
use siphon_core::elements::{db_to_loss_fraction, MmiModel};
use siphon_core::experiments::{LossChannelSet, OverlapModel, PhaseCalibration, SPEED_OF_LIGHT};
use siphon_core::presets::{DEVICE_ALPHA_OV, DEVICE_MMI_PHI};
use siphon_core::{DEFAULT_N_MAX_PAIRS, DEFAULT_REPETITION_RATE};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub losses: LossConfig,
    #[serde(default)]
    pub mmi: MmiConfig,
    #[serde(default)]
    pub overlap: OverlapConfig,
    #[serde(default)]
    pub delay: DelayConfig,
    #[serde(default)]
    pub power: PowerConfig,
    #[serde(default)]
    pub fringe: FringeConfig,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub fit: FitConfig,
    /// Directory that relative input paths in the file are read against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub n_max_pairs: usize,
    /// Squeezing of the delay scan; 0 means one pair per pulse.
    pub xi_sq: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            n_max_pairs: DEFAULT_N_MAX_PAIRS,
            xi_sq: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_c: f64,
    pub eta_d: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            eta_a: 1.0,
            eta_b: 1.0,
            eta_c: 1.0,
            eta_d: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MmiConfig {
    Ideal {},
    MinimalLoss {
        phi: f64,
    },
    Lossy {
        #[serde(default = "half")]
        eta: f64,
        loss_db: Option<f64>,
        alpha_loss: Option<f64>,
        phi: f64,
    },
}

fn half() -> f64 {
    0.5
}

impl Default for MmiConfig {
    fn default() -> Self {
        Self::MinimalLoss { phi: DEVICE_MMI_PHI }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverlapConfig {
    pub alpha_ov: f64,
    /// Free-space coherence length in metres.
    pub coherence_length: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self {
            alpha_ov: DEVICE_ALPHA_OV,
            coherence_length: siphon_core::experiments::DEFAULT_COHERENCE_LENGTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelayConfig {
    pub start_fs: f64,
    pub stop_fs: f64,
    pub points: usize,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            start_fs: -1000.0,
            stop_fs: 1000.0,
            points: 201,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub xi_sq_start: f64,
    pub xi_sq_stop: f64,
    pub points: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            xi_sq_start: 0.01,
            xi_sq_stop: 0.3,
            points: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FringeConfig {
    pub voltage_start: f64,
    pub voltage_stop: f64,
    pub points: usize,
    /// Heater response `phi = k V^2 + phi0`, rad/V^2.
    pub k: f64,
    pub phi0: f64,
}

impl Default for FringeConfig {
    fn default() -> Self {
        let cal = PhaseCalibration::default();
        Self {
            voltage_start: 0.0,
            voltage_stop: 4.5,
            points: 181,
            k: cal.k,
            phi0: cal.phi0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    pub loss_db: Vec<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            loss_db: vec![0.2, 0.5, 0.8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    pub repetition_rate: f64,
    pub restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            repetition_rate: DEFAULT_REPETITION_RATE,
            restarts: FitOptions::default().restarts,
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::ConfigValue {
        field: field.to_string(),
        message: message.into(),
    }
}

/// `points` evenly spaced values from `start` to `stop`.
pub fn linspace(field: &str, start: f64, stop: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(invalid(field, format!("needs at least 2 points, got {points}")));
    }
    if !(start.is_finite() && stop.is_finite()) || stop <= start {
        return Err(invalid(
            field,
            format!("range must satisfy start < stop, got [{start}, {stop}]"),
        ));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { stop } else { start + step * i as f64 })
        .collect())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::ConfigSyntax { message, .. } => CliError::ConfigSyntax {
                origin: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf);
        Ok(config)
    }

    /// Overrides the fit input with a path relative to the working directory.
    pub fn set_input(&mut self, input: PathBuf) {
        self.fit.input = Some(input);
        self.base_dir = None;
    }

    pub fn input_path(&self) -> Option<PathBuf> {
        let input = self.fit.input.as_ref()?;
        Some(match &self.base_dir {
            Some(dir) if input.is_relative() => dir.join(input),
            _ => input.clone(),
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e: toml::de::Error| CliError::ConfigSyntax {
            origin: "config".to_string(),
            message: e.to_string(),
        })
    }

    /// SHA-256 of the effective configuration in canonical TOML.
    pub fn digest(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn losses(&self) -> Result<LossChannelSet, CliError> {
        let l = &self.losses;
        Ok(LossChannelSet::new(l.eta_a, l.eta_b, l.eta_c, l.eta_d)?)
    }

    pub fn mmi(&self) -> Result<MmiModel, CliError> {
        match self.mmi {
            MmiConfig::Ideal {} => Ok(MmiModel::Ideal),
            MmiConfig::MinimalLoss { phi } => Ok(MmiModel::minimal_loss(phi)?),
            MmiConfig::Lossy {
                eta,
                loss_db,
                alpha_loss,
                phi,
            } => {
                let alpha = match (loss_db, alpha_loss) {
                    (Some(db), None) => db_to_loss_fraction(db),
                    (None, Some(a)) => a,
                    _ => {
                        return Err(invalid(
                            "mmi",
                            "a lossy coupler needs exactly one of loss_db and alpha_loss",
                        ))
                    }
                };
                Ok(MmiModel::lossy(eta, alpha, phi)?)
            }
        }
    }

    pub fn n_max_pairs(&self) -> Result<usize, CliError> {
        match self.source.n_max_pairs {
            0 => Err(invalid("source.n_max_pairs", "must be at least 1")),
            n => Ok(n),
        }
    }

    pub fn overlap(&self) -> Result<OverlapModel, CliError> {
        let o = &self.overlap;
        Ok(OverlapModel::new(o.alpha_ov, o.coherence_length / SPEED_OF_LIGHT)?)
    }

    pub fn calibration(&self) -> Result<PhaseCalibration, CliError> {
        Ok(PhaseCalibration::new(self.fringe.k, self.fringe.phi0)?)
    }

    pub fn xi_sq(&self) -> Result<f64, CliError> {
        let q = self.source.xi_sq;
        if !(0.0..1.0).contains(&q) {
            return Err(invalid("source.xi_sq", format!("must lie in [0, 1), got {q}")));
        }
        Ok(q)
    }

    pub fn power_grid(&self) -> Result<Vec<f64>, CliError> {
        let p = &self.power;
        let grid = linspace("power", p.xi_sq_start, p.xi_sq_stop, p.points)?;
        if grid[0] <= 0.0 || p.xi_sq_stop >= 1.0 {
            return Err(invalid("power", "xi^2 must satisfy 0 < xi_sq_start < xi_sq_stop < 1"));
        }
        Ok(grid)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            seed: self.seed(),
            restarts: self.fit.restarts,
            ..FitOptions::default()
        }
    }
}
