//! TOML run configuration. Every section is optional; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use laap_core::arima::ArimaSpec;
use laap_core::datagen::GeneratorConfig;
use laap_core::dataset::WindowSpec;
use laap_core::detect::{LaapConfig, WindowDivisor};
use laap_core::eval::AccuracyKind;
use laap_core::lstm::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub input_length: usize,
    pub horizons: Vec<usize>,
    pub split_ratio: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            input_length: 50,
            horizons: (1..=10).collect(),
            split_ratio: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArimaConfig {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    /// Pick `d` from the data instead, up to `max_d`.
    pub auto_difference: bool,
    pub max_d: usize,
}

impl Default for ArimaConfig {
    fn default() -> Self {
        let spec = ArimaSpec::default();
        Self {
            p: spec.p,
            d: spec.d,
            q: spec.q,
            auto_difference: false,
            max_d: 2,
        }
    }
}

impl ArimaConfig {
    pub fn spec(&self) -> ArimaSpec {
        ArimaSpec {
            p: self.p,
            d: self.d,
            q: self.q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub window_length: usize,
    pub alpha: f64,
    pub divisor: WindowDivisor,
    /// Which horizon's predictions the detectors run on.
    pub horizon: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        let laap = LaapConfig::default();
        Self {
            window_length: laap.window_length,
            alpha: laap.alpha,
            divisor: laap.divisor,
            horizon: 1,
        }
    }
}

impl DetectConfig {
    pub fn laap(&self) -> LaapConfig {
        LaapConfig {
            window_length: self.window_length,
            alpha: self.alpha,
            divisor: self.divisor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub bin_width: usize,
    pub accuracy: AccuracyKind,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            bin_width: 5,
            accuracy: AccuracyKind::Recall,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub data: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub window: WindowConfig,
    pub train: TrainConfig,
    pub arima: ArimaConfig,
    pub detect: DetectConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: laap_core::Error| CliError::Config(e.to_string());
        self.generator.validate().map_err(wrap)?;
        self.train.validate().map_err(wrap)?;
        self.detect.laap().validate().map_err(wrap)?;
        self.arima.spec().validate().map_err(wrap)?;
        if self.window.horizons.is_empty() {
            return Err(CliError::Config("window.horizons must not be empty".into()));
        }
        for &t in &self.window.horizons {
            WindowSpec::multi_step(self.window.input_length, t).map_err(wrap)?;
        }
        if !(self.window.split_ratio > 0.0 && self.window.split_ratio < 1.0) {
            return Err(CliError::Config("window.split_ratio must lie strictly between 0 and 1".into()));
        }
        if self.detect.horizon == 0 {
            return Err(CliError::Config("detect.horizon must be at least 1".into()));
        }
        if self.eval.bin_width == 0 {
            return Err(CliError::Config("eval.bin_width must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `"1,2,5-8"` into `[1, 2, 5, 6, 7, 8]`.
pub fn parse_horizons(text: &str) -> Result<Vec<usize>> {
    let bad = |part: &str| CliError::Config(format!("bad horizon `{part}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad(part))?;
                let b: usize = b.trim().parse().map_err(|_| bad(part))?;
                if a > b {
                    return Err(bad(part));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(CliError::Config(format!("horizons `{text}` must be positive integers")));
    }
    Ok(out)
}
