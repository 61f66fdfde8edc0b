//! Engine configuration: frame rate, smoothing, labial extension and
//! asset paths. Loaded from a `key = value` text file; every field has a
//! default so an empty config is valid.

use std::path::PathBuf;

use thiserror::Error;

use crate::coarticulation::KernelShape;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {detail}")]
    Bad { line: usize, detail: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Output frame rate.
    pub fps: f64,
    pub kernel_shape: KernelShape,
    /// Smoothing bandwidth in seconds; 0 selects the unsmoothed baseline.
    pub bandwidth: f64,
    /// Maximum backwards extension of short labial segments, seconds.
    pub max_extension: f64,
    /// Labials at least this long are not extended, seconds.
    pub min_duration: f64,
    /// Emotion envelope attack/release, seconds.
    pub emotion_attack: f64,
    pub emotion_release: f64,
    pub viseme_table: Option<PathBuf>,
    pub compat_table: Option<PathBuf>,
    /// Morph-set manifest path, or the literal `synthetic` for the
    /// built-in procedural head.
    pub morphset: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            fps: 30.0,
            kernel_shape: KernelShape::Gaussian,
            bandwidth: 0.030,
            max_extension: 0.060,
            min_duration: 1.0 / 30.0,
            emotion_attack: 0.150,
            emotion_release: 0.150,
            viseme_table: None,
            compat_table: None,
            morphset: None,
        }
    }
}

impl EngineConfig {
    pub fn parse(text: &str) -> Result<EngineConfig, ConfigError> {
        let mut config = EngineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Bad {
                line,
                detail: "expected key = value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f = |v: &str| -> Result<f64, ConfigError> {
                v.parse().map_err(|_| ConfigError::Bad {
                    line,
                    detail: format!("bad number '{v}'"),
                })
            };
            match key {
                "fps" => config.fps = parse_f(value)?,
                "kernel" => {
                    config.kernel_shape = match value {
                        "gaussian" => KernelShape::Gaussian,
                        "triangular" => KernelShape::Triangular,
                        other => {
                            return Err(ConfigError::Bad {
                                line,
                                detail: format!("unknown kernel '{other}'"),
                            })
                        }
                    }
                }
                "bandwidth_ms" => config.bandwidth = parse_f(value)? / 1000.0,
                "max_extension_ms" => config.max_extension = parse_f(value)? / 1000.0,
                "min_duration_ms" => config.min_duration = parse_f(value)? / 1000.0,
                "emotion_attack_ms" => config.emotion_attack = parse_f(value)? / 1000.0,
                "emotion_release_ms" => config.emotion_release = parse_f(value)? / 1000.0,
                "viseme_table" => config.viseme_table = Some(PathBuf::from(value)),
                "compat_table" => config.compat_table = Some(PathBuf::from(value)),
                "morphset" => config.morphset = Some(PathBuf::from(value)),
                other => {
                    return Err(ConfigError::Bad {
                        line,
                        detail: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.fps <= 0.0 || !self.fps.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        if self.bandwidth < 0.0 || !self.bandwidth.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "bandwidth must be non-negative, got {}",
                self.bandwidth
            )));
        }
        for (name, v) in [
            ("max_extension", self.max_extension),
            ("min_duration", self.min_duration),
            ("emotion_attack", self.emotion_attack),
            ("emotion_release", self.emotion_release),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}
