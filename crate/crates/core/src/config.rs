//! TOML run configuration.
//!
//! ```toml
//! [geometry]
//! t_detect_s = 0.161
//!
//! [planner]
//! n_partitions = 3
//!
//! [calibration]
//! model_file = "model.json"   # or inline: a = .., b = .., c = ..
//!
//! [route]
//! graph_file = "campus.json"
//! src = "A"
//! dst = "L"
//! ```
//!
//! Every section is optional; relative paths resolve against the config
//! file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::CalibrationModel;
use crate::geometry::GeometricConfig;
use crate::local::PlannerConfig;
use crate::tracking::TrackerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Frames without a VIP detection after which no heading is emitted.
    pub vip_lost_frames: u32,
    /// Consecutive reroute requests needed before the graph is replanned.
    pub reroute_hysteresis: u32,
    /// Raise the walking speed behind the safety distance to the fastest
    /// tracked approach rate.
    pub live_speed: bool,
    pub max_live_speed_mps: f64,
    /// Include per-stage latencies in the trace.
    pub record_latency: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            vip_lost_frames: 30,
            reroute_hysteresis: 5,
            live_speed: true,
            max_live_speed_mps: 3.0,
            record_latency: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub model_file: Option<PathBuf>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSection {
    pub graph_file: PathBuf,
    pub src: String,
    pub dst: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub geometry: GeometricConfig,
    pub planner: PlannerConfig,
    pub tracking: TrackerConfig,
    pub pipeline: PipelineConfig,
    pub calibration: Option<CalibrationSection>,
    pub route: Option<RouteSection>,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config file, resolving relative paths.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(file) = cfg.calibration.as_mut().and_then(|c| c.model_file.as_mut()) {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        if let Some(route) = cfg.route.as_mut() {
            if route.graph_file.is_relative() {
                route.graph_file = base.join(&route.graph_file);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.geometry.validate().map_err(|e| invalid(&e))?;
        self.planner.validate().map_err(|e| invalid(&e))?;
        let t = &self.tracking;
        if !(0.0..=1.0).contains(&t.iou_threshold) || !(t.approach_window_s > 0.0) {
            return Err(ConfigError::Invalid(
                "tracking.iou_threshold must lie in [0,1] and approach_window_s be positive".into(),
            ));
        }
        if !(self.pipeline.max_live_speed_mps >= 0.0) {
            return Err(ConfigError::Invalid(
                "pipeline.max_live_speed_mps must be non-negative".into(),
            ));
        }
        if let Some(c) = &self.calibration {
            let inline = [c.a, c.b, c.c];
            let n_inline = inline.iter().flatten().count();
            match (&c.model_file, n_inline) {
                (Some(_), 0) | (None, 3) => {}
                (Some(_), _) => {
                    return Err(ConfigError::Invalid(
                        "calibration: give either model_file or a/b/c, not both".into(),
                    ))
                }
                (None, _) => {
                    return Err(ConfigError::Invalid(
                        "calibration: inline model needs all of a, b and c".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// The calibration model named by the config, if any.
    pub fn calibration_model(&self) -> Result<Option<CalibrationModel>, ConfigError> {
        let Some(c) = &self.calibration else {
            return Ok(None);
        };
        if let Some(path) = &c.model_file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            return CalibrationModel::from_json(&text)
                .map(Some)
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())));
        }
        match (c.a, c.b, c.c) {
            (Some(a), Some(b), Some(c)) => Ok(Some(CalibrationModel::from_coefficients(a, b, c))),
            _ => Ok(None),
        }
    }
}
