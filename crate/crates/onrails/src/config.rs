//! Global configuration: a single versioned TOML file with one section per
//! subsystem. Unknown keys are rejected; command-line flags override file
//! values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buckets::BucketSpec;
use crate::commentary::CommentaryConfig;
use crate::dreamer::DreamerConfig;
use crate::dynamics::DynamicsConfig;
use crate::metrics::{ComfortThresholds, PenaltyTable, TerminationLimits};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config version {0} (expected {CONFIG_VERSION})")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarlyStopConfig {
    /// Distance after which driving may stop, meters.
    pub distance: f64,
    /// Steering magnitude counting as "close to zero", radians.
    pub steer_eps: f64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            distance: 2100.0,
            steer_eps: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub penalties: PenaltyTable,
    pub comfort: ComfortThresholds,
    pub termination: TerminationLimits,
    pub early_stop: EarlyStopConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BucketsConfig {
    /// Bucket definitions; the built-in default set when empty.
    pub specs: Vec<BucketSpec>,
}

impl BucketsConfig {
    pub fn effective_specs(&self) -> Vec<BucketSpec> {
        if self.specs.is_empty() {
            crate::buckets::default_buckets()
        } else {
            self.specs.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    /// Default worker count for parallel commands (flag `--jobs` overrides).
    pub jobs: usize,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub version: Option<u32>,
    pub dynamics: DynamicsConfig,
    pub dreamer: DreamerConfig,
    pub commentary: CommentaryConfig,
    pub metrics: MetricsConfig,
    pub buckets: BucketsConfig,
    pub io: IoConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let config: Config = toml::from_str(&text)?;
        if let Some(v) = config.version {
            if v != CONFIG_VERSION {
                return Err(ConfigError::Version(v));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        let d = &self.dynamics;
        if !(d.dt > 0.0 && d.dt <= 0.5) {
            return invalid(format!("dynamics.dt must be in (0, 0.5], got {}", d.dt));
        }
        if d.substeps == 0 {
            return invalid("dynamics.substeps must be >= 1".into());
        }
        if !(d.wheelbase > 0.0 && d.max_steer > 0.0) {
            return invalid("dynamics.wheelbase and max_steer must be positive".into());
        }
        if !(d.accel_min < 0.0 && d.accel_max > 0.0) {
            return invalid("dynamics acceleration clamps must straddle zero".into());
        }
        for (name, pid) in [
            ("lateral_pid", &d.lateral_pid),
            ("longitudinal_pid", &d.longitudinal_pid),
        ] {
            if !(pid.integral_clamp > 0.0 && pid.output_clamp > 0.0) {
                return invalid(format!("dynamics.{name} clamps must be positive"));
            }
        }
        let dr = &self.dreamer;
        if dr.speed_wp_count < 2 || dr.path_wp_count < 1 {
            return invalid("dreamer waypoint counts too small".into());
        }
        if !(dr.max_target_speed > 0.0 && dr.objects_radius > 0.0) {
            return invalid("dreamer speed and radius bounds must be positive".into());
        }
        let p = &self.metrics.penalties;
        for (name, v) in [
            ("pedestrian_collision", p.pedestrian_collision),
            ("vehicle_collision", p.vehicle_collision),
            ("static_collision", p.static_collision),
            ("red_light", p.red_light),
            ("stop_sign", p.stop_sign),
            ("emergency_yield", p.emergency_yield),
            ("min_speed", p.min_speed),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return invalid(format!(
                    "metrics.penalties.{name} must be in (0, 1], got {v}"
                ));
            }
        }
        if !(self.metrics.early_stop.distance > 0.0 && self.metrics.early_stop.steer_eps > 0.0) {
            return invalid("metrics.early_stop values must be positive".into());
        }
        for spec in &self.buckets.specs {
            if spec.weight < 0.0 {
                return invalid(format!("bucket `{}` has negative weight", spec.name));
            }
        }
        if self.io.jobs == 0 {
            return invalid("io.jobs must be >= 1".into());
        }
        Ok(())
    }
}
