//! TOML configuration shared by the offline runner, the metrics pipeline and
//! the control server.
//!
//! Every section is optional; missing keys take the defaults below.
//!
//! ```toml
//! [rcm]
//! p_rcm = [0.0, 0.0, 0.1]
//! min_insertion = 0.02
//! max_insertion = 0.25
//! max_tip_speed = 0.1
//! max_angular_rate = 1.0
//!
//! [calibration]
//! tip_offset_flange = [0.0, 0.0, -0.3]
//! shaft_dir_flange = [0.0, 0.0, -1.0]
//!
//! [initial_flange]
//! position = [0.0, 0.0, 0.3]
//! orientation_wxyz = [1.0, 0.0, 0.0, 0.0]
//!
//! [profiler.linear]
//! max_accel = 1.0
//! max_jerk = 10.0
//! base_duration = 0.5
//!
//! [profiler.angular]
//! max_accel = 1.0
//! max_jerk = 10.0
//! base_duration = 0.5
//!
//! [sim]
//! dt = 0.002
//! step_consistent = true
//! # perturbation = { amplitude = 5e-5, frequency = 1.0, direction = [1.0, 0.0, 0.0] }
//!
//! [server]
//! tcp_port = 5555
//! ws_port = 8765
//! stream_rate_hz = 60.0
//! staleness_s = 0.1
//! workspace_min = [-0.15, -0.15, -0.2]
//! workspace_max = [0.15, 0.15, 0.1]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::EpisodeSetup;
use crate::geometry::{pose, rotation_from_wxyz, Pose, Vec3};
use crate::profiler::ProfilerLimits;
use crate::sim::{Perturbation, SimConfig, SimError};
use crate::solver::{RcmConfig, ShaftCalibration};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlangeInit {
    pub position: Vec3,
    /// Scalar-first unit quaternion.
    pub orientation_wxyz: [f64; 4],
}

impl Default for FlangeInit {
    fn default() -> Self {
        Self { position: Vec3::new(0.0, 0.0, 0.3), orientation_wxyz: [1.0, 0.0, 0.0, 0.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilerSection {
    pub linear: ProfilerLimits,
    pub angular: ProfilerLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub perturbation: Option<Perturbation>,
    pub step_consistent: bool,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { dt: 0.002, perturbation: None, step_consistent: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub tcp_port: u16,
    pub ws_port: u16,
    pub stream_rate_hz: f64,
    /// Commands older than this are refused and the robot holds (s).
    pub staleness_s: f64,
    /// Axis-aligned box the tip must stay inside (base frame, m).
    pub workspace_min: Vec3,
    pub workspace_max: Vec3,
}

impl Default for ServerSection {
    fn default() -> Self {
        Self {
            tcp_port: 5555,
            ws_port: 8765,
            stream_rate_hz: 60.0,
            staleness_s: 0.1,
            workspace_min: Vec3::new(-0.15, -0.15, -0.2),
            workspace_max: Vec3::new(0.15, 0.15, 0.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub rcm: RcmConfig,
    pub calibration: ShaftCalibration,
    pub initial_flange: FlangeInit,
    pub profiler: ProfilerSection,
    pub sim: SimSection,
    pub server: ServerSection,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.sim_config().validate().map_err(|e| invalid(&e))?;
        self.profiler.linear.validate().map_err(|e| invalid(&format!("profiler.linear: {e}")))?;
        self.profiler.angular.validate().map_err(|e| invalid(&format!("profiler.angular: {e}")))?;
        let q = self.initial_flange.orientation_wxyz;
        if !((q.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() <= 1e-9) {
            return Err(ConfigError::Invalid("initial_flange.orientation_wxyz must be unit length".into()));
        }
        crate::sim::SimState::new(self.initial_pose(), &self.sim_config())
            .map_err(|e: SimError| ConfigError::Invalid(format!("initial flange pose: {e}")))?;
        let s = &self.server;
        if !(s.stream_rate_hz > 0.0 && s.staleness_s > 0.0) {
            return Err(ConfigError::Invalid("server rates must be positive".into()));
        }
        if !(0..3).all(|i| s.workspace_min[i] < s.workspace_max[i]) {
            return Err(ConfigError::Invalid("workspace_min must be below workspace_max on every axis".into()));
        }
        Ok(())
    }

    pub fn initial_pose(&self) -> Pose {
        pose(self.initial_flange.position, rotation_from_wxyz(self.initial_flange.orientation_wxyz))
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            rcm: self.rcm,
            calib: self.calibration,
            perturbation: self.sim.perturbation,
            step_consistent: self.sim.step_consistent,
        }
    }

    pub fn episode_setup(&self) -> EpisodeSetup {
        EpisodeSetup {
            sim: self.sim_config(),
            initial_flange: self.initial_pose(),
            linear_limits: self.profiler.linear,
            angular_limits: self.profiler.angular,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::from_toml_str("").unwrap(), Config::default());
    }

    #[test]
    fn documented_example_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| format!("{}\n", l.trim_start_matches("//!").trim_start()))
            .collect();
        assert_eq!(Config::from_toml_str(&doc).unwrap(), Config::default());
    }

    #[test]
    fn partial_override_and_round_trip() {
        let cfg = Config::from_toml_str(
            "[sim]\ndt = 0.001\nperturbation = { amplitude = 5e-5, frequency = 2.0 }\n[rcm]\nmax_tip_speed = 0.05\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.dt, 0.001);
        assert_eq!(cfg.rcm.max_tip_speed, 0.05);
        assert_eq!(cfg.rcm.min_insertion, 0.02);
        assert_eq!(cfg.sim.perturbation.unwrap().direction, Vec3::x());
        assert_eq!(Config::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "[sim]\ndt = -1.0\n",
            "[rcm]\nmin_insertion = 0.5\n",
            "[initial_flange]\nposition = [0.0, 0.0, 0.39]\norientation_wxyz = [1.0, 0.0, 0.0, 0.0]\n",
            "[calibration]\nshaft_dir_flange = [0.0, 0.0, -2.0]\ntip_offset_flange = [0.0, 0.0, -0.3]\n",
            "[server]\nworkspace_min = [1.0, 0.0, 0.0]\n",
            "[rcm]\nunknown_key = 1\n",
        ] {
            assert!(Config::from_toml_str(text).is_err(), "{text}");
        }
    }
}
