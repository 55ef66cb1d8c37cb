//! Remote-center-of-motion control for a rigid laparoscopic instrument.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: vectors, rotations, poses and twists;
//! * [`solver`]: closed-form tip-command to flange-twist mapping that keeps the
//!   shaft pivoting about the trocar;
//! * [`profiler`]: jerk-limited quintic target tracking per axis;
//! * [`sim`]: the kinematic flange integrator;
//! * [`episode`] and [`script`]: deterministic offline runs from a command script;
//! * [`record`]: the episode CSV format;
//! * [`metrics`]: RCM deviation, SPARC and LDLJ;
//! * [`config`]: the TOML configuration file.
//!
//! ```
//! use rcm_core::prelude::*;
//!
//! let cfg = Config::default();
//! let script = CommandScript::new()
//!     .with_duration(2.0)
//!     .at(0.0, CommandMode::Spherical, [0.1, 0.0, 0.0, 0.0]);
//! let episode = run_episode(&script, &cfg.episode_setup()).unwrap();
//! let dev = rcm_deviation_series(&episode, &cfg.rcm.p_rcm, &cfg.calibration).unwrap();
//! assert!(dev.max_mm < 1e-3);
//! ```

pub mod config;
pub mod episode;
pub mod geometry;
pub mod metrics;
pub mod profiler;
pub mod record;
pub mod script;
pub mod sim;
pub mod solver;

pub mod prelude {
    pub use crate::config::Config;
    pub use crate::episode::{run_episode, EpisodeSetup};
    pub use crate::geometry::{Pose, Rotation, Twist, Vec3};
    pub use crate::metrics::{episode_smoothness, rcm_deviation_series, SmoothnessOptions};
    pub use crate::profiler::ProfilerLimits;
    pub use crate::record::EpisodeRecord;
    pub use crate::script::CommandScript;
    pub use crate::sim::{SimConfig, SimState};
    pub use crate::solver::{solve, CommandMode, RateCommand, RcmConfig, ShaftCalibration};
}
