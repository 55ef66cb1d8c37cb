//! Episode metrics: RCM deviation statistics and speed-profile smoothness.

mod deviation;
mod report;
mod series;
mod smoothness;

use thiserror::Error;

pub use deviation::{median, rcm_deviation_series, DeviationStats};
pub use report::{render_text, write_table, EpisodeReport, TABLE_COLUMNS};
pub use series::{downsample, tip_speed, TimedSeries};
pub use smoothness::{episode_smoothness, ldlj, sparc, SmoothnessOptions, SmoothnessResult, SparcParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("episode has no samples")]
    EmptyEpisode,
    #[error("series sampled at {input_hz:.3} Hz cannot be resampled to {target_hz:.3} Hz")]
    RateTooLow { input_hz: f64, target_hz: f64 },
    #[error("series has {len} samples, at least {min} needed")]
    SeriesTooShort { len: usize, min: usize },
    #[error("signal is identically zero")]
    AllZeroSignal,
    #[error("peak speed is zero")]
    ZeroPeakSpeed,
    #[error("speed profile has no jerk; LDLJ is unbounded")]
    ZeroJerk,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
