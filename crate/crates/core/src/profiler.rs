//! Per-axis quintic trajectory generation.
//!
//! A [`ProfilerSegment`] moves one scalar degree of freedom from its current
//! position, velocity and acceleration to a target position where velocity and
//! acceleration are zero. The segment starts at the base duration and is
//! stretched by 10% at a time until its peak acceleration and jerk respect the
//! limits.
//!
//! Peaks are located exactly: acceleration is a cubic and jerk a quadratic in
//! time, so their extrema over a segment are found from polynomial roots rather
//! than from a sampled grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Duration growth factor applied per extension step.
pub const EXTENSION_FACTOR: f64 = 1.1;
/// Maximum number of extension steps before giving up.
pub const MAX_EXTENSIONS: usize = 100;
/// Relative slack on limit checks, absorbing rounding in the peak evaluation.
const LIMIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ProfilerError {
    #[error("duration cap reached after {iterations} extensions (duration {duration:.3} s)")]
    DurationCapReached { iterations: usize, duration: f64 },
    #[error("non-finite profiler input")]
    NonFinite,
    #[error("profiler limits must be positive")]
    InvalidLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilerLimits {
    pub max_accel: f64,
    pub max_jerk: f64,
    /// Starting duration `d` for every new segment (s).
    pub base_duration: f64,
}

impl Default for ProfilerLimits {
    fn default() -> Self {
        Self { max_accel: 1.0, max_jerk: 10.0, base_duration: 0.5 }
    }
}

impl ProfilerLimits {
    pub fn validate(&self) -> Result<(), ProfilerError> {
        if self.max_accel > 0.0 && self.max_jerk > 0.0 && self.base_duration > 0.0 {
            Ok(())
        } else {
            Err(ProfilerError::InvalidLimits)
        }
    }
}

/// Position, velocity and acceleration of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinState {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
}

impl KinState {
    pub fn at_rest(pos: f64) -> Self {
        Self { pos, vel: 0.0, acc: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub pos: f64,
    pub vel: f64,
    pub acc: f64,
    pub jerk: f64,
}

impl Sample {
    pub fn state(&self) -> KinState {
        KinState { pos: self.pos, vel: self.vel, acc: self.acc }
    }
}

/// Quintic in local time `τ = t - start_time`, `τ ∈ [0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilerSegment {
    pub coeffs: [f64; 6],
    pub start_time: f64,
    pub duration: f64,
    pub start: KinState,
    pub target: f64,
}

/// Coefficients of the quintic from `start` to rest at `target` after `d` seconds.
fn quintic_coeffs(start: &KinState, target: f64, d: f64) -> [f64; 6] {
    let (p0, v0, a0) = (start.pos, start.vel, start.acc);
    // residuals the higher-order terms must make up at τ = d
    let dp = target - p0 - v0 * d - 0.5 * a0 * d * d;
    let dv = -v0 - a0 * d;
    let da = -a0;
    let d2 = d * d;
    let d3 = d2 * d;
    [
        p0,
        v0,
        0.5 * a0,
        (20.0 * dp - 8.0 * dv * d + da * d2) / (2.0 * d3),
        (-30.0 * dp + 14.0 * dv * d - 2.0 * da * d2) / (2.0 * d3 * d),
        (12.0 * dp - 6.0 * dv * d + da * d2) / (2.0 * d3 * d2),
    ]
}

fn eval(c: &[f64; 6], t: f64) -> Sample {
    Sample {
        pos: c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5])))),
        vel: c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5]))),
        acc: 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5])),
        jerk: 6.0 * c[3] + t * (24.0 * c[4] + t * 60.0 * c[5]),
    }
}

/// Real roots of `a t² + b t + c` (degenerating gracefully to linear).
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

/// Exact peak |acceleration| and |jerk| over `[0, d]`.
fn peaks(c: &[f64; 6], d: f64) -> (f64, f64) {
    let inside = |t: &f64| *t > 0.0 && *t < d;
    let mut acc_candidates = vec![0.0, d];
    // jerk = 6c3 + 24c4 τ + 60c5 τ²
    acc_candidates.extend(quadratic_roots(60.0 * c[5], 24.0 * c[4], 6.0 * c[3]).into_iter().filter(inside));
    let mut jerk_candidates = vec![0.0, d];
    // snap = 24c4 + 120c5 τ
    if c[5] != 0.0 {
        let t = -24.0 * c[4] / (120.0 * c[5]);
        if inside(&t) {
            jerk_candidates.push(t);
        }
    }
    let max_acc = acc_candidates.iter().map(|&t| eval(c, t).acc.abs()).fold(0.0, f64::max);
    let max_jerk = jerk_candidates.iter().map(|&t| eval(c, t).jerk.abs()).fold(0.0, f64::max);
    (max_acc, max_jerk)
}

/// Plans a new segment from `current` toward `target_pos`, starting at `now`.
pub fn retarget(
    current: KinState,
    target_pos: f64,
    limits: &ProfilerLimits,
    now: f64,
) -> Result<ProfilerSegment, ProfilerError> {
    limits.validate()?;
    if ![current.pos, current.vel, current.acc, target_pos, now].iter().all(|v| v.is_finite()) {
        return Err(ProfilerError::NonFinite);
    }
    let acc_cap = limits.max_accel * (1.0 + LIMIT_SLACK);
    let jerk_cap = limits.max_jerk * (1.0 + LIMIT_SLACK);
    let mut duration = limits.base_duration;
    for _ in 0..=MAX_EXTENSIONS {
        let coeffs = quintic_coeffs(&current, target_pos, duration);
        let (acc, jerk) = peaks(&coeffs, duration);
        if acc <= acc_cap && jerk <= jerk_cap {
            return Ok(ProfilerSegment { coeffs, start_time: now, duration, start: current, target: target_pos });
        }
        duration *= EXTENSION_FACTOR;
    }
    Err(ProfilerError::DurationCapReached { iterations: MAX_EXTENSIONS, duration })
}

impl ProfilerSegment {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }

    pub fn is_finished(&self, t: f64) -> bool {
        t >= self.end_time()
    }

    /// Exact polynomial state at `t`, clamped to the start state before the
    /// segment and to the resting target after it.
    pub fn sample(&self, t: f64) -> Sample {
        let tau = t - self.start_time;
        if tau >= self.duration {
            return Sample { pos: self.target, ..Default::default() };
        }
        eval(&self.coeffs, tau.max(0.0))
    }

    /// Peak |acceleration| and |jerk| over the whole segment.
    pub fn peaks(&self) -> (f64, f64) {
        peaks(&self.coeffs, self.duration)
    }
}

/// Tracks one axis: remembers the active segment and re-plans when the target moves.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProfiler {
    limits: ProfilerLimits,
    segment: Option<ProfilerSegment>,
    rest: KinState,
}

impl AxisProfiler {
    pub fn new(limits: ProfilerLimits, initial_pos: f64) -> Self {
        Self { limits, segment: None, rest: KinState::at_rest(initial_pos) }
    }

    pub fn target(&self) -> f64 {
        self.segment.map_or(self.rest.pos, |s| s.target)
    }

    /// Cuts a new segment if `target` differs from the current one. The new
    /// segment is seeded from the previous segment's state at `now`, so the
    /// output stays C² across the switch.
    pub fn set_target(&mut self, target: f64, now: f64) -> Result<(), ProfilerError> {
        if target == self.target() {
            return Ok(());
        }
        let current = self.sample(now).state();
        self.segment = Some(retarget(current, target, &self.limits, now)?);
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Sample {
        match &self.segment {
            Some(s) => s.sample(t),
            None => Sample { pos: self.rest.pos, ..Default::default() },
        }
    }

    pub fn is_settled(&self, t: f64) -> bool {
        self.segment.is_none_or(|s| s.is_finished(t))
    }
}
