//! Offline closed-loop episodes: script targets → quintic profilers → solver →
//! simulator, once per control period.

use thiserror::Error;

use crate::geometry::{Pose, Twist};
use crate::profiler::{AxisProfiler, ProfilerError, ProfilerLimits};
use crate::record::{config_fingerprint, EpisodeRecord, EpisodeRow};
use crate::script::{CommandScript, ScriptEntry};
use crate::sim::{advance, SimConfig, SimError, SimState};
use crate::solver::{solve, CommandMode, RateCommand, SolverError};

/// Safety net for scripts without an explicit duration.
const MAX_STEPS: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StepFailure {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Profiler(#[from] ProfilerError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EpisodeError {
    #[error("invalid setup: {0}")]
    Setup(SimError),
    #[error("step {step} (t = {time:.3} s): {source}")]
    Step {
        step: u64,
        time: f64,
        #[source]
        source: StepFailure,
    },
    #[error("episode did not settle within {0} steps")]
    Unbounded(u64),
}

/// Everything needed to run an episode besides the script.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSetup {
    pub sim: SimConfig,
    pub initial_flange: Pose,
    /// Limits for axes measured in meters.
    pub linear_limits: ProfilerLimits,
    /// Limits for axes measured in radians.
    pub angular_limits: ProfilerLimits,
}

/// Four per-axis profilers for one command mode. Positions are offsets from
/// the state at mode entry, so every axis starts at rest at zero.
#[derive(Debug, Clone)]
pub struct TargetTracker {
    mode: CommandMode,
    axes: [AxisProfiler; 4],
}

impl TargetTracker {
    pub fn new(mode: CommandMode, linear: ProfilerLimits, angular: ProfilerLimits) -> Self {
        // cartesian: x, y, z (m) + roll (rad); spherical: pitch, yaw, roll (rad) + insertion (m)
        let kinds = match mode {
            CommandMode::Spherical => [angular, angular, angular, linear],
            _ => [linear, linear, linear, angular],
        };
        Self { mode, axes: kinds.map(|l| AxisProfiler::new(l, 0.0)) }
    }

    pub fn mode(&self) -> CommandMode {
        self.mode
    }

    pub fn set_targets(&mut self, targets: [f64; 4], now: f64) -> Result<(), ProfilerError> {
        for (axis, t) in self.axes.iter_mut().zip(targets) {
            axis.set_target(t, now)?;
        }
        Ok(())
    }

    /// Rate command from the profilers' instantaneous velocities.
    pub fn command(&self, t: f64) -> RateCommand {
        let v = [0, 1, 2, 3].map(|i| self.axes[i].sample(t).vel);
        RateCommand::from_values(self.mode, v)
    }

    pub fn is_settled(&self, t: f64) -> bool {
        self.axes.iter().all(|a| a.is_settled(t))
    }
}

/// Control-period index at which a script entry takes effect.
fn apply_step(entry: &ScriptEntry, dt: f64) -> u64 {
    (entry.time / dt - 1e-6).ceil().max(0.0) as u64
}

/// Runs a script deterministically and returns the full per-step record.
///
/// The record holds one row per control period plus a final row with the end
/// state, so a `duration` of `T` yields `round(T / dt) + 1` rows.
pub fn run_episode(script: &CommandScript, setup: &EpisodeSetup) -> Result<EpisodeRecord, EpisodeError> {
    let cfg = &setup.sim;
    cfg.validate().map_err(EpisodeError::Setup)?;
    setup.linear_limits.validate().map_err(|_| EpisodeError::Setup(SimError::InvalidConfig("linear limits")))?;
    setup.angular_limits.validate().map_err(|_| EpisodeError::Setup(SimError::InvalidConfig("angular limits")))?;
    let mut state = SimState::new(setup.initial_flange, cfg).map_err(EpisodeError::Setup)?;

    let dt = cfg.dt;
    let p_rcm = cfg.rcm.p_rcm;
    let mut record = EpisodeRecord::new(dt, config_fingerprint(&cfg.rcm, &cfg.calib));
    let total_steps = script.duration.map(|d| (d / dt).round() as u64);
    let last_entry_step = script.entries.last().map(|e| apply_step(e, dt));

    let mut tracker: Option<TargetTracker> = None;
    let mut next = 0usize;

    loop {
        let k = state.step;
        let t = state.time;
        let fail = |source: StepFailure| EpisodeError::Step { step: k, time: t, source };

        let done = match total_steps {
            Some(n) => k >= n,
            None => {
                next == script.entries.len()
                    && last_entry_step.is_none_or(|s| k > s)
                    && tracker.as_ref().is_none_or(|tr| tr.is_settled(t))
            }
        };
        if done {
            break;
        }
        if k >= MAX_STEPS {
            return Err(EpisodeError::Unbounded(MAX_STEPS));
        }

        while let Some(entry) = script.entries.get(next).filter(|e| apply_step(e, dt) <= k) {
            if tracker.as_ref().map(|tr| tr.mode()) != Some(entry.mode) {
                tracker = Some(TargetTracker::new(entry.mode, setup.linear_limits, setup.angular_limits));
            }
            let tr = tracker.as_mut().expect("tracker set above");
            tr.set_targets(entry.targets, t).map_err(|e| fail(e.into()))?;
            next += 1;
        }

        let command = tracker.as_ref().map_or(RateCommand::Hold, |tr| tr.command(t));
        let solved = solve(&state.control, &command, &cfg.rcm).map_err(|e| fail(e.into()))?;
        let (next_state, _) = advance(&state, &solved, cfg).map_err(|e| fail(e.into()))?;
        record.rows.push(EpisodeRow::capture(&state, command, solved, p_rcm));
        state = next_state;
    }

    record.rows.push(EpisodeRow::capture(&state, RateCommand::Hold, Twist::zero(), p_rcm));
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{point_to_line_distance, pose, Vec3};

    fn setup() -> EpisodeSetup {
        EpisodeSetup {
            sim: SimConfig::default(),
            initial_flange: pose(Vec3::new(0.0, 0.0, 0.3), Default::default()),
            linear_limits: ProfilerLimits::default(),
            angular_limits: ProfilerLimits::default(),
        }
    }

    fn max_deviation(rec: &EpisodeRecord, s: &EpisodeSetup) -> f64 {
        rec.rows
            .iter()
            .map(|r| {
                let (tip, dir) = s.sim.calib.shaft_line(&r.flange);
                point_to_line_distance(&s.sim.rcm.p_rcm, &tip, &dir).unwrap()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn empty_script_records_initial_state() {
        let rec = run_episode(&CommandScript::new(), &setup()).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.rows[0].time, 0.0);
        assert_eq!(rec.rows[0].command, RateCommand::Hold);
    }

    #[test]
    fn row_count_follows_duration() {
        let script = CommandScript::new().with_duration(1.0);
        assert_eq!(run_episode(&script, &setup()).unwrap().len(), 501);
    }

    #[test]
    fn single_pivot_keeps_constraint() {
        let s = setup();
        let script = CommandScript::new().with_duration(5.0).at(0.1, CommandMode::Spherical, [0.2, 0.0, 0.0, 0.0]);
        let rec = run_episode(&script, &s).unwrap();
        assert!(max_deviation(&rec, &s) <= 1e-6);
        // the pivot actually happened: shaft tilted by 0.2 rad about x
        let last = rec.rows.last().unwrap();
        assert!((last.flange.rotation.angle() - 0.2).abs() < 1e-3);
    }

    #[test]
    fn cartesian_tip_reaches_target() {
        let s = setup();
        let script = CommandScript::new().at(0.0, CommandMode::Cartesian, [0.01, -0.02, -0.01, 0.0]);
        let rec = run_episode(&script, &s).unwrap();
        let tip = rec.rows.last().unwrap().tip;
        // open-loop rate tracking: the tip follows arcs about the trocar, not chords
        assert!((tip - Vec3::new(0.01, -0.02, -0.01)).norm() < 1e-4, "{tip:?}");
        assert!(max_deviation(&rec, &s) <= 1e-6);
    }

    #[test]
    fn runs_are_bit_identical() {
        let script = CommandScript::new()
            .with_duration(2.0)
            .at(0.0, CommandMode::Spherical, [0.1, -0.05, 0.3, 0.01])
            .at(1.0, CommandMode::Cartesian, [0.0, 0.01, 0.0, 0.0]);
        let a = run_episode(&script, &setup()).unwrap();
        let b = run_episode(&script, &setup()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_step_index() {
        // insertion target far past the limit speed: the profiler happily plans it,
        // the solver's speed gate stops it
        let mut s = setup();
        s.linear_limits = ProfilerLimits { max_accel: 100.0, max_jerk: 1e4, base_duration: 0.5 };
        let script = CommandScript::new().with_duration(1.0).at(0.2, CommandMode::Spherical, [0.0, 0.0, 0.0, 0.1]);
        match run_episode(&script, &s) {
            Err(EpisodeError::Step {
                step,
                source: StepFailure::Solver(SolverError::CommandLimitExceeded { .. }),
                ..
            }) => {
                assert!(step > 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mode_switch_reseeds_from_rest() {
        let mut tr = TargetTracker::new(CommandMode::Cartesian, ProfilerLimits::default(), ProfilerLimits::default());
        tr.set_targets([0.01, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert!(tr.command(0.1).values()[0] > 0.0);
        assert!(tr.is_settled(10.0));
        assert_eq!(tr.command(10.0).values(), [0.0; 4]);
    }
}
