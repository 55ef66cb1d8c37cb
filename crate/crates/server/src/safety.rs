//! The gate every command passes before it may reach the solver.

use std::fmt;

use rcm_core::config::ServerSection;
use rcm_core::geometry::Vec3;
use rcm_core::sim::{advance, SimConfig, SimError, SimState};
use rcm_core::solver::{solve, RateCommand, SolverError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    LimitExceeded,
    Workspace,
    ShallowInsertion,
    StaleCommand,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::LimitExceeded => "limit-exceeded",
            RejectReason::Workspace => "workspace",
            RejectReason::ShallowInsertion => "shallow-insertion",
            RejectReason::StaleCommand => "stale-command",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyConfig {
    pub staleness_s: f64,
    pub workspace_min: Vec3,
    pub workspace_max: Vec3,
}

impl From<&ServerSection> for SafetyConfig {
    fn from(s: &ServerSection) -> Self {
        Self { staleness_s: s.staleness_s, workspace_min: s.workspace_min, workspace_max: s.workspace_max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyVerdict {
    pub accepted: bool,
    pub reason: Option<RejectReason>,
    pub detail: Option<String>,
}

impl SafetyVerdict {
    pub fn accept() -> Self {
        Self { accepted: true, reason: None, detail: None }
    }

    pub fn reject(reason: RejectReason, detail: impl Into<String>) -> Self {
        Self { accepted: false, reason: Some(reason), detail: Some(detail.into()) }
    }
}

/// Checks, in order: command age, speed/rate limits, then a one-step
/// prediction of the tip (insertion depth and workspace box).
///
/// `Hold` is always accepted: it is the fallback posture.
pub fn validate_action(
    cmd: &RateCommand,
    age_s: f64,
    state: &SimState,
    sim: &SimConfig,
    safety: &SafetyConfig,
) -> SafetyVerdict {
    if *cmd == RateCommand::Hold {
        return SafetyVerdict::accept();
    }
    if !(age_s <= safety.staleness_s) {
        return SafetyVerdict::reject(
            RejectReason::StaleCommand,
            format!("command age {age_s:.3} s exceeds {} s", safety.staleness_s),
        );
    }
    if let Err(e) = cmd.check_limits(&sim.rcm) {
        return SafetyVerdict::reject(RejectReason::LimitExceeded, e.to_string());
    }
    let twist = match solve(&state.control, cmd, &sim.rcm) {
        Ok(t) => t,
        Err(e) => return SafetyVerdict::reject(RejectReason::LimitExceeded, e.to_string()),
    };
    let next = match advance(state, &twist, sim) {
        Ok((next, _)) => next,
        Err(SimError::Solver(e @ SolverError::InsertionTooShallow { .. })) => {
            return SafetyVerdict::reject(RejectReason::ShallowInsertion, e.to_string())
        }
        Err(e) => return SafetyVerdict::reject(RejectReason::LimitExceeded, e.to_string()),
    };
    let tip = next.control.p_tip;
    let inside = (0..3).all(|i| tip[i] >= safety.workspace_min[i] && tip[i] <= safety.workspace_max[i]);
    if !inside {
        return SafetyVerdict::reject(
            RejectReason::Workspace,
            format!("predicted tip {:?} leaves the workspace box", tip.as_slice()),
        );
    }
    let depth = next.control.r_shaft.dot(&next.control.shaft_axis());
    if depth > sim.rcm.max_insertion {
        return SafetyVerdict::reject(
            RejectReason::Workspace,
            format!("predicted insertion {depth:.4} m exceeds {} m", sim.rcm.max_insertion),
        );
    }
    SafetyVerdict::accept()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcm_core::config::Config;
    use rcm_core::solver::{CartesianTipCommand, SphericalCommand};

    fn setup() -> (SimState, SimConfig, SafetyConfig) {
        let cfg = Config::default();
        let sim = cfg.sim_config();
        let state = SimState::new(cfg.initial_pose(), &sim).unwrap();
        (state, sim, SafetyConfig::from(&cfg.server))
    }

    fn cart(v: [f64; 3]) -> RateCommand {
        RateCommand::Cartesian(CartesianTipCommand { v_tip: Vec3::from(v), omega_roll: 0.0 })
    }

    #[test]
    fn in_limits_accepted() {
        let (s, sim, safety) = setup();
        assert!(validate_action(&cart([0.01, 0.0, 0.0]), 0.0, &s, &sim, &safety).accepted);
    }

    #[test]
    fn double_speed_rejected() {
        let (s, sim, safety) = setup();
        let v = validate_action(&cart([0.2, 0.0, 0.0]), 0.0, &s, &sim, &safety);
        assert_eq!(v.reason, Some(RejectReason::LimitExceeded));
    }

    #[test]
    fn stale_rejected_first() {
        let (s, sim, safety) = setup();
        let v = validate_action(&cart([0.2, 0.0, 0.0]), 0.5, &s, &sim, &safety);
        assert_eq!(v.reason, Some(RejectReason::StaleCommand));
    }

    #[test]
    fn hold_always_accepted() {
        let (s, sim, safety) = setup();
        assert!(validate_action(&RateCommand::Hold, 10.0, &s, &sim, &safety).accepted);
    }

    #[test]
    fn non_finite_is_limit() {
        let (s, sim, safety) = setup();
        let v = validate_action(&cart([f64::NAN, 0.0, 0.0]), 0.0, &s, &sim, &safety);
        assert_eq!(v.reason, Some(RejectReason::LimitExceeded));
    }

    #[test]
    fn workspace_box() {
        let (s, sim, mut safety) = setup();
        // tip starts at the origin; shrink the box so one step in +x leaves it
        safety.workspace_max = Vec3::new(1e-5, 0.1, 0.1);
        let v = validate_action(&cart([0.01, 0.0, 0.0]), 0.0, &s, &sim, &safety);
        assert_eq!(v.reason, Some(RejectReason::Workspace));
        assert!(validate_action(&cart([-0.01, 0.0, 0.0]), 0.0, &s, &sim, &safety).accepted);
    }

    #[test]
    fn max_insertion_is_workspace() {
        let (s, mut sim, safety) = setup();
        sim.rcm.max_insertion = 0.1 + 1e-5;
        let push = RateCommand::Spherical(SphericalCommand { v_trans: 0.01, ..Default::default() });
        let v = validate_action(&push, 0.0, &s, &sim, &safety);
        assert_eq!(v.reason, Some(RejectReason::Workspace));
    }
}
