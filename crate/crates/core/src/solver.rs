//! Closed-form mapping from instrument-tip commands to flange twists that keep
//! the shaft pivoting about the trocar point.
//!
//! Two input parameterizations are supported:
//!
//! * **Cartesian tip velocity**: a desired tip velocity plus a roll rate about
//!   the shaft. The pivoting part of the tip motion becomes a pure rotation about
//!   the trocar; the part along the shaft becomes insertion.
//! * **Spherical**: pitch and yaw rates about the base x and y axes, a roll rate
//!   about the flange-to-trocar axis, and an insertion speed.
//!
//! In both cases the returned flange linear velocity cancels the velocity that
//! the angular rate would otherwise induce at the trocar, so the material point
//! of the shaft at the trocar only ever slides along the shaft.
//!
//! The two modes roll about different axes (the tip-to-trocar shaft vector in
//! Cartesian mode, the flange-to-trocar vector in spherical mode). They agree
//! when flange, trocar and tip are collinear.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_finite, rotate, Pose, Twist, Vec3, UNIT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SolverError {
    #[error("instrument insertion {depth:.6} m is below the minimum {min:.6} m")]
    InsertionTooShallow { depth: f64, min: f64 },
    #[error("command exceeds limit: {what} = {value} > {limit}")]
    CommandLimitExceeded { what: &'static str, value: f64, limit: f64 },
    #[error("flange coincides with the trocar point")]
    DegenerateGeometry,
    #[error("command contains non-finite values")]
    NonFiniteCommand,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Trocar location and the kinematic limits enforced on every command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcmConfig {
    /// Trocar point in the base frame (m).
    pub p_rcm: Vec3,
    pub min_insertion: f64,
    pub max_insertion: f64,
    /// Limit on the commanded tip speed and on spherical insertion speed (m/s).
    pub max_tip_speed: f64,
    /// Limit on roll rate and pivot rate (rad/s).
    pub max_angular_rate: f64,
}

impl Default for RcmConfig {
    fn default() -> Self {
        Self {
            p_rcm: Vec3::new(0.0, 0.0, 0.1),
            min_insertion: 0.02,
            max_insertion: 0.25,
            max_tip_speed: 0.1,
            max_angular_rate: 1.0,
        }
    }
}

impl RcmConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !is_finite(&self.p_rcm) {
            return Err(SolverError::InvalidConfig("p_rcm must be finite"));
        }
        if !(self.min_insertion > 0.0 && self.min_insertion < self.max_insertion) {
            return Err(SolverError::InvalidConfig("need 0 < min_insertion < max_insertion"));
        }
        if !(self.max_tip_speed > 0.0 && self.max_angular_rate > 0.0) {
            return Err(SolverError::InvalidConfig("speed limits must be positive"));
        }
        Ok(())
    }
}

/// Instrument geometry expressed in the flange frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShaftCalibration {
    /// Vector from the flange origin to the instrument tip.
    pub tip_offset_flange: Vec3,
    /// Unit shaft direction, pointing from the holder toward the tip.
    pub shaft_dir_flange: Vec3,
}

impl Default for ShaftCalibration {
    fn default() -> Self {
        Self { tip_offset_flange: Vec3::new(0.0, 0.0, -0.3), shaft_dir_flange: Vec3::new(0.0, 0.0, -1.0) }
    }
}

impl ShaftCalibration {
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.shaft_dir_flange.norm();
        if !((n - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(SolverError::InvalidConfig("shaft_dir_flange must be unit length"));
        }
        if !(self.tip_offset_flange.dot(&self.shaft_dir_flange) > 0.0) {
            return Err(SolverError::InvalidConfig("tip_offset_flange must extend along shaft_dir_flange"));
        }
        Ok(())
    }

    /// Tip position and unit shaft direction in the base frame for a flange pose.
    pub fn shaft_line(&self, flange: &Pose) -> (Vec3, Vec3) {
        let tip = flange.translation.vector + rotate(&flange.rotation, &self.tip_offset_flange);
        (tip, rotate(&flange.rotation, &self.shaft_dir_flange))
    }
}

/// Instrument vectors in the base frame.
///
/// `r_ee = p_rcm - p_ee` and `r_shaft = p_tip - p_rcm` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstrumentState {
    pub p_ee: Vec3,
    pub p_tip: Vec3,
    pub r_ee: Vec3,
    pub r_shaft: Vec3,
}

impl InstrumentState {
    pub fn from_points(p_ee: Vec3, p_tip: Vec3, p_rcm: Vec3) -> Self {
        Self { p_ee, p_tip, r_ee: p_rcm - p_ee, r_shaft: p_tip - p_rcm }
    }

    pub fn p_rcm(&self) -> Vec3 {
        self.p_ee + self.r_ee
    }

    pub fn shaft_axis(&self) -> Vec3 {
        self.r_shaft.normalize()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianTipCommand {
    pub v_tip: Vec3,
    pub omega_roll: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SphericalCommand {
    pub omega_pitch: f64,
    pub omega_yaw: f64,
    pub omega_roll: f64,
    pub v_trans: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandMode {
    Hold,
    Cartesian,
    Spherical,
}

impl CommandMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandMode::Hold => "hold",
            CommandMode::Cartesian => "cartesian",
            CommandMode::Spherical => "spherical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hold" => Some(CommandMode::Hold),
            "cartesian" => Some(CommandMode::Cartesian),
            "spherical" => Some(CommandMode::Spherical),
            _ => None,
        }
    }
}

/// A velocity-level command in either parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateCommand {
    Hold,
    Cartesian(CartesianTipCommand),
    Spherical(SphericalCommand),
}

impl RateCommand {
    pub fn mode(&self) -> CommandMode {
        match self {
            RateCommand::Hold => CommandMode::Hold,
            RateCommand::Cartesian(_) => CommandMode::Cartesian,
            RateCommand::Spherical(_) => CommandMode::Spherical,
        }
    }

    /// Flat representation: `(vx, vy, vz, roll)` or `(pitch, yaw, roll, trans)`.
    pub fn values(&self) -> [f64; 4] {
        match self {
            RateCommand::Hold => [0.0; 4],
            RateCommand::Cartesian(c) => [c.v_tip.x, c.v_tip.y, c.v_tip.z, c.omega_roll],
            RateCommand::Spherical(c) => [c.omega_pitch, c.omega_yaw, c.omega_roll, c.v_trans],
        }
    }

    pub fn from_values(mode: CommandMode, v: [f64; 4]) -> Self {
        match mode {
            CommandMode::Hold => RateCommand::Hold,
            CommandMode::Cartesian => {
                RateCommand::Cartesian(CartesianTipCommand { v_tip: Vec3::new(v[0], v[1], v[2]), omega_roll: v[3] })
            }
            CommandMode::Spherical => RateCommand::Spherical(SphericalCommand {
                omega_pitch: v[0],
                omega_yaw: v[1],
                omega_roll: v[2],
                v_trans: v[3],
            }),
        }
    }

    /// Euclidean norm of the flat values; the scale used in constraint tolerances.
    pub fn magnitude(&self) -> f64 {
        self.values().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn check_limits(&self, config: &RcmConfig) -> Result<(), SolverError> {
        match self {
            RateCommand::Hold => Ok(()),
            RateCommand::Cartesian(c) => check_cartesian_limits(c, config),
            RateCommand::Spherical(c) => check_spherical_limits(c, config),
        }
    }
}

fn limit(what: &'static str, value: f64, limit: f64) -> Result<(), SolverError> {
    if value > limit {
        Err(SolverError::CommandLimitExceeded { what, value, limit })
    } else {
        Ok(())
    }
}

fn check_cartesian_limits(cmd: &CartesianTipCommand, config: &RcmConfig) -> Result<(), SolverError> {
    if !(is_finite(&cmd.v_tip) && cmd.omega_roll.is_finite()) {
        return Err(SolverError::NonFiniteCommand);
    }
    limit("tip speed", cmd.v_tip.norm(), config.max_tip_speed)?;
    limit("roll rate", cmd.omega_roll.abs(), config.max_angular_rate)
}

fn check_spherical_limits(cmd: &SphericalCommand, config: &RcmConfig) -> Result<(), SolverError> {
    let vals = [cmd.omega_pitch, cmd.omega_yaw, cmd.omega_roll, cmd.v_trans];
    if !vals.iter().all(|v| v.is_finite()) {
        return Err(SolverError::NonFiniteCommand);
    }
    limit("pivot rate", cmd.omega_pitch.hypot(cmd.omega_yaw), config.max_angular_rate)?;
    limit("roll rate", cmd.omega_roll.abs(), config.max_angular_rate)?;
    limit("insertion speed", cmd.v_trans.abs(), config.max_tip_speed)
}

/// Rebuilds the instrument vectors from a flange pose.
///
/// Fails when the tip is closer than `min_insertion` past the trocar, measured
/// along the shaft (a tip retracted behind the trocar has negative depth).
pub fn reconstruct_state(
    flange: &Pose,
    calib: &ShaftCalibration,
    config: &RcmConfig,
) -> Result<InstrumentState, SolverError> {
    let (p_tip, axis) = calib.shaft_line(flange);
    let state = InstrumentState::from_points(flange.translation.vector, p_tip, config.p_rcm);
    let depth = state.r_shaft.dot(&axis);
    if !(depth >= config.min_insertion) {
        return Err(SolverError::InsertionTooShallow { depth, min: config.min_insertion });
    }
    Ok(state)
}

fn guard_insertion(state: &InstrumentState, config: &RcmConfig) -> Result<f64, SolverError> {
    let depth = state.r_shaft.norm();
    if !(depth >= config.min_insertion) {
        return Err(SolverError::InsertionTooShallow { depth, min: config.min_insertion });
    }
    Ok(depth)
}

/// Flange twist realizing a Cartesian tip velocity and roll rate.
pub fn solve_cartesian_tip(
    state: &InstrumentState,
    cmd: &CartesianTipCommand,
    config: &RcmConfig,
) -> Result<Twist, SolverError> {
    check_cartesian_limits(cmd, config)?;
    let depth = guard_insertion(state, config)?;
    let r = &state.r_shaft;
    let axis = r / depth;

    let omega_pivot = r.cross(&cmd.v_tip) / (depth * depth);
    let omega = omega_pivot + axis * cmd.omega_roll;
    let v_insertion = axis * cmd.v_tip.dot(&axis);
    let linear = v_insertion - omega.cross(&state.r_ee);
    Ok(Twist::new(linear, omega))
}

/// Flange twist realizing spherical pitch/yaw/roll rates and insertion speed.
///
/// Pitch and yaw are rates about the base x and y axes.
pub fn solve_spherical(
    state: &InstrumentState,
    cmd: &SphericalCommand,
    config: &RcmConfig,
) -> Result<Twist, SolverError> {
    check_spherical_limits(cmd, config)?;
    let reach = state.r_ee.norm();
    if !(reach > 0.0) {
        return Err(SolverError::DegenerateGeometry);
    }
    let axis = state.r_ee / reach;
    let omega = Vec3::new(cmd.omega_pitch, cmd.omega_yaw, 0.0) + axis * cmd.omega_roll;
    let linear = axis * cmd.v_trans - omega.cross(&state.r_ee);
    Ok(Twist::new(linear, omega))
}

pub fn solve(state: &InstrumentState, cmd: &RateCommand, config: &RcmConfig) -> Result<Twist, SolverError> {
    match cmd {
        RateCommand::Hold => Ok(Twist::zero()),
        RateCommand::Cartesian(c) => solve_cartesian_tip(state, c, config),
        RateCommand::Spherical(c) => solve_spherical(state, c, config),
    }
}

/// Re-expresses a velocity given in the camera frame in the robot base frame.
/// Only the camera orientation matters for a free vector.
pub fn remap_camera_command(cmd_in_camera: &Vec3, camera_pose_base: &Pose) -> Vec3 {
    rotate(&camera_pose_base.rotation, cmd_in_camera)
}

/// Velocity of the shaft material point currently located at the trocar.
pub fn trocar_point_velocity(twist: &Twist, state: &InstrumentState) -> Vec3 {
    twist.point_velocity(&state.r_ee)
}

/// Rigid-body velocity of the instrument tip under `twist`.
pub fn tip_velocity(twist: &Twist, state: &InstrumentState) -> Vec3 {
    twist.point_velocity(&(state.p_tip - state.p_ee))
}
