//! The virtual robot: a rigid flange integrated under commanded twists.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{exp_rotation, Pose, Twist, Vec3};
use crate::solver::{reconstruct_state, InstrumentState, RcmConfig, ShaftCalibration, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error("non-finite twist")]
    NonFiniteTwist,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Sinusoidal lateral displacement of the physical instrument.
///
/// The physical flange is the commanded flange shifted by `offset(t)`, as if
/// compliant tissue at the insertion site pushed the shaft around, while the
/// controller keeps integrating and aiming at the nominal trocar point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Peak displacement (m).
    pub amplitude: f64,
    pub frequency: f64,
    /// Unit displacement direction in the base frame.
    #[serde(default = "default_perturbation_direction")]
    pub direction: Vec3,
}

fn default_perturbation_direction() -> Vec3 {
    Vec3::x()
}

impl Perturbation {
    pub fn offset(&self, t: f64) -> Vec3 {
        self.direction * (self.amplitude * (TAU * self.frequency * t).sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub rcm: RcmConfig,
    pub calib: ShaftCalibration,
    pub perturbation: Option<Perturbation>,
    /// Convert solver twists with [`step_consistent_twist`] before integrating.
    pub step_consistent: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            rcm: RcmConfig::default(),
            calib: ShaftCalibration::default(),
            perturbation: None,
            step_consistent: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig("dt must be positive"));
        }
        self.rcm.validate()?;
        self.calib.validate()?;
        if let Some(p) = &self.perturbation {
            if !(p.amplitude >= 0.0 && p.frequency >= 0.0) {
                return Err(SimError::InvalidConfig("perturbation amplitude and frequency must be >= 0"));
            }
            if !((p.direction.norm() - 1.0).abs() <= 1e-9) {
                return Err(SimError::InvalidConfig("perturbation direction must be unit length"));
            }
        }
        Ok(())
    }
}

/// Snapshot of the simulated robot. The instrument vectors are always rebuilt
/// from the flange pose, never carried over.
///
/// `flange`/`instrument` describe the physical robot; `control_flange`/`control`
/// describe the pose the controller integrates. They coincide unless a
/// perturbation is configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub step: u64,
    pub time: f64,
    pub flange: Pose,
    pub instrument: InstrumentState,
    pub control_flange: Pose,
    pub control: InstrumentState,
    pub last_twist: Twist,
}

impl SimState {
    pub fn new(flange: Pose, cfg: &SimConfig) -> Result<Self, SimError> {
        let instrument = reconstruct_state(&flange, &cfg.calib, &cfg.rcm)?;
        Ok(Self {
            step: 0,
            time: 0.0,
            flange,
            instrument,
            control_flange: flange,
            control: instrument,
            last_twist: Twist::zero(),
        })
    }
}

/// Advances the flange by one control period under a constant twist.
///
/// Position moves by `linear * dt`; orientation is pre-multiplied by the exact
/// exponential of `angular * dt` and renormalized. The twist acts on the
/// control pose; the physical pose follows it plus any perturbation offset.
pub fn step(state: &SimState, twist: &Twist, cfg: &SimConfig) -> Result<SimState, SimError> {
    if !twist.is_finite() {
        return Err(SimError::NonFiniteTwist);
    }
    let dt = cfg.dt;
    let next_step = state.step + 1;
    let time = next_step as f64 * dt;

    let position = state.control_flange.translation.vector + twist.linear * dt;
    let mut orientation = exp_rotation(&(twist.angular * dt)) * state.control_flange.rotation;
    orientation.renormalize();
    let control_flange = Pose::from_parts(position.into(), orientation);
    let control = reconstruct_state(&control_flange, &cfg.calib, &cfg.rcm)?;

    let (flange, instrument) = match &cfg.perturbation {
        Some(p) => {
            let flange = Pose::from_parts((position + p.offset(time)).into(), orientation);
            (flange, reconstruct_state(&flange, &cfg.calib, &cfg.rcm)?)
        }
        None => (control_flange, control),
    };
    Ok(SimState { step: next_step, time, flange, instrument, control_flange, control, last_twist: *twist })
}

/// Rewrites the linear part of a solver twist so that one integration step is
/// an exact rotation about the trocar point followed by a slide along the
/// rotated shaft.
///
/// The solver's twist is tangent to that motion, but integrating it with a
/// constant linear velocity leaves an O(dt²) lateral error per step whenever
/// pivoting is combined with insertion, roll or a tilted shaft, and nothing
/// in a rate controller pulls it back. The angular part is unchanged and the
/// linear part differs from the input by O(dt).
pub fn step_consistent_twist(state: &SimState, twist: &Twist, cfg: &SimConfig) -> Twist {
    let dt = cfg.dt;
    let r_ee = state.control.r_ee;
    let rot = exp_rotation(&(twist.angular * dt));
    let slide = twist.linear + twist.angular.cross(&r_ee);
    let displacement = r_ee - rot * r_ee + rot * slide * dt;
    Twist::new(displacement / dt, twist.angular)
}

/// One control period for a solver twist: optional step-consistent
/// conversion, then [`step`]. Returns the twist actually integrated.
pub fn advance(state: &SimState, solved: &Twist, cfg: &SimConfig) -> Result<(SimState, Twist), SimError> {
    if !solved.is_finite() {
        return Err(SimError::NonFiniteTwist);
    }
    let applied = if cfg.step_consistent { step_consistent_twist(state, solved, cfg) } else { *solved };
    Ok((step(state, &applied, cfg)?, applied))
}
