//! Steer the tip with inputs expressed in a tilted camera frame.

use std::f64::consts::FRAC_PI_4;

use rcm_core::geometry::{axis_angle, pose, Vec3};
use rcm_core::prelude::*;
use rcm_core::solver::{remap_camera_command, solve_cartesian_tip, tip_velocity, CartesianTipCommand};

fn main() {
    let cfg = Config::default();
    let state = SimState::new(cfg.initial_pose(), &cfg.sim_config()).unwrap();
    // endoscope looking down the shaft, rolled 45 degrees about the base z axis
    let camera = pose(Vec3::new(0.0, 0.05, 0.2), axis_angle(&Vec3::z(), FRAC_PI_4));

    for (name, input) in [("right", Vec3::x()), ("up", Vec3::y())] {
        let v_tip = remap_camera_command(&(input * 0.01), &camera);
        let cmd = CartesianTipCommand { v_tip, omega_roll: 0.0 };
        let twist = solve_cartesian_tip(&state.control, &cmd, &cfg.rcm).unwrap();
        let achieved = tip_velocity(&twist, &state.control);
        println!("camera {name:5} -> base v_tip {:?}, achieved {:?}", v_tip.as_slice(), achieved.as_slice());
    }
}
