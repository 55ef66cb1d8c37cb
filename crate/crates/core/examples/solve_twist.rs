//! Map tip commands to flange twists in both modes and check the trocar
//! velocity.

use rcm_core::geometry::{perpendicular_component, Vec3};
use rcm_core::solver::{
    solve_cartesian_tip, solve_spherical, trocar_point_velocity, CartesianTipCommand, InstrumentState, RcmConfig,
    SphericalCommand,
};

fn main() {
    let config = RcmConfig { p_rcm: Vec3::zeros(), ..RcmConfig::default() };
    // flange 0.2 m above the trocar, tip 0.1 m below it
    let state = InstrumentState::from_points(Vec3::new(0.0, 0.0, 0.2), Vec3::new(0.0, 0.0, -0.1), config.p_rcm);

    let cart = CartesianTipCommand { v_tip: Vec3::new(0.01, 0.0, 0.0), omega_roll: 0.0 };
    let twist = solve_cartesian_tip(&state, &cart, &config).unwrap();
    println!("cartesian  v_tip {:?}", cart.v_tip.as_slice());
    println!("  angular  {:?}", twist.angular.as_slice());
    println!("  linear   {:?}", twist.linear.as_slice());

    let sph = SphericalCommand { omega_pitch: 0.1, omega_yaw: 0.0, omega_roll: 0.2, v_trans: 0.005 };
    let twist = solve_spherical(&state, &sph, &config).unwrap();
    println!("spherical  {sph:?}");
    println!("  angular  {:?}", twist.angular.as_slice());
    println!("  linear   {:?}", twist.linear.as_slice());

    let v = trocar_point_velocity(&twist, &state);
    let lateral = perpendicular_component(&v, &state.shaft_axis()).norm();
    println!("trocar point velocity {:?}, lateral part {lateral:e}", v.as_slice());
}
