//! Commands the gate refuses, and why.
//!
//!     cargo run -p rcm-server --example safety_gate

use rcm_core::config::Config;
use rcm_core::geometry::Vec3;
use rcm_core::sim::SimState;
use rcm_core::solver::{CartesianTipCommand, RateCommand, SphericalCommand};
use rcm_server::safety::{validate_action, SafetyConfig};

fn main() {
    let cfg = Config::default();
    let sim = cfg.sim_config();
    let state = SimState::new(cfg.initial_pose(), &sim).expect("default start pose is valid");
    let mut safety = SafetyConfig::from(&cfg.server);

    let cart = |v: [f64; 3]| RateCommand::Cartesian(CartesianTipCommand { v_tip: Vec3::from(v), omega_roll: 0.0 });
    let cases = [
        ("slow move", cart([0.01, 0.0, 0.0]), 0.0),
        ("too fast", cart([0.2, 0.0, 0.0]), 0.0),
        ("150 ms old", cart([0.01, 0.0, 0.0]), 0.15),
        ("hold", RateCommand::Hold, 1.0),
    ];
    for (name, cmd, age) in cases {
        let v = validate_action(&cmd, age, &state, &sim, &safety);
        println!("{name:24} accepted={} {:?} {}", v.accepted, v.reason, v.detail.unwrap_or_default());
    }

    // start 0.1 mm above the minimum insertion and pull out
    let mut shallow_start = cfg;
    shallow_start.initial_flange.position.z = 0.3799;
    let shallow = SimState::new(shallow_start.initial_pose(), &sim).expect("still inserted");
    let retract = RateCommand::Spherical(SphericalCommand { v_trans: -0.1, ..Default::default() });
    let v = validate_action(&retract, 0.0, &shallow, &sim, &safety);
    println!("{:24} accepted={} {:?}", "retract past minimum", v.accepted, v.reason);

    safety.workspace_max.x = 0.0;
    let v = validate_action(&cart([0.01, 0.0, 0.0]), 0.0, &state, &sim, &safety);
    println!("{:24} accepted={} {:?}", "outside workspace", v.accepted, v.reason);
}
