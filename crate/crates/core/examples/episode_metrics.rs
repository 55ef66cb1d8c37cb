//! Deviation and smoothness of a perturbed teleoperation episode, printed as
//! a report and as a table.

use std::f64::consts::TAU;

use rcm_core::metrics::{render_text, write_table, EpisodeReport};
use rcm_core::prelude::*;
use rcm_core::sim::Perturbation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = Config::default();
    cfg.profiler.linear = ProfilerLimits { max_accel: 0.5, max_jerk: 5.0, base_duration: 0.5 };
    cfg.sim.perturbation = Some(Perturbation { amplitude: 5e-5, frequency: 0.8, direction: Vec3::x() });

    // an operator tracing a figure eight, sampled at 10 Hz
    let mut script = CommandScript::new().with_duration(60.0);
    for k in 0..600 {
        let t = k as f64 * 0.1;
        let target = [0.02 * (TAU * 0.05 * t).sin(), 0.02 * (TAU * 0.1 * t).sin(), 0.0, 0.0];
        script = script.at(t, CommandMode::Cartesian, target);
    }
    let episode = run_episode(&script, &cfg.episode_setup())?;

    let opts = SmoothnessOptions::default();
    let report = EpisodeReport {
        label: "figure-eight".into(),
        rows: episode.len(),
        duration_s: episode.duration(),
        deviation: rcm_deviation_series(&episode, &cfg.rcm.p_rcm, &cfg.calibration)?,
        smoothness: episode_smoothness(&episode, &opts)?,
        sparc_params: opts.sparc,
    };
    print!("{}", render_text(std::slice::from_ref(&report)));
    println!();
    write_table(&[report], std::io::stdout())?;
    Ok(())
}
