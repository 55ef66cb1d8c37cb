//! Plan a jerk-limited move and print it at 20 Hz.

use rcm_core::profiler::{retarget, KinState, ProfilerLimits};

fn main() {
    let limits = ProfilerLimits { max_accel: 10.0, max_jerk: 30.0, base_duration: 1.0 };
    let seg = retarget(KinState::at_rest(0.0), 1.0, &limits, 0.0).unwrap();
    let (acc, jerk) = seg.peaks();
    println!(
        "duration {:.4} s (base {} s), peak accel {acc:.3}, peak jerk {jerk:.3}",
        seg.duration, limits.base_duration
    );
    println!("t_s,pos,vel,acc,jerk");
    let n = (seg.duration * 20.0).ceil() as usize;
    for i in 0..=n {
        let t = (i as f64 / 20.0).min(seg.duration);
        let s = seg.sample(t);
        println!("{t:.3},{:.6},{:.6},{:.6},{:.6}", s.pos, s.vel, s.acc, s.jerk);
    }
}
