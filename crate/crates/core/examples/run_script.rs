//! Run a command script offline and write the episode CSV.
//!
//!     cargo run -p rcm-core --example run_script -- [script.txt] [out.csv]

use std::env;

use rcm_core::prelude::*;

const DEMO: &str = "\
duration 20
0.0  spherical  0.25  0.00  0.0  0.000
3.0  spherical  0.25  0.00  0.8  0.000
6.0  spherical  0.25 -0.20  0.8  0.020
10.0 cartesian  0.01  0.01  0.0  0.000
14.0 cartesian  0.00  0.00 -0.01 0.300
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = env::args().skip(1).collect();
    let text = match args.first() {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEMO.to_string(),
    };
    let script: CommandScript = text.parse()?;
    let cfg = Config::default();
    let episode = run_episode(&script, &cfg.episode_setup())?;
    let out = args.get(1).map(String::as_str).unwrap_or("episode.csv");
    episode.write_csv_path(out)?;

    let dev = rcm_deviation_series(&episode, &cfg.rcm.p_rcm, &cfg.calibration)?;
    let last = episode.rows.last().unwrap();
    println!("{} rows, {:.3} s -> {out}", episode.len(), episode.duration());
    println!("final tip {:?}", last.tip.as_slice());
    println!("max rcm deviation {:.3e} mm", dev.max_mm);
    Ok(())
}
