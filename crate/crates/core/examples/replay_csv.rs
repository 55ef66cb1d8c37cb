//! Read an episode back, verify it against the calibration, and rewrite it.
//!
//!     cargo run -p rcm-core --example replay_csv -- episode.csv

use rcm_core::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let path = std::env::args().nth(1);
    let episode = match &path {
        Some(p) => EpisodeRecord::read_csv_path(p)?,
        None => {
            let s = CommandScript::new().with_duration(2.0).at(0.0, CommandMode::Spherical, [0.1, 0.1, 0.0, 0.01]);
            run_episode(&s, &cfg.episode_setup())?
        }
    };
    episode.verify_tips(&cfg.calibration, 1e-9)?;
    let first = episode.to_csv_string()?;
    let again = EpisodeRecord::read_csv(first.as_bytes())?.to_csv_string()?;
    println!("{} rows, dt {} s, config {}", episode.len(), episode.header.dt, episode.header.config_hash);
    println!("byte-stable rewrite: {}", first == again);
    Ok(())
}
