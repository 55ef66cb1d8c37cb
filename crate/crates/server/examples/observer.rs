//! Watch a live (wall-clock) server as an observer at 10 Hz while a
//! commander streams a slow pivot.
//!
//!     cargo run -p rcm-server --example observer

use std::thread;
use std::time::Duration;

use rcm_core::config::Config;
use rcm_server::client::Client;
use rcm_server::protocol::{ClientBody, Role};
use rcm_server::server::{serve, ServeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = serve(Config::default(), ServeOptions::ephemeral(false))?;
    let addr = server.tcp_addr();

    let commander = thread::spawn(move || -> std::io::Result<()> {
        let (mut c, _) = Client::connect_as(addr, Role::Commander)?;
        for k in 0..60 {
            let yaw = 0.2 * (k as f64 * 0.1).sin();
            c.send(ClientBody::CommandSpherical { omega_pitch: 0.1, omega_yaw: yaw, omega_roll: 0.0, v_trans: 0.0 })?;
            thread::sleep(Duration::from_millis(20));
        }
        Ok(())
    });

    let (mut obs, _) = Client::connect_as(addr, Role::Observer)?;
    obs.request(ClientBody::Configure { camera_frame: None, camera_pose: None, stream_rate_hz: Some(10.0) })?;
    for _ in 0..10 {
        let s = obs.recv_state()?;
        println!("tick {:5} mode {:9} tip {:.4?}", s.tick, s.mode, s.tip);
    }
    commander.join().unwrap()?;
    server.shutdown();
    Ok(())
}
