//! Drive the server over NDJSON as the commanding client: pivot, insert,
//! record, and print the streamed state.
//!
//!     cargo run -p rcm-server --example tcp_commander

use rcm_core::config::Config;
use rcm_server::client::Client;
use rcm_server::protocol::{ClientBody, Role, ServerBody};
use rcm_server::server::{serve, ServeOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // tick-driven, so the run is reproducible
    let server = serve(Config::default(), ServeOptions::ephemeral(true))?;
    let (mut c, hello) = Client::connect_as(server.tcp_addr(), Role::Commander)?;
    println!("{hello:?}");

    c.request(ClientBody::StartRecording { path: None })?;
    let moves = [
        ClientBody::CommandSpherical { omega_pitch: 0.3, omega_yaw: 0.0, omega_roll: 0.0, v_trans: 0.0 },
        ClientBody::CommandSpherical { omega_pitch: 0.0, omega_yaw: 0.2, omega_roll: 0.5, v_trans: 0.01 },
        ClientBody::CommandCartesian { v_tip: [0.0, 0.01, -0.005], omega_roll: 0.0 },
    ];
    for m in moves {
        // commands expire after 0.1 s, so re-send every 50 ms
        for _ in 0..4 {
            if let ServerBody::Verdict { accepted: false, reason, .. } = c.request(m.clone())? {
                println!("rejected: {reason:?}");
            }
            c.send(ClientBody::Step { ticks: 25 })?;
            let mut last = None;
            loop {
                match c.recv()?.body {
                    ServerBody::State(s) => last = Some(s),
                    ServerBody::Ack { .. } => break,
                    other => println!("  {other:?}"),
                }
            }
            if let Some(s) = last {
                println!("  t={:.3} tip={:.5?} dev={:.2e} mm", s.time, s.tip, s.deviation_mm);
            }
        }
    }
    c.request(ClientBody::StopRecording)?;
    let records = server.shutdown();
    println!("recorded {} rows", records[0].len());
    Ok(())
}
