//! The same protocol over the WebSocket endpoint, as a browser client
//! would use it.
//!
//!     cargo run -p rcm-server --example ws_client

use rcm_core::config::Config;
use rcm_server::protocol::{decode_server, encode_client, ClientBody, Role, ServerBody, SCHEMA_VERSION};
use rcm_server::server::{serve, ServeOptions};
use tungstenite::Message;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = serve(Config::default(), ServeOptions::ephemeral(true))?;
    let url = format!("ws://{}/ws", server.ws_addr().expect("websocket enabled"));
    let (mut ws, _) = tungstenite::connect(&url)?;
    println!("connected to {url}");

    let script = [
        ClientBody::Hello { schema_version: SCHEMA_VERSION, role: Role::Commander },
        ClientBody::CommandCartesian { v_tip: [0.01, 0.0, 0.0], omega_roll: 0.0 },
        ClientBody::Step { ticks: 40 },
    ];
    for (i, body) in script.iter().enumerate() {
        ws.send(Message::text(encode_client(i as u64 + 1, body)))?;
        loop {
            let Message::Text(text) = ws.read()? else { continue };
            match decode_server(&text).map_err(|e| e.message)?.body {
                ServerBody::State(s) => println!("  state tick {} tip {:.5?}", s.tick, s.tip),
                reply => {
                    println!("{reply:?}");
                    break;
                }
            }
        }
    }
    ws.close(None)?;
    server.shutdown();
    Ok(())
}
