//! Teleoperation server for the RCM instrument simulator.
//!
//! [`control::ControlLoop`] is the socket-free core: it decodes client
//! messages, gates commands through [`safety::validate_action`], advances the
//! simulation and produces outgoing text. [`server::serve`] wraps it with an
//! NDJSON TCP endpoint and a WebSocket endpoint at `/ws`.

pub mod cli;
pub mod client;
pub mod control;
pub mod protocol;
pub mod safety;
pub mod server;
