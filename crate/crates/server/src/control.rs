//! The control loop as a plain state machine: connections, lines and ticks go
//! in, addressed outgoing messages come out. No sockets, no clocks; the
//! server drives it and routes the output.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rcm_core::config::Config;
use rcm_core::geometry::{point_to_line_distance, pose, quat_wxyz, rotation_from_wxyz, Pose, Twist, Vec3};
use rcm_core::record::{config_fingerprint, EpisodeRecord, EpisodeRow};
use rcm_core::sim::{advance, SimConfig, SimState};
use rcm_core::solver::{remap_camera_command, solve, CartesianTipCommand, RateCommand, SphericalCommand};

use crate::protocol::{
    decode_client, encode_server, ClientBody, ErrorCode, Role, ServerBody, StateSnapshot, WirePose, WireTwist,
    SCHEMA_VERSION,
};
use crate::safety::{validate_action, RejectReason, SafetyConfig};

pub type ConnId = u64;

/// Outgoing traffic class: replies must be delivered, snapshots may be dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    Reply,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub conn: ConnId,
    pub lane: Lane,
    pub text: String,
}

#[derive(Debug)]
struct Connection {
    role: Option<Role>,
    last_seq: Option<u64>,
    out_seq: u64,
    camera: Option<Pose>,
    camera_frame: bool,
    stream_every: u64,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    command: RateCommand,
    received_at: f64,
    seq: u64,
}

struct Recording {
    record: EpisodeRecord,
    path: Option<PathBuf>,
}

pub struct ControlLoop {
    config: Config,
    sim: SimConfig,
    safety: SafetyConfig,
    test_mode: bool,
    state: SimState,
    connections: BTreeMap<ConnId, Connection>,
    commander: Option<ConnId>,
    clutch: bool,
    pending: Option<Pending>,
    applied: (RateCommand, Twist),
    recording: Option<Recording>,
    finished: Vec<EpisodeRecord>,
    out: Vec<Delivery>,
}

fn stream_every(dt: f64, rate_hz: f64) -> u64 {
    ((1.0 / (dt * rate_hz)).round() as u64).max(1)
}

impl ControlLoop {
    pub fn new(config: Config, test_mode: bool) -> Result<Self, rcm_core::config::ConfigError> {
        config.validate()?;
        let sim = config.sim_config();
        let state = SimState::new(config.initial_pose(), &sim).expect("validated config has a valid start pose");
        Ok(Self {
            safety: SafetyConfig::from(&config.server),
            config,
            sim,
            test_mode,
            state,
            connections: BTreeMap::new(),
            commander: None,
            clutch: true,
            pending: None,
            applied: (RateCommand::Hold, Twist::zero()),
            recording: None,
            finished: Vec::new(),
            out: Vec::new(),
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.sim.dt
    }

    pub fn test_mode(&self) -> bool {
        self.test_mode
    }

    pub fn commander(&self) -> Option<ConnId> {
        self.commander
    }

    /// Completed recordings, oldest first.
    pub fn finished_recordings(&self) -> &[EpisodeRecord] {
        &self.finished
    }

    /// Ends any active recording and returns every recording of the session.
    pub fn into_recordings(mut self) -> Vec<EpisodeRecord> {
        if let Some(rec) = self.recording.take() {
            let record = self.close_recording(rec);
            self.finished.push(record);
        }
        self.finished
    }

    pub fn take_output(&mut self) -> Vec<Delivery> {
        std::mem::take(&mut self.out)
    }

    pub fn connect(&mut self, id: ConnId) {
        self.connections.insert(
            id,
            Connection {
                role: None,
                last_seq: None,
                out_seq: 0,
                camera: None,
                camera_frame: false,
                stream_every: stream_every(self.sim.dt, self.config.server.stream_rate_hz),
            },
        );
    }

    /// Drops a connection; losing the commander drops its command and holds.
    pub fn disconnect(&mut self, id: ConnId) {
        self.connections.remove(&id);
        if self.commander == Some(id) {
            log::info!("commander {id} disconnected, holding");
            self.commander = None;
            self.pending = None;
        }
    }

    fn send(&mut self, conn: ConnId, lane: Lane, body: &ServerBody) {
        if let Some(c) = self.connections.get_mut(&conn) {
            c.out_seq += 1;
            let text = encode_server(c.out_seq, body);
            self.out.push(Delivery { conn, lane, text });
        }
    }

    fn error(&mut self, conn: ConnId, ref_seq: Option<u64>, code: ErrorCode, message: impl Into<String>) {
        let body = ServerBody::Error { ref_seq, code, message: message.into() };
        self.send(conn, Lane::Reply, &body);
    }

    fn ack(&mut self, conn: ConnId, seq: u64, path: Option<String>) {
        let body = ServerBody::Ack { ref_seq: seq, tick: Some(self.state.step), path };
        self.send(conn, Lane::Reply, &body);
    }

    pub fn handle_line(&mut self, conn: ConnId, line: &str) {
        if !self.connections.contains_key(&conn) {
            return;
        }
        let env = match decode_client(line) {
            Ok(env) => env,
            Err(e) => return self.error(conn, e.seq, e.code, e.message),
        };
        let seq = env.seq;
        let c = self.connections.get_mut(&conn).expect("checked above");
        if c.last_seq.is_some_and(|last| seq <= last) {
            let last = c.last_seq.unwrap_or(0);
            return self.error(conn, Some(seq), ErrorCode::BadSeq, format!("seq {seq} does not exceed {last}"));
        }
        c.last_seq = Some(seq);
        let role = c.role;

        match (env.body, role) {
            (ClientBody::Hello { schema_version, role: wanted }, None) => self.hello(conn, seq, schema_version, wanted),
            (ClientBody::Hello { .. }, Some(_)) => {
                self.error(conn, Some(seq), ErrorCode::AlreadyIdentified, "hello already completed")
            }
            (_, None) => self.error(conn, Some(seq), ErrorCode::NotIdentified, "send hello first"),
            (ClientBody::Configure { camera_frame, camera_pose, stream_rate_hz }, Some(_)) => {
                self.configure(conn, seq, camera_frame, camera_pose, stream_rate_hz)
            }
            (_, Some(Role::Observer)) => {
                self.error(conn, Some(seq), ErrorCode::NotCommander, "observers may only configure their stream")
            }
            (ClientBody::CommandCartesian { v_tip, omega_roll }, Some(Role::Commander)) => {
                let mut v_tip = Vec3::from(v_tip);
                let c = &self.connections[&conn];
                if let (true, Some(cam)) = (c.camera_frame, c.camera) {
                    v_tip = remap_camera_command(&v_tip, &cam);
                }
                let cmd = RateCommand::Cartesian(CartesianTipCommand { v_tip, omega_roll });
                self.command(conn, seq, cmd)
            }
            (ClientBody::CommandSpherical { omega_pitch, omega_yaw, omega_roll, v_trans }, Some(Role::Commander)) => {
                let cmd = RateCommand::Spherical(SphericalCommand { omega_pitch, omega_yaw, omega_roll, v_trans });
                self.command(conn, seq, cmd)
            }
            (ClientBody::Clutch { engaged }, Some(Role::Commander)) => {
                self.clutch = engaged;
                if !engaged {
                    self.pending = None;
                }
                self.ack(conn, seq, None)
            }
            (ClientBody::StartRecording { path }, Some(Role::Commander)) => self.start_recording(conn, seq, path),
            (ClientBody::StopRecording, Some(Role::Commander)) => self.stop_recording(conn, seq),
            (ClientBody::Step { ticks }, Some(Role::Commander)) => {
                if !self.test_mode {
                    return self.error(conn, Some(seq), ErrorCode::NotTestMode, "step is only accepted in test mode");
                }
                for _ in 0..ticks {
                    self.tick();
                }
                self.ack(conn, seq, None)
            }
        }
    }

    fn hello(&mut self, conn: ConnId, seq: u64, schema_version: u32, role: Role) {
        if schema_version != SCHEMA_VERSION {
            return self.error(
                conn,
                Some(seq),
                ErrorCode::SchemaVersion,
                format!("server speaks schema {SCHEMA_VERSION}, client asked for {schema_version}"),
            );
        }
        if role == Role::Commander {
            if let Some(other) = self.commander {
                return self.error(conn, Some(seq), ErrorCode::Busy, format!("connection {other} already commands"));
            }
            self.commander = Some(conn);
        }
        let c = self.connections.get_mut(&conn).expect("caller checked");
        c.role = Some(role);
        let stream_rate_hz = 1.0 / (c.stream_every as f64 * self.sim.dt);
        let body = ServerBody::Hello {
            schema_version: SCHEMA_VERSION,
            role,
            dt: self.sim.dt,
            test_mode: self.test_mode,
            stream_rate_hz,
            config_hash: config_fingerprint(&self.sim.rcm, &self.sim.calib),
        };
        self.send(conn, Lane::Reply, &body);
    }

    fn configure(
        &mut self,
        conn: ConnId,
        seq: u64,
        camera_frame: Option<bool>,
        camera_pose: Option<WirePose>,
        stream_rate_hz: Option<f64>,
    ) {
        if let Some(rate) = stream_rate_hz {
            if !(rate > 0.0 && rate.is_finite()) {
                return self.error(conn, Some(seq), ErrorCode::BadMessage, "stream_rate_hz must be positive");
            }
        }
        let camera = match camera_pose {
            Some(p) => {
                let n = p.orientation_wxyz.iter().map(|c| c * c).sum::<f64>().sqrt();
                if !((n - 1.0).abs() <= 1e-6) || !p.position.iter().all(|v| v.is_finite()) {
                    return self.error(
                        conn,
                        Some(seq),
                        ErrorCode::BadMessage,
                        "camera_pose must be finite with a unit quaternion",
                    );
                }
                Some(pose(Vec3::from(p.position), rotation_from_wxyz(p.orientation_wxyz)))
            }
            None => None,
        };
        let dt = self.sim.dt;
        let c = self.connections.get_mut(&conn).expect("caller checked");
        if let Some(rate) = stream_rate_hz {
            c.stream_every = stream_every(dt, rate);
        }
        if camera.is_some() {
            c.camera = camera;
        }
        if let Some(on) = camera_frame {
            if on && c.camera.is_none() {
                return self.error(conn, Some(seq), ErrorCode::BadMessage, "camera_frame needs a camera_pose");
            }
            c.camera_frame = on;
        }
        self.ack(conn, seq, None)
    }

    fn command(&mut self, conn: ConnId, seq: u64, command: RateCommand) {
        if !self.clutch {
            return self.error(conn, Some(seq), ErrorCode::ClutchDisengaged, "clutch is disengaged; command ignored");
        }
        let verdict = validate_action(&command, 0.0, &self.state, &self.sim, &self.safety);
        self.pending = verdict.accepted.then_some(Pending { command, received_at: self.state.time, seq });
        let body = ServerBody::Verdict {
            ref_seq: seq,
            accepted: verdict.accepted,
            reason: verdict.reason,
            detail: verdict.detail,
        };
        self.send(conn, Lane::Reply, &body);
    }

    fn start_recording(&mut self, conn: ConnId, seq: u64, path: Option<String>) {
        if self.recording.is_some() {
            return self.error(conn, Some(seq), ErrorCode::Recording, "already recording");
        }
        let hash = config_fingerprint(&self.sim.rcm, &self.sim.calib);
        self.recording =
            Some(Recording { record: EpisodeRecord::new(self.sim.dt, hash), path: path.map(PathBuf::from) });
        self.ack(conn, seq, None)
    }

    fn close_recording(&mut self, rec: Recording) -> EpisodeRecord {
        let mut record = rec.record;
        record.rows.push(EpisodeRow::capture(&self.state, RateCommand::Hold, Twist::zero(), self.sim.rcm.p_rcm));
        record
    }

    fn stop_recording(&mut self, conn: ConnId, seq: u64) {
        let Some(rec) = self.recording.take() else {
            return self.error(conn, Some(seq), ErrorCode::Recording, "not recording");
        };
        let path = rec.path.clone();
        let record = self.close_recording(rec);
        let written = match &path {
            Some(p) => match record.write_csv_path(p) {
                Ok(()) => Some(p.display().to_string()),
                Err(e) => {
                    self.finished.push(record);
                    return self.error(conn, Some(seq), ErrorCode::Recording, e.to_string());
                }
            },
            None => None,
        };
        self.finished.push(record);
        self.ack(conn, seq, written)
    }

    /// Command to apply this tick: the latest accepted one, re-validated
    /// against its age and the current state, or a hold.
    fn current_command(&mut self) -> RateCommand {
        if !self.clutch {
            return RateCommand::Hold;
        }
        let Some(p) = self.pending else {
            return RateCommand::Hold;
        };
        let age = self.state.time - p.received_at;
        let verdict = validate_action(&p.command, age, &self.state, &self.sim, &self.safety);
        if verdict.accepted {
            return p.command;
        }
        self.pending = None;
        if let Some(conn) = self.commander {
            let body =
                ServerBody::Verdict { ref_seq: p.seq, accepted: false, reason: verdict.reason, detail: verdict.detail };
            self.send(conn, Lane::Reply, &body);
        }
        if verdict.reason != Some(RejectReason::StaleCommand) {
            log::debug!("command {} withdrawn: {:?}", p.seq, verdict.reason);
        }
        RateCommand::Hold
    }

    /// One control period.
    pub fn tick(&mut self) {
        let command = self.current_command();
        let solved = match solve(&self.state.control, &command, &self.sim.rcm) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("solver refused a validated command: {e}");
                Twist::zero()
            }
        };
        let (command, solved, next) = match advance(&self.state, &solved, &self.sim) {
            Ok((next, _)) => (command, solved, next),
            Err(e) => {
                log::warn!("step failed, holding: {e}");
                let (next, _) = advance(&self.state, &Twist::zero(), &self.sim).expect("holding is always possible");
                (RateCommand::Hold, Twist::zero(), next)
            }
        };
        if let Some(rec) = &mut self.recording {
            rec.record.rows.push(EpisodeRow::capture(&self.state, command, solved, self.sim.rcm.p_rcm));
        }
        self.applied = (command, solved);
        self.state = next;
        self.stream();
    }

    pub fn snapshot(&self) -> StateSnapshot {
        let s = &self.state;
        let (tip, dir) = self.sim.calib.shaft_line(&s.flange);
        let deviation_mm = point_to_line_distance(&self.sim.rcm.p_rcm, &tip, &dir).map(|d| d * 1e3).unwrap_or(f64::NAN);
        let (command, twist) = self.applied;
        StateSnapshot {
            tick: s.step,
            time: s.time,
            flange_position: s.flange.translation.vector.into(),
            flange_orientation: quat_wxyz(&s.flange.rotation),
            tip: s.instrument.p_tip.into(),
            p_rcm: self.sim.rcm.p_rcm.into(),
            twist: WireTwist { linear: twist.linear.into(), angular: twist.angular.into() },
            mode: command.mode().as_str().to_string(),
            clutch: self.clutch,
            recording: self.recording.is_some(),
            deviation_mm,
        }
    }

    fn stream(&mut self) {
        let tick = self.state.step;
        let due: Vec<ConnId> = self
            .connections
            .iter()
            .filter(|(_, c)| c.role.is_some() && tick.is_multiple_of(c.stream_every))
            .map(|(id, _)| *id)
            .collect();
        if due.is_empty() {
            return;
        }
        let body = ServerBody::State(self.snapshot());
        for id in due {
            self.send(id, Lane::Snapshot, &body);
        }
    }
}
