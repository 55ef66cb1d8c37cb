//! Sockets around [`ControlLoop`]: one control thread owns the loop, every
//! connection gets its own I/O thread(s) and talks to it over channels.
//!
//! Replies are queued without bound. State snapshots go through a short
//! queue per connection; when a reader falls behind the oldest snapshot is
//! dropped, so it always catches up to the newest state.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, select, unbounded, Receiver, RecvTimeoutError, Sender, TrySendError};
use rcm_core::config::Config;
use rcm_core::record::EpisodeRecord;
use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::StatusCode;
use tungstenite::Message;

use crate::control::{ConnId, ControlLoop, Lane};

/// Snapshots queued per connection before new ones are dropped.
pub const SNAPSHOT_QUEUE: usize = 8;
const POLL: Duration = Duration::from_millis(10);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub tcp_addr: SocketAddr,
    /// `None` disables the WebSocket endpoint.
    pub ws_addr: Option<SocketAddr>,
    pub test_mode: bool,
}

impl ServeOptions {
    pub fn from_config(cfg: &Config, test_mode: bool) -> Self {
        Self {
            tcp_addr: SocketAddr::from(([127, 0, 0, 1], cfg.server.tcp_port)),
            ws_addr: Some(SocketAddr::from(([127, 0, 0, 1], cfg.server.ws_port))),
            test_mode,
        }
    }

    /// Loopback, OS-assigned ports.
    pub fn ephemeral(test_mode: bool) -> Self {
        Self {
            tcp_addr: SocketAddr::from(([127, 0, 0, 1], 0)),
            ws_addr: Some(SocketAddr::from(([127, 0, 0, 1], 0))),
            test_mode,
        }
    }
}

struct Outbox {
    replies: Sender<String>,
    snapshots: Sender<String>,
    // lets the control thread evict the oldest queued snapshot
    stale: Receiver<String>,
}

/// Open sockets by connection, so shutdown can close them.
type Streams = Arc<Mutex<HashMap<ConnId, TcpStream>>>;

fn track(streams: &Streams, id: ConnId, stream: &TcpStream) {
    if let Ok(clone) = stream.try_clone() {
        streams.lock().expect("stream registry").insert(id, clone);
    }
}

fn untrack(streams: &Streams, id: ConnId) {
    streams.lock().expect("stream registry").remove(&id);
}

enum Event {
    Connect(ConnId, Outbox),
    Line(ConnId, String),
    Disconnect(ConnId),
    Shutdown(Sender<Vec<EpisodeRecord>>),
}

/// Receiving ends handed to a connection's I/O thread.
struct Inbox {
    replies: Receiver<String>,
    snapshots: Receiver<String>,
}

fn mailbox() -> (Outbox, Inbox) {
    let (rt, rr) = unbounded();
    let (st, sr) = bounded(SNAPSHOT_QUEUE);
    (Outbox { replies: rt, snapshots: st, stale: sr.clone() }, Inbox { replies: rr, snapshots: sr })
}

pub struct ServerHandle {
    tcp_addr: SocketAddr,
    ws_addr: Option<SocketAddr>,
    events: Sender<Event>,
    stop: Arc<AtomicBool>,
    streams: Streams,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn tcp_addr(&self) -> SocketAddr {
        self.tcp_addr
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.ws_addr
    }

    /// Stops accepting, closes every connection and returns the session's
    /// recordings (an active recording is closed first).
    pub fn shutdown(mut self) -> Vec<EpisodeRecord> {
        let (tx, rx) = bounded(1);
        let records = match self.events.send(Event::Shutdown(tx)) {
            Ok(()) => rx.recv().unwrap_or_default(),
            Err(_) => Vec::new(),
        };
        self.stop.store(true, Ordering::SeqCst);
        for (_, s) in self.streams.lock().expect("stream registry").drain() {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
        records
    }

    /// Blocks until the control thread exits.
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Binds the endpoints and starts the control loop.
pub fn serve(config: Config, opts: ServeOptions) -> io::Result<ServerHandle> {
    let control =
        ControlLoop::new(config, opts.test_mode).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let tcp = TcpListener::bind(opts.tcp_addr)?;
    tcp.set_nonblocking(true)?;
    let tcp_addr = tcp.local_addr()?;
    let ws = match opts.ws_addr {
        Some(a) => {
            let l = TcpListener::bind(a)?;
            l.set_nonblocking(true)?;
            Some(l)
        }
        None => None,
    };
    let ws_addr = ws.as_ref().map(|l| l.local_addr()).transpose()?;

    let (events_tx, events_rx) = unbounded();
    let stop = Arc::new(AtomicBool::new(false));
    let streams = Streams::default();
    let ids = Arc::new(AtomicU64::new(1));
    let mut threads = Vec::new();

    threads.push(thread::Builder::new().name("rcm-control".into()).spawn({
        let stop = stop.clone();
        move || control_thread(control, events_rx, stop)
    })?);

    threads.push(thread::Builder::new().name("rcm-tcp-accept".into()).spawn({
        let (events, stop, streams, ids) = (events_tx.clone(), stop.clone(), streams.clone(), ids.clone());
        move || accept_loop(tcp, stop, |stream| spawn_tcp(stream, &events, &streams, &ids))
    })?);

    if let Some(ws) = ws {
        threads.push(thread::Builder::new().name("rcm-ws-accept".into()).spawn({
            let (events, stop, streams, ids) = (events_tx.clone(), stop.clone(), streams.clone(), ids.clone());
            move || accept_loop(ws, stop.clone(), |stream| spawn_ws(stream, &events, &streams, &ids, &stop))
        })?);
    }

    log::info!("serving NDJSON on {tcp_addr}, WebSocket on {ws_addr:?}, test mode {}", opts.test_mode);
    Ok(ServerHandle { tcp_addr, ws_addr, events: events_tx, stop, streams, threads })
}

fn control_thread(mut control: ControlLoop, events: Receiver<Event>, stop: Arc<AtomicBool>) {
    let mut outboxes: HashMap<ConnId, Outbox> = HashMap::new();
    let dt = Duration::from_secs_f64(control.dt());
    let mut next_tick = Instant::now() + dt;
    loop {
        let event = if control.test_mode() {
            events.recv().map_err(|_| RecvTimeoutError::Disconnected)
        } else {
            events.recv_deadline(next_tick)
        };
        match event {
            Ok(Event::Connect(id, outbox)) => {
                outboxes.insert(id, outbox);
                control.connect(id);
            }
            Ok(Event::Line(id, line)) => control.handle_line(id, &line),
            Ok(Event::Disconnect(id)) => {
                outboxes.remove(&id);
                control.disconnect(id);
            }
            Ok(Event::Shutdown(reply)) => {
                stop.store(true, Ordering::SeqCst);
                let _ = reply.send(control.into_recordings());
                return;
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return,
        }
        if !control.test_mode() {
            let now = Instant::now();
            // after a long stall, resume pacing instead of replaying the backlog
            if now > next_tick + dt * 50 {
                log::warn!("control loop stalled, skipping {:?}", now - next_tick);
                next_tick = now;
            }
            while next_tick <= now {
                control.tick();
                next_tick += dt;
            }
        }
        for d in control.take_output() {
            let Some(outbox) = outboxes.get(&d.conn) else { continue };
            match d.lane {
                Lane::Reply => {
                    let _ = outbox.replies.send(d.text);
                }
                Lane::Snapshot => {
                    let mut text = d.text;
                    while let Err(TrySendError::Full(back)) = outbox.snapshots.try_send(text) {
                        log::trace!("dropping oldest snapshot for slow connection {}", d.conn);
                        let _ = outbox.stale.try_recv();
                        text = back;
                    }
                }
            }
        }
    }
}

fn accept_loop(listener: TcpListener, stop: Arc<AtomicBool>, mut on_accept: impl FnMut(TcpStream)) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::debug!("connection from {peer}");
                if stream.set_nonblocking(false).is_ok() {
                    on_accept(stream);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
}

fn spawn_tcp(stream: TcpStream, events: &Sender<Event>, streams: &Streams, ids: &AtomicU64) {
    let id = ids.fetch_add(1, Ordering::SeqCst);
    let _ = stream.set_nodelay(true);
    let Ok(write_half) = stream.try_clone() else { return };
    let (outbox, inbox) = mailbox();
    if events.send(Event::Connect(id, outbox)).is_err() {
        return;
    }
    track(streams, id, &stream);
    let (events, streams) = (events.clone(), streams.clone());
    let reader = thread::Builder::new().name(format!("rcm-tcp-{id}")).spawn({
        let events = events.clone();
        move || {
            for line in BufReader::new(stream).lines() {
                let Ok(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                if events.send(Event::Line(id, line)).is_err() {
                    break;
                }
            }
            untrack(&streams, id);
            let _ = events.send(Event::Disconnect(id));
        }
    });
    if reader.is_err() {
        let _ = events.send(Event::Disconnect(id));
        return;
    }
    let _ = thread::Builder::new().name(format!("rcm-tcp-{id}-out")).spawn(move || tcp_writer(write_half, inbox));
}

/// Next outgoing text. Snapshots queued before a reply go out first, so a
/// client never sees a reply ahead of the states that preceded it.
fn next_outgoing(inbox: &Inbox, pending_reply: &mut Option<String>) -> Option<String> {
    pending_reply.as_ref()?;
    inbox.snapshots.try_recv().ok().or_else(|| pending_reply.take())
}

fn tcp_writer(stream: TcpStream, inbox: Inbox) {
    let mut out = io::BufWriter::new(stream);
    let mut pending_reply = None;
    loop {
        let text = match next_outgoing(&inbox, &mut pending_reply) {
            Some(t) => t,
            None => {
                let got = select! {
                    recv(inbox.replies) -> m => m.map(|r| { pending_reply = Some(r); None }),
                    recv(inbox.snapshots) -> m => m.map(Some),
                };
                match got {
                    Ok(Some(t)) => t,
                    Ok(None) => continue,
                    Err(_) => break,
                }
            }
        };
        if writeln!(out, "{text}").is_err() {
            break;
        }
        let idle = pending_reply.is_none() && inbox.replies.is_empty() && inbox.snapshots.is_empty();
        if idle && out.flush().is_err() {
            break;
        }
    }
    let _ = out.flush();
    let _ = out.get_ref().shutdown(std::net::Shutdown::Write);
}

fn spawn_ws(stream: TcpStream, events: &Sender<Event>, streams: &Streams, ids: &AtomicU64, stop: &Arc<AtomicBool>) {
    let id = ids.fetch_add(1, Ordering::SeqCst);
    track(streams, id, &stream);
    let (events, streams, stop) = (events.clone(), streams.clone(), stop.clone());
    let _ = thread::Builder::new().name(format!("rcm-ws-{id}")).spawn(move || {
        ws_session(id, stream, &events, &stop);
        untrack(&streams, id);
    });
}

// the callback signature, with its large error type, is fixed by tungstenite
#[allow(clippy::result_large_err)]
fn ws_session(id: ConnId, stream: TcpStream, events: &Sender<Event>, stop: &AtomicBool) {
    let check_path = |req: &Request, resp: Response| -> Result<Response, ErrorResponse> {
        if req.uri().path() == "/ws" {
            Ok(resp)
        } else {
            let mut err = ErrorResponse::new(Some("only /ws is served".into()));
            *err.status_mut() = StatusCode::NOT_FOUND;
            Err(err)
        }
    };
    let mut ws = match tungstenite::accept_hdr(stream, check_path) {
        Ok(ws) => ws,
        Err(e) => {
            log::debug!("websocket handshake failed: {e}");
            return;
        }
    };
    if ws.get_ref().set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    let (outbox, inbox) = mailbox();
    if events.send(Event::Connect(id, outbox)).is_err() {
        return;
    }
    'session: while !stop.load(Ordering::SeqCst) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                if events.send(Event::Line(id, text.to_string())).is_err() {
                    break;
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
        let mut pending_reply = None;
        loop {
            let text = match next_outgoing(&inbox, &mut pending_reply) {
                Some(t) => t,
                None => match inbox.replies.try_recv() {
                    Ok(r) => {
                        pending_reply = Some(r);
                        continue;
                    }
                    Err(crossbeam_channel::TryRecvError::Disconnected) => break 'session,
                    Err(crossbeam_channel::TryRecvError::Empty) => match inbox.snapshots.try_recv() {
                        Ok(t) => t,
                        Err(_) => break,
                    },
                },
            };
            if ws.write(Message::text(text)).is_err() {
                break 'session;
            }
        }
        match ws.flush() {
            Ok(()) => {}
            Err(tungstenite::Error::Io(e)) if e.kind() == io::ErrorKind::WouldBlock => {}
            Err(_) => break,
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    let _ = events.send(Event::Disconnect(id));
}
