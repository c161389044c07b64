//! Live teleoperation over a web socket.
//!
//! A simulation thread owns the environment and advances it at a fixed
//! rate while an operator is connected. Each connection gets a handler
//! thread; the two exchange commands and serialized snapshots over
//! channels. Finished episodes are written as ordinary episode logs.

mod wire;

use std::fs;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use crate::env::{make_env, ActionMode, EnvError, EnvSpec, Environment};
use crate::harness::{log_file_name, EpisodeLog, HarnessError, Recorder};
use crate::metrics::shortest_path_length;

pub use wire::{snapshot, BodyView, Command, LiveMetrics, StateMessage, WireMessage};

/// Physics ticks between `state` broadcasts (20 Hz at 60 Hz physics).
pub const STATE_EVERY: u64 = 3;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Address to bind; port 0 picks a free port.
    pub addr: SocketAddr,
    /// Simulation speed relative to real time.
    pub speed: f64,
    pub seed: u64,
    /// Directory for episode logs; none disables writing.
    pub log_dir: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { addr: SocketAddr::from(([127, 0, 0, 1], 8765)), speed: 1.0, seed: 0, log_dir: None }
    }
}

enum Event {
    Connected(Sender<String>),
    Disconnected,
    Message(WireMessage),
}

/// A running server. Dropping it does not stop it; call `shutdown`.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads {
            let _ = t.join();
        }
    }

    /// Blocks until the server stops.
    pub fn join(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }
}

/// Starts serving `spec`. Angular and wheel commands apply for one physics
/// tick each (the action repeat is forced to 1) so the latest command is
/// picked up every tick.
pub fn serve(mut spec: EnvSpec, opts: ServeOptions) -> Result<ServerHandle, HarnessError> {
    if spec.action_mode != ActionMode::HeadingStep {
        spec.action_repeat = 1;
    }
    if !(opts.speed > 0.0 && opts.speed.is_finite()) {
        return Err(HarnessError::Config("speed must be positive".into()));
    }
    let mut env = make_env(spec)?;
    env.reset_state(opts.seed)?;
    if let Some(dir) = &opts.log_dir {
        fs::create_dir_all(dir)?;
    }

    let listener = TcpListener::bind(opts.addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let occupied = Arc::new(AtomicBool::new(false));
    let (events_tx, events_rx) = mpsc::channel();

    let sim = {
        let stop = stop.clone();
        thread::spawn(move || Sim::new(env, opts).run(events_rx, &stop))
    };
    let acceptor = {
        let stop = stop.clone();
        thread::spawn(move || accept_loop(listener, events_tx, occupied, &stop))
    };
    Ok(ServerHandle { addr, stop, threads: vec![sim, acceptor] })
}

fn accept_loop(listener: TcpListener, events: Sender<Event>, occupied: Arc<AtomicBool>, stop: &AtomicBool) {
    let mut handlers: Vec<JoinHandle<()>> = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                if occupied.swap(true, Ordering::SeqCst) {
                    thread::spawn(move || reject(stream));
                    continue;
                }
                let events = events.clone();
                let occupied = occupied.clone();
                handlers.push(thread::spawn(move || {
                    connection(stream, &events);
                    let _ = events.send(Event::Disconnected);
                    occupied.store(false, Ordering::SeqCst);
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(_) => thread::sleep(Duration::from_millis(5)),
        }
        handlers.retain(|h| !h.is_finished());
    }
}

fn handshake(stream: TcpStream) -> Option<WebSocket<TcpStream>> {
    stream.set_nonblocking(false).ok()?;
    stream.set_nodelay(true).ok()?;
    tungstenite::accept(stream).ok()
}

fn reject(stream: TcpStream) {
    if let Some(mut ws) = handshake(stream) {
        let busy = WireMessage::Busy { reason: "another operator is connected".into() };
        let _ = ws.send(Message::Text(busy.to_text()));
        let _ = ws.close(None);
        let _ = ws.flush();
    }
}

/// Relays messages until the client leaves or the simulation stops.
fn connection(stream: TcpStream, events: &Sender<Event>) {
    let Some(mut ws) = handshake(stream) else { return };
    if ws.get_ref().set_read_timeout(Some(Duration::from_millis(2))).is_err() {
        return;
    }
    let (out_tx, out_rx) = mpsc::channel::<String>();
    if events.send(Event::Connected(out_tx)).is_err() {
        return;
    }
    loop {
        match ws.read() {
            Ok(Message::Text(text)) => {
                let msg = match WireMessage::parse(&text) {
                    Ok(m) => m,
                    Err(e) => {
                        let _ = ws.send(Message::Text(WireMessage::Error { reason: e.to_string() }.to_text()));
                        continue;
                    }
                };
                if events.send(Event::Message(msg)).is_err() {
                    return;
                }
            }
            Ok(Message::Close(_)) => return,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => return,
        }
        loop {
            match out_rx.try_recv() {
                Ok(text) => {
                    if ws.send(Message::Text(text)).is_err() {
                        return;
                    }
                }
                Err(mpsc::TryRecvError::Empty) => break,
                // the simulation has stopped
                Err(mpsc::TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    return;
                }
            }
        }
    }
}

struct Sim {
    env: Environment,
    opts: ServeOptions,
    client: Option<Sender<String>>,
    cmd: Command,
    recorder: Option<Recorder>,
    shortest: Option<f64>,
    tick: u64,
    last_sent: Option<u64>,
    episodes: u64,
}

impl Sim {
    fn new(env: Environment, opts: ServeOptions) -> Self {
        let mut sim = Sim {
            env,
            opts,
            client: None,
            cmd: Command::default(),
            recorder: None,
            shortest: None,
            tick: 0,
            last_sent: None,
            episodes: 0,
        };
        sim.start_episode();
        sim
    }

    fn start_episode(&mut self) {
        self.recorder = Some(Recorder::new(&self.env, "teleop"));
        let start = self.env.trace().robot_start;
        self.shortest = shortest_path_length(self.env.map(), start).ok();
    }

    fn send(&mut self, msg: &WireMessage) {
        if let Some(c) = &self.client {
            if c.send(msg.to_text()).is_err() {
                self.client = None;
            }
        }
    }

    fn broadcast_state(&mut self) {
        if self.client.is_some() && self.last_sent.is_none_or(|t| self.tick > t) {
            let msg = WireMessage::State(snapshot(&self.env, self.tick, self.shortest));
            self.send(&msg);
            self.last_sent = Some(self.tick);
        }
    }

    fn run(mut self, events: Receiver<Event>, stop: &AtomicBool) {
        let mut next = Instant::now();
        let mut since_state = 0u64;
        while !stop.load(Ordering::SeqCst) {
            // drain pending input; the newest command wins
            loop {
                let wait = if self.client.is_some() && self.env.is_active() {
                    next.saturating_duration_since(Instant::now())
                } else {
                    Duration::from_millis(5)
                };
                match events.recv_timeout(wait) {
                    Ok(e) => self.handle(e),
                    Err(RecvTimeoutError::Timeout) => break,
                    Err(RecvTimeoutError::Disconnected) => return,
                }
                if stop.load(Ordering::SeqCst) {
                    return;
                }
            }
            if self.client.is_none() || !self.env.is_active() {
                next = Instant::now();
                continue;
            }
            let substeps = match self.cmd.action(self.env.spec()) {
                Some(action) => self.step(action),
                None => 1,
            };
            since_state += substeps;
            if since_state >= STATE_EVERY || !self.env.is_active() {
                since_state = 0;
                self.broadcast_state();
            }
            if !self.env.is_active() {
                self.end_episode(None);
            }
            next += Duration::from_secs_f64(self.env.spec().physics.dt * substeps as f64 / self.opts.speed);
            // fall behind gracefully rather than bursting
            let now = Instant::now();
            if next + Duration::from_millis(100) < now {
                next = now;
            }
        }
    }

    /// Applies one action; returns the physics ticks it took.
    fn step(&mut self, action: crate::env::Action) -> u64 {
        match self.env.step_with(action, false) {
            Ok(t) => {
                if let Some(r) = &mut self.recorder {
                    r.record(&self.env, action, &t);
                }
                let n = t.info.substeps.max(1) as u64;
                self.tick += n;
                n
            }
            Err(EnvError::WrongActionMode { .. } | EnvError::ActionOutOfRange(_)) => {
                let reason = format!("rejected command {action:?} for {}", self.env.spec().action_mode.as_str());
                self.send(&WireMessage::Error { reason });
                self.cmd = Command::default();
                1
            }
            Err(e) => {
                self.env.abort();
                self.end_episode(Some(e.to_string()));
                1
            }
        }
    }

    fn end_episode(&mut self, error: Option<String>) {
        let Some(rec) = self.recorder.take() else { return };
        let log = rec.finish(&self.env, error);
        let path = self.write_log(&log);
        self.episodes += 1;
        let msg = WireMessage::EpisodeEnd {
            tick: self.tick,
            seed: log.header.seed,
            metrics: log.footer.metrics.clone(),
            outcome: log.footer.outcome.clone(),
            log: path,
        };
        self.send(&msg);
    }

    fn write_log(&self, log: &EpisodeLog) -> Option<String> {
        let dir = self.opts.log_dir.as_ref()?;
        let path = dir.join(format!("{:04}_{}", self.episodes, log_file_name(log)));
        let file = fs::File::create(&path).ok()?;
        log.write_to(std::io::BufWriter::new(file)).ok()?;
        Some(path.display().to_string())
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Connected(tx) => {
                self.client = Some(tx);
                self.cmd = Command::default();
                self.last_sent = None;
                self.broadcast_state();
            }
            Event::Disconnected => {
                self.client = None;
                self.cmd = Command::default();
            }
            Event::Message(WireMessage::Cmd { cmd }) => self.cmd = cmd,
            Event::Message(WireMessage::Reset { seed, env, variant }) => {
                if let Err(reason) = self.reset(seed, env, variant) {
                    self.send(&WireMessage::Error { reason });
                }
            }
            Event::Message(other) => {
                let reason = format!("unexpected message from client: {}", other.to_text());
                self.send(&WireMessage::Error { reason });
            }
        }
    }

    fn reset(&mut self, seed: Option<u64>, env: Option<crate::env::EnvKind>, variant: Option<String>) -> Result<(), String> {
        if env.is_some() || variant.is_some() {
            let mut spec = match env {
                Some(kind) if kind != self.env.spec().env => EnvSpec::new(kind),
                _ => self.env.spec().clone(),
            };
            if let Some(v) = &variant {
                spec.apply_variant(v).map_err(|e| e.to_string())?;
            }
            if spec.action_mode != ActionMode::HeadingStep {
                spec.action_repeat = 1;
            }
            if spec != *self.env.spec() {
                self.end_active();
                self.env = make_env(spec).map_err(|e| e.to_string())?;
            }
        }
        self.end_active();
        let seed = seed.unwrap_or(self.env.seed() + 1);
        self.env.reset_state(seed).map_err(|e| e.to_string())?;
        self.cmd = Command::default();
        self.tick += 1;
        self.start_episode();
        self.broadcast_state();
        Ok(())
    }

    /// Ends an unfinished episode as truncated and logs it.
    fn end_active(&mut self) {
        if self.env.is_active() && self.recorder.as_ref().is_some_and(|r| r.steps() > 0) {
            self.env.abort();
            self.end_episode(None);
        }
        self.recorder = None;
    }
}
