//! Live sessions: one simulation thread per session, fed by a command queue.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use crossbeam_channel::{bounded, unbounded, Receiver, Sender, TryRecvError, TrySendError};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::encode_frame;
use super::iec::{Candidate, IecConfig, IecError, IecPopulation};
use crate::engine::{state_hash, World};
use crate::geometry::Vector;
use crate::io::RunConfig;
use crate::recipe::{serialize_recipe, Recipe, RecipeSampler};

pub type SessionId = u64;
pub type FrameBytes = Arc<Vec<u8>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Paused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: SessionId,
    pub status: Status,
    pub step: u64,
    pub particles: usize,
    pub iec: bool,
}

/// Something that changed a session, in the order it was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub step: u64,
    pub op: String,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    Pause,
    Resume,
    /// Advance exactly `n` steps, then pause.
    Step { n: u64 },
    Status,
    Hash,
    Events,
    Inject {
        recipe: Recipe,
        center: Vec<f64>,
        #[serde(default = "default_inject_radius")]
        radius: f64,
    },
    IecPropose {
        #[serde(default)]
        thumbnails: bool,
    },
    IecSelect { ids: Vec<u64> },
    IecMix { a: u64, b: u64 },
    IecMutate { id: u64 },
    IecInject {
        id: u64,
        center: Vec<f64>,
        #[serde(default = "default_inject_radius")]
        radius: f64,
    },
}

fn default_inject_radius() -> f64 {
    50.0
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::Step { .. } => "step",
            Command::Status => "status",
            Command::Hash => "hash",
            Command::Events => "events",
            Command::Inject { .. } => "inject",
            Command::IecPropose { .. } => "iec_propose",
            Command::IecSelect { .. } => "iec_select",
            Command::IecMix { .. } => "iec_mix",
            Command::IecMutate { .. } => "iec_mutate",
            Command::IecInject { .. } => "iec_inject",
        }
    }

    /// Read-only commands are not logged.
    fn mutates(&self) -> bool {
        !matches!(self, Command::Status | Command::Hash | Command::Events | Command::IecPropose { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedCandidate {
    pub id: u64,
    pub recipe: String,
    pub parents: Vec<u64>,
    /// Base64 frames of the thumbnail run, when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thumbnail: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Ok { info: SessionInfo },
    Hash { step: u64, hash: String },
    Events { events: Vec<SessionEvent> },
    Injected { info: SessionInfo, first: usize, count: usize },
    Candidates { generation: u64, candidates: Vec<ProposedCandidate> },
    Candidate { candidate: ProposedCandidate },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("session is not in IEC mode")]
    NotIec,
    #[error(transparent)]
    Iec(#[from] IecError),
    #[error("{0}")]
    Rejected(String),
    #[error("session closed")]
    Closed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionSpec {
    pub config: RunConfig,
    pub iec: Option<IecConfig>,
    pub start_running: bool,
}

enum Envelope {
    Command(Command, Sender<Result<Response, ServiceError>>),
    Subscribe { decimation: u64, capacity: usize, reply: Sender<Receiver<FrameBytes>> },
    Shutdown,
}

struct Subscriber {
    decimation: u64,
    last_step: Option<u64>,
    tx: Sender<FrameBytes>,
}

struct SessionState {
    id: SessionId,
    world: World,
    status: Status,
    iec: Option<IecPopulation>,
    events: Vec<SessionEvent>,
    subscribers: Vec<Subscriber>,
    shared: Arc<RwLock<SessionInfo>>,
}

impl SessionState {
    fn info(&self) -> SessionInfo {
        SessionInfo {
            id: self.id,
            status: self.status,
            step: self.world.step_count(),
            particles: self.world.len(),
            iec: self.iec.is_some(),
        }
    }

    fn publish_info(&self) {
        *self.shared.write() = self.info();
    }

    fn log(&mut self, op: &str, detail: serde_json::Value) {
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent { seq, step: self.world.step_count(), op: op.into(), detail });
    }

    fn step_once(&mut self) {
        self.world.step();
        self.push_frames();
    }

    /// Frames go only to subscribers that are due and have room; a frame is
    /// encoded only if at least one of them will take it.
    fn push_frames(&mut self) {
        let step = self.world.step_count();
        let due = |s: &Subscriber| step % s.decimation == 0 && s.last_step.is_none_or(|l| step > l);
        if !self.subscribers.iter().any(|s| due(s) && !s.tx.is_full()) {
            return;
        }
        let frame: FrameBytes = Arc::new(encode_frame(&self.world));
        self.subscribers.retain_mut(|s| {
            if !due(s) {
                return true;
            }
            match s.tx.try_send(Arc::clone(&frame)) {
                Ok(()) => {
                    s.last_step = Some(step);
                    true
                }
                Err(TrySendError::Full(_)) => true,
                Err(TrySendError::Disconnected(_)) => false,
            }
        });
    }

    fn iec(&mut self) -> Result<&mut IecPopulation, ServiceError> {
        self.iec.as_mut().ok_or(ServiceError::NotIec)
    }

    fn center(&self, c: &[f64]) -> Result<Vector, ServiceError> {
        let dim = self.world.space().dim;
        if c.len() != dim {
            return Err(ServiceError::Rejected(format!("center needs {dim} components, got {}", c.len())));
        }
        let mut v = [0.0; 3];
        v[..dim].copy_from_slice(c);
        Ok(v)
    }

    fn inject(&mut self, recipe: &Recipe, center: &[f64], radius: f64) -> Result<Response, ServiceError> {
        let center = self.center(center)?;
        let range = self
            .world
            .spawn(recipe, center, radius)
            .map_err(|e| ServiceError::Rejected(e.to_string()))?;
        Ok(Response::Injected { info: self.info(), first: range.start, count: range.len() })
    }

    fn propose(c: &Candidate, thumb: Option<Vec<Vec<u8>>>) -> ProposedCandidate {
        use base64::Engine as _;
        ProposedCandidate {
            id: c.id,
            recipe: serialize_recipe(&c.recipe),
            parents: c.parents.clone(),
            thumbnail: thumb
                .unwrap_or_default()
                .iter()
                .map(|f| base64::engine::general_purpose::STANDARD.encode(f))
                .collect(),
        }
    }

    fn apply(&mut self, cmd: &Command) -> Result<Response, ServiceError> {
        let ranges = self.world.config().ranges;
        match cmd {
            Command::Pause => self.status = Status::Paused,
            Command::Resume => self.status = Status::Running,
            Command::Step { n } => {
                self.status = Status::Paused;
                for _ in 0..*n {
                    self.step_once();
                }
            }
            Command::Status => {}
            Command::Hash => {
                return Ok(Response::Hash {
                    step: self.world.step_count(),
                    hash: format!("{:016x}", state_hash(&self.world)),
                })
            }
            Command::Events => return Ok(Response::Events { events: self.events.clone() }),
            Command::Inject { recipe, center, radius } => return self.inject(recipe, center, *radius),
            Command::IecPropose { thumbnails } => {
                let base = self.world.config().clone();
                let pop = self.iec()?;
                let mut out = Vec::new();
                for c in pop.candidates() {
                    let thumb = if *thumbnails { Some(pop.thumbnail(c.id, &base)?.frames) } else { None };
                    out.push(Self::propose(c, thumb));
                }
                return Ok(Response::Candidates { generation: pop.generation, candidates: out });
            }
            Command::IecSelect { ids } => {
                let pop = self.iec()?;
                let next = pop.select(ids, &ranges)?;
                let generation = pop.generation;
                return Ok(Response::Candidates {
                    generation,
                    candidates: next.iter().map(|c| Self::propose(c, None)).collect(),
                });
            }
            Command::IecMix { a, b } => {
                let c = self.iec()?.mix(*a, *b)?;
                return Ok(Response::Candidate { candidate: Self::propose(&c, None) });
            }
            Command::IecMutate { id } => {
                let c = self.iec()?.mutate(*id, &ranges)?;
                return Ok(Response::Candidate { candidate: Self::propose(&c, None) });
            }
            Command::IecInject { id, center, radius } => {
                let recipe = self.iec()?.get(*id)?.recipe.clone();
                return self.inject(&recipe, center, *radius);
            }
        }
        Ok(Response::Ok { info: self.info() })
    }

    fn handle(&mut self, cmd: Command, reply: Sender<Result<Response, ServiceError>>) {
        let result = self.apply(&cmd);
        if result.is_ok() && cmd.mutates() {
            let detail = serde_json::to_value(&cmd).unwrap_or(serde_json::Value::Null);
            self.log(cmd.name(), detail);
        }
        self.publish_info();
        let _ = reply.send(result);
    }

    /// Returns false on shutdown.
    fn handle_envelope(&mut self, env: Envelope) -> bool {
        match env {
            Envelope::Command(cmd, reply) => self.handle(cmd, reply),
            Envelope::Subscribe { decimation, capacity, reply } => {
                let (tx, rx) = bounded(capacity.max(1));
                self.subscribers.push(Subscriber { decimation: decimation.max(1), last_step: None, tx });
                let _ = reply.send(rx);
            }
            Envelope::Shutdown => return false,
        }
        true
    }

    fn run(mut self, rx: Receiver<Envelope>) {
        loop {
            let next = if self.status == Status::Running {
                match rx.try_recv() {
                    Ok(env) => Some(env),
                    Err(TryRecvError::Empty) => None,
                    Err(TryRecvError::Disconnected) => return,
                }
            } else {
                match rx.recv() {
                    Ok(env) => Some(env),
                    Err(_) => return,
                }
            };
            match next {
                Some(env) => {
                    if !self.handle_envelope(env) {
                        return;
                    }
                }
                None => {
                    self.step_once();
                    self.publish_info();
                }
            }
        }
    }
}

/// Client side of one session.
#[derive(Clone)]
pub struct SessionHandle {
    pub id: SessionId,
    tx: Sender<Envelope>,
    info: Arc<RwLock<SessionInfo>>,
}

impl SessionHandle {
    /// Queue a command and wait for its result.
    pub fn request(&self, cmd: Command) -> Result<Response, ServiceError> {
        let (tx, rx) = bounded(1);
        self.tx.send(Envelope::Command(cmd, tx)).map_err(|_| ServiceError::Closed)?;
        rx.recv().map_err(|_| ServiceError::Closed)?
    }

    /// Last published status; does not wait for the simulation thread.
    pub fn info(&self) -> SessionInfo {
        self.info.read().clone()
    }

    /// Attach a frame stream. Frames come at most every `decimation` steps; a
    /// consumer that falls `capacity` frames behind misses frames instead of
    /// slowing the session. The stream ends when the session is destroyed.
    pub fn stream_frames(&self, decimation: u64, capacity: usize) -> Result<Receiver<FrameBytes>, ServiceError> {
        let (tx, rx) = bounded(1);
        self.tx
            .send(Envelope::Subscribe { decimation, capacity, reply: tx })
            .map_err(|_| ServiceError::Closed)?;
        rx.recv().map_err(|_| ServiceError::Closed)
    }

    pub fn hash(&self) -> Result<u64, ServiceError> {
        match self.request(Command::Hash)? {
            Response::Hash { hash, .. } => Ok(u64::from_str_radix(&hash, 16).expect("hex hash")),
            other => Err(ServiceError::Rejected(format!("unexpected response {other:?}"))),
        }
    }

    pub fn events(&self) -> Result<Vec<SessionEvent>, ServiceError> {
        match self.request(Command::Events)? {
            Response::Events { events } => Ok(events),
            other => Err(ServiceError::Rejected(format!("unexpected response {other:?}"))),
        }
    }
}

struct Entry {
    handle: SessionHandle,
    thread: Option<JoinHandle<()>>,
}

/// All live sessions of one server.
#[derive(Clone, Default)]
pub struct SessionRegistry {
    sessions: Arc<RwLock<HashMap<SessionId, Entry>>>,
    next_id: Arc<AtomicU64>,
}

impl SessionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, spec: SessionSpec) -> Result<SessionHandle, ServiceError> {
        let world = spec.config.build_world().map_err(|e| ServiceError::Config(e.to_string()))?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        let iec = spec.iec.map(|cfg| {
            let sampler = RecipeSampler { ranges: spec.config.world.ranges, ..Default::default() };
            IecPopulation::random(cfg, &sampler, spec.config.world.seed)
        });
        let status = if spec.start_running { Status::Running } else { Status::Paused };
        let info = Arc::new(RwLock::new(SessionInfo {
            id,
            status,
            step: world.step_count(),
            particles: world.len(),
            iec: iec.is_some(),
        }));
        let mut state = SessionState {
            id,
            world,
            status,
            iec,
            events: Vec::new(),
            subscribers: Vec::new(),
            shared: Arc::clone(&info),
        };
        state.log("create", serde_json::json!({ "particles": state.world.len(), "iec": state.iec.is_some() }));
        let (tx, rx) = unbounded();
        let thread = std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || state.run(rx))
            .map_err(|e| ServiceError::Rejected(e.to_string()))?;
        let handle = SessionHandle { id, tx, info };
        self.sessions.write().insert(id, Entry { handle: handle.clone(), thread: Some(thread) });
        Ok(handle)
    }

    pub fn get(&self, id: SessionId) -> Result<SessionHandle, ServiceError> {
        self.sessions.read().get(&id).map(|e| e.handle.clone()).ok_or(ServiceError::UnknownSession(id))
    }

    pub fn ids(&self) -> Vec<SessionId> {
        let mut v: Vec<_> = self.sessions.read().keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Stop the session thread and release its world; open streams end.
    pub fn destroy(&self, id: SessionId) -> Result<(), ServiceError> {
        let entry = self.sessions.write().remove(&id).ok_or(ServiceError::UnknownSession(id))?;
        let _ = entry.handle.tx.send(Envelope::Shutdown);
        if let Some(t) = entry.thread {
            let _ = t.join();
        }
        Ok(())
    }

    pub fn destroy_all(&self) {
        for id in self.ids() {
            let _ = self.destroy(id);
        }
    }
}
