//! One steering session: an optimizer engine plus the request handling and
//! frame cadence around it. Owned by the optimizer thread.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use sgdraw::criteria::Kind;
use sgdraw::io::RunConfig;
use sgdraw::optimizer::{initial_layout, CriterionConfig, Engine, OptimizerConfig};
use sgdraw::{Graph, Layout, Point};

use crate::protocol::{
    parse_request, Ack, Envelope, ErrorReply, Frame, GraphInfo, Heartbeat, Hello, Request, ServerMessage, Status,
    PROTOCOL_VERSION,
};

/// Frame cadence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cadence {
    /// Emit a frame every `every_k` iterations.
    pub every_k: usize,
    /// Attach qualities to every `quality_every`-th frame.
    pub quality_every: usize,
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence {
            every_k: 1,
            quality_every: 50,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("{0}")]
    Core(#[from] sgdraw::Error),
    #[error("invalid cadence: {0}")]
    Cadence(String),
}

pub struct Session {
    engine: Engine,
    paused: bool,
    cadence: Cadence,
    frames: u64,
}

impl Session {
    pub fn new(
        graph: Arc<Graph>,
        criteria: &[CriterionConfig],
        opt: OptimizerConfig,
        init: Layout,
        cadence: Cadence,
    ) -> Result<Session, SessionError> {
        if cadence.every_k == 0 || cadence.quality_every == 0 {
            return Err(SessionError::Cadence(format!(
                "every_k ({}) and quality_every ({}) must be at least 1",
                cadence.every_k, cadence.quality_every
            )));
        }
        let mut engine = Engine::new(graph, criteria, opt, init)?;
        // A steering session can run indefinitely; keep memory flat.
        engine.set_recording(false);
        Ok(Session {
            engine,
            paused: false,
            cadence,
            frames: 0,
        })
    }

    /// Session for a run configuration, starting from its seeded layout.
    /// Relative graph files are resolved against `base`.
    pub fn from_config(config: &RunConfig, base: Option<&Path>, cadence: Cadence) -> Result<Session, SessionError> {
        let graph = Arc::new(config.graph.load(base)?);
        let mut opt = config.optimizer.clone();
        opt.seed = config.resolved_seed()?;
        let init = initial_layout(graph.n(), opt.seed);
        Session::new(graph, &config.criteria, opt, init, cadence)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn status(&self) -> Status {
        if self.paused {
            Status::Paused
        } else if self.engine.stopped().is_some() {
            Status::Converged
        } else {
            Status::Running
        }
    }

    pub fn hello(&self) -> ServerMessage {
        let g = self.engine.graph();
        let weights = self.engine.weights();
        ServerMessage::Hello(Hello {
            version: PROTOCOL_VERSION,
            graph: GraphInfo {
                name: g.name().to_string(),
                nodes: g.n(),
                edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            },
            criteria: Kind::ALL.iter().map(|k| k.code().to_string()).collect(),
            weights: Kind::ALL
                .iter()
                .map(|k| (k.code().to_string(), weights[k.index()]))
                .collect(),
            lr: self.engine.learning_rate(),
            every_k: self.cadence.every_k,
            quality_every: self.cadence.quality_every,
            status: self.status(),
            iter: self.engine.iteration(),
            positions: positions(self.engine.layout()),
        })
    }

    /// Applies one client message between iterations and returns the ack or
    /// error reply. A rejected message leaves the session unchanged.
    pub fn handle_message(&mut self, text: &str) -> ServerMessage {
        match parse_request(text) {
            Ok(envelope) => self.apply(envelope),
            Err(rejected) => rejected.into(),
        }
    }

    pub fn apply(&mut self, envelope: Envelope) -> ServerMessage {
        let Envelope { seq, request } = envelope;
        let name = request.type_name();
        match self.apply_request(request) {
            Ok(()) => ServerMessage::Ack(Ack {
                seq,
                request: name.to_string(),
                iter: self.engine.iteration(),
            }),
            Err(message) => ServerMessage::Error(ErrorReply {
                seq,
                request: Some(name.to_string()),
                message,
            }),
        }
    }

    fn apply_request(&mut self, request: Request) -> Result<(), String> {
        let n = self.engine.graph().n();
        let check_node = |id: usize| {
            if id < n {
                Ok(())
            } else {
                Err(format!("unknown node {id}; the graph has {n} nodes"))
            }
        };
        match request {
            Request::SetWeight { criterion, value } => {
                let kind: Kind = criterion.parse().map_err(|_| {
                    let codes: Vec<&str> = Kind::ALL.iter().map(|k| k.code()).collect();
                    format!("unknown criterion {criterion:?}; expected one of {}", codes.join(", "))
                })?;
                if !(value.is_finite() && value >= 0.0) {
                    return Err(format!("weight {value} must be finite and non-negative"));
                }
                self.engine.set_weight(kind, value).map_err(|e| e.to_string())?;
                self.engine.restart_annealing();
            }
            Request::PinNode { id, x, y } => {
                check_node(id)?;
                self.engine.pin(id, Point::new(x, y)).map_err(|e| e.to_string())?;
                self.engine.restart_annealing();
            }
            Request::UnpinNode { id } => {
                check_node(id)?;
                self.engine.unpin(id).map_err(|e| e.to_string())?;
                self.engine.restart_annealing();
            }
            Request::Pause {} => self.paused = true,
            Request::Resume {} => self.paused = false,
            Request::Reset { seed } => self.engine.reset(seed).map_err(|e| e.to_string())?,
            Request::SetLr { value } => self.engine.set_lr(value).map_err(|e| e.to_string())?,
        }
        Ok(())
    }

    /// Runs one iteration when the session is running. Returns the frame
    /// due after it, if any. A diverged run pauses the session and is
    /// reported as an error message.
    pub fn tick(&mut self) -> Option<ServerMessage> {
        if self.status() != Status::Running {
            return None;
        }
        if let Err(e) = self.engine.step() {
            self.paused = true;
            return Some(ServerMessage::Error(ErrorReply {
                seq: None,
                request: None,
                message: format!("optimization paused: {e}"),
            }));
        }
        if self.engine.iteration() % self.cadence.every_k == 0 {
            Some(ServerMessage::Frame(self.frame()))
        } else {
            None
        }
    }

    fn frame(&mut self) -> Frame {
        let with_qualities = self.frames % self.cadence.quality_every as u64 == 0;
        self.frames += 1;
        let qualities = if with_qualities {
            self.engine.quality().ok().map(|report| {
                Kind::ALL
                    .iter()
                    .map(|&k| (k.code().to_string(), report.exported(k)))
                    .filter(|(_, q)| q.is_finite())
                    .collect::<BTreeMap<_, _>>()
            })
        } else {
            None
        };
        Frame {
            iter: self.engine.iteration(),
            positions: positions(self.engine.layout()),
            ema_loss: self.engine.ema(),
            qualities,
        }
    }

    pub fn heartbeat(&self) -> ServerMessage {
        ServerMessage::Heartbeat(Heartbeat {
            iter: self.engine.iteration(),
            status: self.status(),
        })
    }
}

fn positions(layout: &Layout) -> Vec<[f64; 2]> {
    layout.points().iter().map(|p| [p.x, p.y]).collect()
}
