//! The layout loop: per-criterion sampling, weighted gradient steps,
//! learning-rate annealing on a plateauing smoothed loss, and optional
//! guarded (never-worsening) updates.

mod control;
mod safe;
mod schedule;
mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use control::{default_ema_factor, ema_series, patience_for, Action, Ema, Patience};
pub use safe::{safe_update, safe_update_crossings, SafeUpdate};
pub use schedule::{smooth_step, smooth_step_weight, Schedule, Segment};
pub use trace::{IterationRecord, RunTrace, Snapshot, StopReason, TRACE_VERSION};

use crate::criteria::{self, EdgeNode, EdgeTarget, IncidentPair, Kind, LossValue, PairTarget};
use crate::error::{Error, Result};
use crate::geometry::{all_crossings, CrossingList, Layout, Point};
use crate::graph::{Distances, Graph};
use crate::neural::{crossing_loss, labelled_pairs, CrossingPredictor, PredictorConfig};
use crate::quality::{self, QualityParams, QualityReport};
use crate::rng::{derive_seed, seeded, SeededRng};
use crate::sampler::{
    edge_node_sampler, incident_pairs, node_pair_sampler, node_sampler, np_subgraph_sample, random_edge_pairs,
    CrossingBatch, CrossingSource, SamplePool, Sampler,
};

/// One criterion's weight schedule, batch size and constants. Constants
/// left unset take their defaults; setting one that the criterion does not
/// use is an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    pub kind: Kind,
    #[serde(default = "unit_schedule")]
    pub weight: Schedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    /// IL target edge length (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal_length: Option<f64>,
    /// ANR sensitivity `s` (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<f64>,
    /// AR target ratio (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_ratio: Option<f64>,
    /// VR target resolution (default `1 / sqrt(n)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    /// AR quality rotations (default 7).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<usize>,
    /// NP share of random outsiders added to each sample (default 0.1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_fraction: Option<f64>,
    /// CR/CAM: re-enumerate crossings at least this often (in batches).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refresh_period: Option<usize>,
    /// CR/CAM: switch to random edge pairs above this many crossings per
    /// edge (default 5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_factor: Option<f64>,
}

fn unit_schedule() -> Schedule {
    Schedule::constant(1.0).expect("valid")
}

impl CriterionConfig {
    pub fn new(kind: Kind, weight: Schedule) -> CriterionConfig {
        CriterionConfig {
            kind,
            weight,
            sample_size: None,
            ideal_length: None,
            sensitivity: None,
            target_ratio: None,
            resolution: None,
            rotations: None,
            extra_fraction: None,
            refresh_period: None,
            dense_factor: None,
        }
    }

    /// Constant weight.
    pub fn constant(kind: Kind, weight: f64) -> Result<CriterionConfig> {
        Ok(CriterionConfig::new(kind, Schedule::constant(weight)?))
    }

    pub fn with_sample_size(mut self, m: usize) -> CriterionConfig {
        self.sample_size = Some(m);
        self
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size.unwrap_or_else(|| self.kind.default_sample_size())
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.kind;
        let fail = |msg: String| Err(Error::Config(format!("criterion {k}: {msg}")));
        if self.sample_size == Some(0) {
            return fail("sample_size must be at least 1".into());
        }
        let reals = [
            ("ideal_length", self.ideal_length, k == Kind::IdealEdgeLength),
            ("sensitivity", self.sensitivity, k == Kind::AngularResolution),
            ("target_ratio", self.target_ratio, k == Kind::AspectRatio),
            ("resolution", self.resolution, k == Kind::VertexResolution),
            (
                "extra_fraction",
                self.extra_fraction,
                k == Kind::NeighborhoodPreservation,
            ),
            (
                "dense_factor",
                self.dense_factor,
                matches!(k, Kind::Crossings | Kind::CrossingAngle),
            ),
        ];
        for (name, value, allowed) in reals {
            if let Some(v) = value {
                if !allowed {
                    return fail(format!("{name} does not apply"));
                }
                let ok = if name == "extra_fraction" {
                    v.is_finite() && v >= 0.0
                } else {
                    v.is_finite() && v > 0.0
                };
                if !ok {
                    return fail(format!("{name} = {v} is out of range"));
                }
            }
        }
        let counts = [
            ("rotations", self.rotations, k == Kind::AspectRatio),
            (
                "refresh_period",
                self.refresh_period,
                matches!(k, Kind::Crossings | Kind::CrossingAngle),
            ),
        ];
        for (name, value, allowed) in counts {
            if let Some(v) = value {
                if !allowed {
                    return fail(format!("{name} does not apply"));
                }
                if v == 0 {
                    return fail(format!("{name} must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Sgd,
    Momentum,
    Adam,
    RmsProp,
}

impl Method {
    /// Base learning rate used when none is configured.
    pub fn default_lr(self) -> f64 {
        match self {
            Method::Sgd => 4.0,
            Method::Momentum => 0.4,
            Method::Adam | Method::RmsProp => 0.1,
        }
    }
}

/// Quality kept from worsening by safe updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Guard {
    /// Crossing count, evaluated incrementally.
    Crossings,
    /// Any measure in its lower-is-better orientation.
    Measure(Kind),
}

impl FromStr for Guard {
    type Err = Error;

    fn from_str(s: &str) -> Result<Guard> {
        if s.eq_ignore_ascii_case("crossings") {
            return Ok(Guard::Crossings);
        }
        s.parse::<Kind>().map(Guard::Measure).map_err(|_| {
            Error::Config(format!(
                "unknown guard {s:?} (expected \"crossings\" or a criterion code)"
            ))
        })
    }
}

impl TryFrom<String> for Guard {
    type Error = Error;

    fn try_from(s: String) -> Result<Guard> {
        s.parse()
    }
}

impl From<Guard> for String {
    fn from(g: Guard) -> String {
        g.to_string()
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Crossings => f.write_str("crossings"),
            Guard::Measure(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    /// Learning rate before annealing; unset means the method's default
    /// ([`Method::default_lr`]).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<Schedule>,
    pub method: Method,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rms_decay: f64,
    pub eps: f64,
    /// Annealing factor applied when the smoothed loss stalls.
    pub decay: f64,
    pub ema_factor: f64,
    /// Iterations without improvement before annealing; unset means
    /// `max(100, floor(n / m) * 300)` with `m` the smallest active batch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    /// Stop once the annealing multiplier drops below this.
    pub min_lr_fraction: f64,
    /// Set per run rather than in configuration files.
    #[serde(skip)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub safe_update: Option<Guard>,
    /// Store a quality snapshot every this many iterations (0: never).
    pub quality_every: usize,
    pub predictor: PredictorConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iter: 10_000,
            lr: None,
            method: Method::Sgd,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            rms_decay: 0.99,
            eps: 1e-8,
            decay: 0.7,
            ema_factor: default_ema_factor(),
            patience: None,
            min_lr_fraction: 1e-3,
            seed: 0,
            safe_update: None,
            quality_every: 0,
            predictor: PredictorConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn lr_schedule(&self) -> Schedule {
        self.lr
            .clone()
            .unwrap_or_else(|| Schedule::constant(self.method.default_lr()).expect("valid"))
    }

    pub fn with_lr(mut self, lr: f64) -> Result<Self> {
        self.lr = Some(Schedule::constant(lr)?);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1");
        }
        if !self.lr_schedule().is_positive() {
            return fail("the learning rate must stay positive");
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return fail("decay must lie strictly between 0 and 1");
        }
        if !(self.ema_factor > 0.0 && self.ema_factor < 1.0) {
            return fail("ema_factor must lie strictly between 0 and 1");
        }
        for (name, v) in [
            ("momentum", self.momentum),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("rms_decay", self.rms_decay),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1)")));
            }
        }
        if !(self.eps > 0.0) || !(self.min_lr_fraction >= 0.0 && self.min_lr_fraction < 1.0) {
            return fail("eps must be positive and min_lr_fraction in [0, 1)");
        }
        if self.patience == Some(0) {
            return fail("patience must be at least 1");
        }
        Ok(())
    }
}

/// Standard-normal initial coordinates for `seed`.
pub fn initial_layout(n: usize, seed: u64) -> Layout {
    Layout::random_normal(n, &mut seeded(derive_seed(seed, 1)))
}

enum Source {
    Pairs(Sampler<(usize, usize)>),
    Edges(SamplePool<usize>),
    Seeds(SamplePool<usize>),
    Crossings(CrossingSource),
    Nodes(Sampler<usize>),
    Incident(Option<SamplePool<(usize, usize, usize)>>),
    EdgeNodes(Sampler<(usize, usize)>),
    Nothing,
}

struct Slot {
    config: CriterionConfig,
    source: Source,
}

impl Slot {
    fn new(config: CriterionConfig, g: &Graph, distances: Option<&Distances>, seed: u64) -> Result<Slot> {
        config.validate()?;
        let kind = config.kind;
        let seed = derive_seed(seed, 16 + kind.index() as u64);
        let n = g.n();
        let requires_distances = matches!(kind, Kind::Stress | Kind::NeighborhoodPreservation);
        if requires_distances && distances.is_none() {
            return Err(Error::Disconnected {
                components: g.component_count(),
            });
        }
        let edges_pool = || SamplePool::new((0..g.edges().len()).collect(), seed);
        let source = match kind {
            Kind::Stress if n >= 2 => Source::Pairs(node_pair_sampler(n, seed)?),
            Kind::IdealEdgeLength if !g.edges().is_empty() => Source::Edges(edges_pool()?),
            Kind::NeighborhoodPreservation if n >= 1 => Source::Seeds(SamplePool::new((0..n).collect(), seed)?),
            Kind::Crossings | Kind::CrossingAngle => Source::Crossings(CrossingSource::new(
                seed,
                config.refresh_period,
                config.dense_factor.unwrap_or(5.0),
                kind == Kind::CrossingAngle,
            )),
            Kind::AspectRatio | Kind::VertexResolution if n >= 2 => Source::Nodes(node_sampler(n, seed)?),
            Kind::AngularResolution => Source::Incident(SamplePool::new(incident_pairs(g), seed).ok()),
            Kind::Gabriel if n >= 3 && !g.edges().is_empty() => Source::EdgeNodes(edge_node_sampler(g, seed)?),
            _ => Source::Nothing,
        };
        Ok(Slot { config, source })
    }
}

/// Everything a loss evaluation may touch besides its own slot.
struct Env<'a> {
    graph: &'a Graph,
    distances: Option<&'a Distances>,
    layout: &'a Layout,
    rng: &'a mut SeededRng,
    predictor: &'a mut Option<CrossingPredictor>,
    predictor_config: &'a PredictorConfig,
    predictor_seed: u64,
    crossings: &'a mut Option<CrossingList>,
}

fn sample_loss(slot: &mut Slot, env: &mut Env<'_>) -> Result<LossValue> {
    let cfg = &slot.config;
    let m = cfg.sample_size();
    let layout = env.layout;
    let g = env.graph;
    Ok(match &mut slot.source {
        Source::Nothing => LossValue::zero(),
        Source::Pairs(s) => {
            let d = env.distances.expect("checked at construction");
            let batch: Vec<PairTarget> = s
                .next_batch(m)
                .into_iter()
                .map(|(i, j)| PairTarget {
                    i,
                    j,
                    d: f64::from(d.get(i, j)),
                })
                .collect();
            criteria::stress_loss(layout, &batch)
        }
        Source::Edges(pool) => {
            let l = cfg.ideal_length.unwrap_or(1.0);
            let batch: Vec<EdgeTarget> = pool
                .next_batch(m)
                .into_iter()
                .map(|e| {
                    let (i, j) = g.edges()[e];
                    EdgeTarget { i, j, l }
                })
                .collect();
            criteria::ideal_edge_length_loss(layout, &batch)
        }
        Source::Seeds(pool) => {
            let seeds = pool.next_batch(m);
            let sub = np_subgraph_sample(g, &seeds, cfg.extra_fraction.unwrap_or(0.1), env.rng);
            criteria::neighborhood_loss(layout, &sub)
        }
        Source::Crossings(src) => {
            let cache = &mut *env.crossings;
            let batch = src.next_batch(g, layout, m, || {
                cache.get_or_insert_with(|| all_crossings(layout, g)).clone()
            });
            let pairs = match batch {
                CrossingBatch::Pairs(p) => p,
                CrossingBatch::NoCrossings => Vec::new(),
            };
            if cfg.kind == Kind::CrossingAngle {
                criteria::crossing_angle_loss(layout, &pairs)
            } else {
                if env.predictor.is_none() {
                    *env.predictor = Some(CrossingPredictor::new(*env.predictor_config, env.predictor_seed)?);
                }
                let predictor = env.predictor.as_mut().expect("just created");
                let mut train = labelled_pairs(layout, &pairs);
                let negatives = random_edge_pairs(g, if pairs.is_empty() { m } else { pairs.len() }, env.rng);
                train.extend(labelled_pairs(layout, &negatives));
                if !train.is_empty() {
                    predictor.train_step(&train)?;
                }
                crossing_loss(layout, &pairs, predictor)
            }
        }
        Source::Nodes(s) => {
            let nodes = s.next_batch(m);
            if cfg.kind == Kind::AspectRatio {
                criteria::aspect_ratio_loss(layout, &nodes, cfg.target_ratio.unwrap_or(1.0))
            } else {
                let r = cfg.resolution.unwrap_or_else(|| criteria::default_resolution(g.n()));
                let mut pairs = Vec::with_capacity(nodes.len() * nodes.len() / 2);
                for (a, &i) in nodes.iter().enumerate() {
                    for &j in &nodes[a + 1..] {
                        pairs.push((i.min(j), i.max(j)));
                    }
                }
                let dmax = layout.diameter();
                if dmax > 0.0 {
                    criteria::vertex_resolution_loss(layout, &pairs, r, dmax)
                } else {
                    LossValue::zero()
                }
            }
        }
        Source::Incident(pool) => match pool {
            None => LossValue::zero(),
            Some(pool) => {
                let batch: Vec<IncidentPair> = pool
                    .next_batch(m)
                    .into_iter()
                    .map(|(i, j, k)| IncidentPair { i, j, k })
                    .collect();
                criteria::angular_resolution_loss(layout, &batch, cfg.sensitivity.unwrap_or(1.0))
            }
        },
        Source::EdgeNodes(s) => {
            let batch: Vec<EdgeNode> = s
                .next_batch(m)
                .into_iter()
                .map(|(e, k)| {
                    let (i, j) = g.edges()[e];
                    EdgeNode { i, j, k }
                })
                .collect();
            criteria::gabriel_loss(layout, &batch)
        }
    })
}

#[derive(Clone, Debug, Default)]
struct MethodState {
    velocity: Vec<Point>,
    first: Vec<Point>,
    second: Vec<Point>,
    steps: i32,
}

/// A resumable layout run. [`Engine::step`] performs one iteration; the
/// setters take effect from the next one.
pub struct Engine {
    graph: Arc<Graph>,
    distances: Option<Arc<Distances>>,
    opt: OptimizerConfig,
    lr: Schedule,
    slots: Vec<Option<Slot>>,
    layout: Layout,
    iteration: usize,
    ema: Ema,
    patience: Patience,
    state: MethodState,
    predictor: Option<CrossingPredictor>,
    rng: SeededRng,
    pinned: BTreeMap<usize, Point>,
    trace: RunTrace,
    recording: bool,
    started: Instant,
    stopped: Option<StopReason>,
    last_ema: Option<f64>,
    quality_params: QualityParams,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("graph", &self.graph.name())
            .field("iteration", &self.iteration)
            .field("stopped", &self.stopped)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(graph: Arc<Graph>, configs: &[CriterionConfig], opt: OptimizerConfig, init: Layout) -> Result<Engine> {
        if configs.is_empty() {
            return Err(Error::Config("no criteria configured".into()));
        }
        opt.validate()?;
        init.check(graph.n())?;
        let distances = if graph.is_connected() && graph.n() > 0 {
            Some(Arc::new(Distances::new(&graph)?))
        } else {
            None
        };
        let mut slots: Vec<Option<Slot>> = (0..9).map(|_| None).collect();
        for c in configs {
            let idx = c.kind.index();
            if slots[idx].is_some() {
                return Err(Error::Config(format!("criterion {} configured twice", c.kind)));
            }
            slots[idx] = Some(Slot::new(c.clone(), &graph, distances.as_deref(), opt.seed)?);
        }
        let patience = Self::patience_rule(&opt, &slots, graph.n())?;
        let mut engine = Engine {
            ema: Ema::new(opt.ema_factor)?,
            lr: opt.lr_schedule(),
            patience,
            rng: seeded(derive_seed(opt.seed, 3)),
            graph,
            distances,
            slots,
            layout: init,
            iteration: 0,
            state: MethodState::default(),
            predictor: None,
            pinned: BTreeMap::new(),
            trace: RunTrace::new(),
            recording: true,
            started: Instant::now(),
            stopped: None,
            last_ema: None,
            quality_params: QualityParams::default(),
            opt,
        };
        engine.refresh_quality_params();
        Ok(engine)
    }

    fn patience_rule(opt: &OptimizerConfig, slots: &[Option<Slot>], n: usize) -> Result<Patience> {
        let p = match opt.patience {
            Some(p) => p,
            None => {
                let m = slots
                    .iter()
                    .flatten()
                    .filter(|s| !s.config.weight.is_zero())
                    .map(|s| s.config.sample_size())
                    .min()
                    .unwrap_or(n.max(1));
                patience_for(n, m)
            }
        };
        Patience::new(p, opt.decay, opt.min_lr_fraction)
    }

    fn refresh_quality_params(&mut self) {
        let mut q = QualityParams::default();
        if let Some(s) = &self.slots[Kind::IdealEdgeLength.index()] {
            q.ideal_length = s.config.ideal_length.unwrap_or(1.0);
        }
        if let Some(s) = &self.slots[Kind::VertexResolution.index()] {
            q.resolution = s.config.resolution;
        }
        if let Some(s) = &self.slots[Kind::AspectRatio.index()] {
            q.rotations = s.config.rotations.unwrap_or(criteria::DEFAULT_ROTATIONS);
        }
        self.quality_params = q;
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn ema(&self) -> Option<f64> {
        self.last_ema
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn optimizer(&self) -> &OptimizerConfig {
        &self.opt
    }

    pub fn predictor(&self) -> Option<&CrossingPredictor> {
        self.predictor.as_ref()
    }

    pub fn stopped(&self) -> Option<StopReason> {
        self.stopped
    }

    pub fn pinned(&self) -> &BTreeMap<usize, Point> {
        &self.pinned
    }

    pub fn patience(&self) -> usize {
        self.patience.patience()
    }

    /// Effective learning rate for the next iteration.
    pub fn learning_rate(&self) -> f64 {
        self.lr.at(self.iteration + 1) * self.patience.scale()
    }

    /// Configured criteria in column order.
    pub fn criteria(&self) -> Vec<&CriterionConfig> {
        self.slots.iter().flatten().map(|s| &s.config).collect()
    }

    /// Current weight of each criterion (0 for unconfigured ones).
    pub fn weights(&self) -> [f64; 9] {
        let t = self.iteration + 1;
        Kind::ALL.map(|k| self.slots[k.index()].as_ref().map_or(0.0, |s| s.config.weight.at(t)))
    }

    /// Keep per-iteration records (default on). Long interactive sessions
    /// turn this off.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    /// Replace a criterion's schedule by a constant weight, adding the
    /// criterion with default settings if it was not configured.
    pub fn set_weight(&mut self, kind: Kind, weight: f64) -> Result<()> {
        let schedule = Schedule::constant(weight)?;
        let idx = kind.index();
        match &mut self.slots[idx] {
            Some(slot) => slot.config.weight = schedule,
            None => {
                let cfg = CriterionConfig::new(kind, schedule);
                self.slots[idx] = Some(Slot::new(cfg, &self.graph, self.distances.as_deref(), self.opt.seed)?);
            }
        }
        self.refresh_quality_params();
        Ok(())
    }

    /// Replace the base learning rate by a constant and undo annealing.
    pub fn set_lr(&mut self, lr: f64) -> Result<()> {
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::Config(format!("learning rate {lr} must be positive")));
        }
        self.lr = Schedule::constant(lr)?;
        self.opt.lr = Some(self.lr.clone());
        self.restart_annealing();
        Ok(())
    }

    /// Undo learning-rate decay and clear a finished state so the run
    /// continues; used when the objective changes mid-run. A run that hit
    /// `max_iter` stays finished.
    pub fn restart_annealing(&mut self) {
        self.patience.restart();
        if self.stopped != Some(StopReason::MaxIterations) {
            self.stopped = None;
        }
    }

    /// Fix a node at `at` until unpinned.
    pub fn pin(&mut self, node: usize, at: Point) -> Result<()> {
        self.check_node(node)?;
        if !at.is_finite() {
            return Err(Error::NonFinite(format!("pin position of node {node}")));
        }
        self.layout[node] = at;
        self.pinned.insert(node, at);
        Ok(())
    }

    pub fn unpin(&mut self, node: usize) -> Result<()> {
        self.check_node(node)?;
        self.pinned.remove(&node);
        Ok(())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.graph.n() {
            return Err(Error::Invalid(format!(
                "node {node} does not exist (the graph has {} nodes)",
                self.graph.n()
            )));
        }
        Ok(())
    }

    /// Restart from a fresh random layout for `seed`; pins stay in place.
    pub fn reset(&mut self, seed: u64) -> Result<()> {
        let configs: Vec<CriterionConfig> = self.criteria().into_iter().cloned().collect();
        let mut opt = self.opt.clone();
        opt.seed = seed;
        let mut fresh = Engine::new(
            Arc::clone(&self.graph),
            &configs,
            opt,
            initial_layout(self.graph.n(), seed),
        )?;
        for (&node, &at) in &self.pinned {
            fresh.pin(node, at)?;
        }
        fresh.recording = self.recording;
        *self = fresh;
        Ok(())
    }

    /// All nine measures on the current layout.
    pub fn quality(&self) -> Result<QualityReport> {
        match self.distances.as_deref() {
            Some(Distances::Eager(d)) => quality::evaluate_with(&self.graph, &self.layout, d, &self.quality_params),
            Some(Distances::Lazy { .. }) => Err(Error::Invalid("graph too large for exact stress quality".into())),
            None => Err(Error::Disconnected {
                components: self.graph.component_count(),
            }),
        }
    }

    fn guard_quality(&self, kind: Kind, layout: &Layout) -> f64 {
        let g = &self.graph;
        let q = &self.quality_params;
        let value = match kind {
            Kind::Stress => match self.distances.as_deref() {
                Some(Distances::Eager(d)) => criteria::stress_quality(layout, d),
                _ => f64::INFINITY,
            },
            Kind::IdealEdgeLength => criteria::ideal_edge_length_quality(layout, g, q.ideal_length),
            Kind::NeighborhoodPreservation => criteria::neighborhood_quality(layout, g),
            Kind::Crossings => all_crossings(layout, g).len() as f64,
            Kind::CrossingAngle => criteria::crossing_angle_quality(layout, g),
            Kind::AspectRatio => criteria::aspect_ratio_quality(layout, q.rotations),
            Kind::AngularResolution => criteria::angular_resolution_quality(layout, g),
            Kind::VertexResolution => criteria::vertex_resolution_quality(
                layout,
                q.resolution.unwrap_or_else(|| criteria::default_resolution(g.n())),
            ),
            Kind::Gabriel => criteria::gabriel_quality(layout, g),
        };
        if quality::is_inverted(kind) {
            1.0 - value
        } else {
            value
        }
    }

    /// One iteration. Returns the stop reason once the run is over.
    pub fn step(&mut self) -> Result<Option<StopReason>> {
        if self.stopped.is_some() {
            return Ok(self.stopped);
        }
        let t = self.iteration + 1;
        let n = self.graph.n();
        let mut grad = vec![Point::ZERO; n];
        let mut losses = [None; 9];
        let mut weights = [0.0; 9];
        let mut total = 0.0;
        let mut crossings = None;
        for k in Kind::ALL {
            let Some(slot) = self.slots[k.index()].as_mut() else {
                continue;
            };
            let w = slot.config.weight.at(t);
            weights[k.index()] = w;
            if w <= 0.0 {
                continue;
            }
            let mut env = Env {
                graph: &self.graph,
                distances: self.distances.as_deref(),
                layout: &self.layout,
                rng: &mut self.rng,
                predictor: &mut self.predictor,
                predictor_config: &self.opt.predictor,
                predictor_seed: derive_seed(self.opt.seed, 2),
                crossings: &mut crossings,
            };
            let lv = sample_loss(slot, &mut env)?;
            if !lv.is_finite() {
                return Err(Error::Diverged {
                    criterion: k.code().to_string(),
                    iteration: t,
                });
            }
            lv.accumulate(w, &mut grad);
            losses[k.index()] = Some(lv.value);
            total += w * lv.value;
        }
        for &node in self.pinned.keys() {
            grad[node] = Point::ZERO;
        }

        let lr = self.lr.at(t) * self.patience.scale();
        let prev = self.opt.safe_update.map(|_| self.layout.clone());
        self.apply_method(&grad, lr);
        for (&node, &at) in &self.pinned {
            self.layout[node] = at;
        }
        if !self.layout.is_finite() {
            let culprit = Kind::ALL
                .into_iter()
                .find(|k| losses[k.index()].is_some())
                .map_or("step", |k| k.code());
            return Err(Error::Diverged {
                criterion: culprit.to_string(),
                iteration: t,
            });
        }
        if let (Some(guard), Some(prev)) = (self.opt.safe_update, prev) {
            let next = std::mem::take(&mut self.layout);
            let result = match guard {
                Guard::Crossings => safe_update_crossings(&prev, &next, &self.graph),
                Guard::Measure(kind) => safe_update(&prev, &next, |l| self.guard_quality(kind, l)),
            };
            self.layout = result.layout;
        }

        let ema = self.ema.update(total);
        self.last_ema = Some(ema);
        let action = self.patience.observe(ema);
        self.iteration = t;
        if self.recording {
            self.trace.records.push(IterationRecord {
                iteration: t,
                lr,
                loss: total,
                ema,
                losses,
                weights,
                elapsed: self.started.elapsed().as_secs_f64(),
            });
            if self.opt.quality_every > 0 && t % self.opt.quality_every == 0 {
                if let Ok(report) = self.quality() {
                    self.trace.snapshots.push(Snapshot { iteration: t, report });
                }
            }
        }
        if action == Action::Stop {
            self.stopped = Some(StopReason::LearningRateFloor);
        } else if t >= self.opt.max_iter {
            self.stopped = Some(StopReason::MaxIterations);
        }
        if let Some(reason) = self.stopped {
            self.trace.stop = Some(reason);
        }
        Ok(self.stopped)
    }

    fn apply_method(&mut self, grad: &[Point], lr: f64) {
        let n = grad.len();
        let o = &self.opt;
        let s = &mut self.state;
        let points = self.layout.points_mut();
        match o.method {
            Method::Sgd => {
                for (p, g) in points.iter_mut().zip(grad) {
                    *p -= *g * lr;
                }
            }
            Method::Momentum => {
                s.velocity.resize(n, Point::ZERO);
                for ((p, g), v) in points.iter_mut().zip(grad).zip(&mut s.velocity) {
                    *v = *v * o.momentum + *g;
                    *p -= *v * lr;
                }
            }
            Method::Adam => {
                s.first.resize(n, Point::ZERO);
                s.second.resize(n, Point::ZERO);
                s.steps += 1;
                let b1 = 1.0 - o.beta1.powi(s.steps);
                let b2 = 1.0 - o.beta2.powi(s.steps);
                for (k, (p, g)) in points.iter_mut().zip(grad).enumerate() {
                    let m = s.first[k] * o.beta1 + *g * (1.0 - o.beta1);
                    let v = s.second[k] * o.beta2 + Point::new(g.x * g.x, g.y * g.y) * (1.0 - o.beta2);
                    s.first[k] = m;
                    s.second[k] = v;
                    p.x -= lr * (m.x / b1) / ((v.x / b2).sqrt() + o.eps);
                    p.y -= lr * (m.y / b1) / ((v.y / b2).sqrt() + o.eps);
                }
            }
            Method::RmsProp => {
                s.second.resize(n, Point::ZERO);
                for (k, (p, g)) in points.iter_mut().zip(grad).enumerate() {
                    let v = s.second[k] * o.rms_decay + Point::new(g.x * g.x, g.y * g.y) * (1.0 - o.rms_decay);
                    s.second[k] = v;
                    p.x -= lr * g.x / (v.x.sqrt() + o.eps);
                    p.y -= lr * g.y / (v.y.sqrt() + o.eps);
                }
            }
        }
    }

    /// Iterate until the stopping rule fires.
    pub fn run(&mut self) -> Result<StopReason> {
        loop {
            if let Some(reason) = self.step()? {
                return Ok(reason);
            }
        }
    }

    pub fn into_parts(self) -> (Layout, RunTrace) {
        (self.layout, self.trace)
    }
}

/// Run the loop from `init` to completion.
pub fn run_layout(
    g: &Graph,
    configs: &[CriterionConfig],
    opt: &OptimizerConfig,
    init: Layout,
) -> Result<(Layout, RunTrace)> {
    let mut engine = Engine::new(Arc::new(g.clone()), configs, opt.clone(), init)?;
    engine.run()?;
    Ok(engine.into_parts())
}
