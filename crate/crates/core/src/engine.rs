//! Fixed-timestep simulation loop: contacts, graph update, source frames,
//! propagation per modality, mixing and output buffering.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{ContactDetector, ContactError, ContactEvent, ContactKind, EventTimeline};
use crate::document::EngineDoc;
use crate::geometry::Vec3;
use crate::graph::{ContactKey, GraphError, HapticGraph, NodeId, NodeKind};
use crate::mixing::{Contribution, MixError, MixerConfig, MixerKind};
use crate::propagation::{
    apply_path, gain_fct2, propagate_bfs, shortest_paths, HookRegistry, ModulationFn, PathResult,
    PropagationConfig, PropagationError, PropagationNetwork, Strategy,
};
use crate::real::Real;
use crate::scene::{ObjectIndex, Scene, SceneError, SourceKind};
use crate::signal::{HapticSignal, SignalError};
use crate::template::TemplateError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error("graph update failed at tick {tick}: {source}")]
    Graph { tick: u64, source: GraphError },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("unknown template '{0}'")]
    UnknownTemplate(String),
    #[error("energy {energy} J does not exceed the spawn threshold {threshold} J")]
    BelowThreshold { energy: f64, threshold: f64 },
    #[error("graph invariants violated after tick {tick}: {details}")]
    Invariant { tick: u64, details: String },
    #[error("a propagation worker panicked")]
    Worker,
    #[error("the run was aborted by an earlier error")]
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// Full graph propagation.
    Ht,
    /// Nearest listener only, distance attenuated.
    Sd,
    /// Every listener, distance attenuated, topology ignored.
    Md,
    /// Every listener, no attenuation.
    Mn,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::Ht, Modality::Sd, Modality::Md, Modality::Mn];

    pub fn name(self) -> &'static str {
        match self {
            Modality::Ht => "ht",
            Modality::Sd => "sd",
            Modality::Md => "md",
            Modality::Mn => "mn",
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Modality {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ht" => Ok(Modality::Ht),
            "sd" => Ok(Modality::Sd),
            "md" => Ok(Modality::Md),
            "mn" => Ok(Modality::Mn),
            other => Err(format!("unknown modality '{other}' (expected ht, sd, md or mn)")),
        }
    }
}

pub const DEFAULT_TICK_RATE: u32 = 100;
pub const DEFAULT_E_MAX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig<T> {
    pub tick_rate: u32,
    pub sample_rate: u32,
    pub modality: Modality,
    pub propagation: PropagationConfig<T>,
    pub mixer: MixerConfig<T>,
    /// Energy (J) at which a temporary source reaches full template amplitude.
    pub e_max: T,
    /// Impulses must carry strictly more energy (J) than this to spawn.
    pub spawn_threshold: T,
    /// Attenuation coefficient of the SD and MD modalities.
    pub distance_alpha: T,
    pub seed: u64,
    /// Propagation threads per tick; results never depend on it.
    pub workers: usize,
    pub check_invariants: bool,
    /// Keep a [`TickTrace`] of the latest tick.
    pub trace: bool,
}

impl<T: Real> Default for EngineConfig<T> {
    fn default() -> Self {
        Self {
            tick_rate: DEFAULT_TICK_RATE,
            sample_rate: crate::signal::DEFAULT_SAMPLE_RATE,
            modality: Modality::Ht,
            propagation: PropagationConfig::default(),
            mixer: MixerConfig::default(),
            e_max: T::lit(DEFAULT_E_MAX),
            spawn_threshold: T::lit(crate::contact::DEFAULT_SPAWN_THRESHOLD),
            distance_alpha: T::lit(crate::propagation::DEFAULT_DISTANCE_ALPHA),
            seed: 0,
            workers: 1,
            check_invariants: cfg!(debug_assertions),
            trace: false,
        }
    }
}

fn config_err(msg: impl Into<String>) -> EngineError {
    EngineError::Config(msg.into())
}

impl<T: Real> EngineConfig<T> {
    pub fn frame_len(&self) -> usize {
        (self.sample_rate / self.tick_rate.max(1)) as usize
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.tick_rate == 0 || self.sample_rate == 0 {
            return Err(config_err("tick_rate and sample_rate must be > 0"));
        }
        if !self.sample_rate.is_multiple_of(self.tick_rate) {
            return Err(config_err(format!(
                "sample_rate {} is not divisible by tick_rate {}",
                self.sample_rate, self.tick_rate
            )));
        }
        if !self.e_max.is_finite() || self.e_max <= T::zero() {
            return Err(config_err(format!("e_max {} must be > 0", self.e_max)));
        }
        if !self.spawn_threshold.is_finite() || self.spawn_threshold < T::zero() {
            return Err(config_err(format!("spawn_threshold {} must be >= 0", self.spawn_threshold)));
        }
        if !self.distance_alpha.is_finite() || self.distance_alpha < T::zero() {
            return Err(config_err(format!("distance_alpha {} must be >= 0", self.distance_alpha)));
        }
        if self.workers == 0 {
            return Err(config_err("workers must be >= 1"));
        }
        self.propagation.validate()?;
        self.mixer.validate()?;
        Ok(())
    }

    pub fn from_doc(doc: &EngineDoc) -> Result<Self, EngineError> {
        let modality = doc.modality.parse().map_err(config_err)?;
        let strategy = doc.propagation.strategy.parse().map_err(config_err)?;
        let kind = match doc.mixer.kind.to_ascii_lowercase().as_str() {
            "cumulative" => MixerKind::Cumulative,
            "weighted" => MixerKind::Weighted {
                weights: doc.mixer.weights.iter().map(|(k, v)| (k.clone(), T::lit(*v))).collect(),
            },
            "decay" => MixerKind::Decay {
                half_life: T::lit(doc.mixer.half_life),
            },
            "clip" => MixerKind::Clip,
            other => {
                return Err(config_err(format!(
                    "unknown mixer '{other}' (expected cumulative, weighted, decay or clip)"
                )))
            }
        };
        let cfg = Self {
            tick_rate: doc.tick_rate,
            sample_rate: doc.sample_rate,
            modality,
            propagation: PropagationConfig {
                strategy,
                max_hops: doc.propagation.max_hops,
                gain_floor: T::lit(doc.propagation.gain_floor),
                intra_fn: ModulationFn::from_doc(&doc.propagation.intra)?,
                inter_fn: ModulationFn::from_doc(&doc.propagation.inter)?,
            },
            mixer: MixerConfig {
                kind,
                s_max: T::lit(doc.mixer.s_max),
            },
            e_max: T::lit(doc.e_max),
            spawn_threshold: T::lit(doc.spawn_threshold),
            distance_alpha: T::lit(doc.distance_alpha),
            seed: doc.seed,
            workers: doc.workers,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A source currently emitting into the graph.
#[derive(Debug, Clone)]
pub struct ActiveSource<T> {
    /// Source id from the scene (the rule id for temporary sources).
    pub id: String,
    pub node: NodeId,
    pub object: ObjectIndex,
    pub signal: HapticSignal<T>,
    pub cursor: usize,
    pub persistent: bool,
    pub looping: bool,
    pub started_tick: u64,
}

impl<T: Real> ActiveSource<T> {
    pub fn is_expired(&self) -> bool {
        !self.persistent && self.cursor >= self.signal.len()
    }
}

/// `template × min(energy / e_max, 1)`.
pub fn temporary_signal<T: Real>(template: &HapticSignal<T>, energy: T, e_max: T) -> HapticSignal<T> {
    let ratio = (energy / e_max).min(T::one()).max(T::zero());
    if ratio == T::one() {
        template.clone()
    } else {
        template.scaled_unchecked(ratio)
    }
}

/// SD routing: the nearest listener (lowest index on ties) with gain
/// `e^{-α d}`.
pub fn route_sd<T: Real>(source: Vec3<T>, listeners: &[Vec3<T>], alpha: T) -> Vec<(usize, T, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, &l) in listeners.iter().enumerate() {
        let d = source.distance(l);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, d)| vec![(i, gain_fct2(d, alpha).unwrap_or(T::zero()), d)])
        .unwrap_or_default()
}

/// MD routing: every listener with gain `e^{-α d}`.
pub fn route_md<T: Real>(source: Vec3<T>, listeners: &[Vec3<T>], alpha: T) -> Vec<(usize, T, T)> {
    listeners
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let d = source.distance(l);
            (i, gain_fct2(d, alpha).unwrap_or(T::zero()), d)
        })
        .collect()
}

/// MN routing: every listener with gain 1.
pub fn route_mn<T: Real>(source: Vec3<T>, listeners: &[Vec3<T>]) -> Vec<(usize, T, T)> {
    listeners
        .iter()
        .enumerate()
        .map(|(i, &l)| (i, T::one(), source.distance(l)))
        .collect()
}

/// HT routing: paths from `source` over the graph snapshot. Dijkstra
/// keeps one path per listener, BFS every path.
pub fn route_ht<T: Real>(
    net: &PropagationNetwork<T>,
    source: NodeId,
    listener_index: &HashMap<NodeId, usize>,
    config: &PropagationConfig<T>,
) -> Result<Vec<(usize, PathResult<T>)>, PropagationError> {
    let mut out = Vec::new();
    match config.strategy {
        Strategy::Dijkstra => {
            for (node, path) in shortest_paths(net, source, config)? {
                if let Some(&i) = listener_index.get(&node) {
                    out.push((i, path));
                }
            }
        }
        Strategy::Bfs => {
            for (node, paths) in propagate_bfs(net, source, config)? {
                if let Some(&i) = listener_index.get(&node) {
                    out.extend(paths.into_iter().map(|p| (i, p)));
                }
            }
        }
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(out)
}

/// Source frame as seen during one tick.
#[derive(Debug, Clone)]
pub struct SourceFrame<T> {
    pub id: String,
    pub node: NodeId,
    pub position: Vec3<T>,
    pub frame: HapticSignal<T>,
}

/// One pre-mix frame delivered to a listener.
#[derive(Debug, Clone)]
pub struct RoutedFrame<T> {
    pub listener: usize,
    /// Index into [`TickTrace::sources`].
    pub source: usize,
    pub gain: T,
    /// Euclidean source-listener distance.
    pub distance: T,
    pub signal: HapticSignal<T>,
}

/// Everything routed during one tick, for inspection.
#[derive(Debug, Clone)]
pub struct TickTrace<T> {
    pub tick: u64,
    pub sources: Vec<SourceFrame<T>>,
    pub frames: Vec<RoutedFrame<T>>,
    pub listener_nodes: Vec<NodeId>,
    /// Graph component of every node at routing time.
    pub components: BTreeMap<NodeId, usize>,
    pub mixed: Vec<HapticSignal<T>>,
}

/// Full-run buffers, one per listener in scene order.
#[derive(Debug, Clone, PartialEq)]
pub struct ListenerOutput<T> {
    pub sample_rate: u32,
    pub listeners: Vec<(String, HapticSignal<T>)>,
}

impl<T: Real> ListenerOutput<T> {
    pub fn get(&self, id: &str) -> Option<&HapticSignal<T>> {
        self.listeners.iter().find(|(l, _)| l == id).map(|(_, s)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListenerStats {
    pub id: String,
    pub body_part: String,
    pub rms: f64,
    pub peak: f64,
    pub active_samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    pub fn from_seconds(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut ms: Vec<f64> = samples.iter().map(|s| s * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let pct = |p: f64| {
            let rank = ((p / 100.0) * ms.len() as f64).ceil() as usize;
            ms[rank.clamp(1, ms.len()) - 1]
        };
        Self {
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            p50_ms: pct(50.0),
            p90_ms: pct(90.0),
            p99_ms: pct(99.0),
            max_ms: ms[ms.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub modality: Modality,
    pub tick_rate: u32,
    pub sample_rate: u32,
    pub ticks: u64,
    pub listeners: Vec<ListenerStats>,
    /// Listeners with a non-silent mixed frame, per tick.
    pub active_listeners_per_tick: Vec<usize>,
    pub timing: TimingStats,
}

struct ListenerSlot {
    spec: usize,
    node: NodeId,
}

pub struct Engine<T: Real> {
    scene: Scene<T>,
    config: EngineConfig<T>,
    hooks: HookRegistry<T>,
    graph: HapticGraph<T>,
    detector: ContactDetector<T>,
    timeline: Vec<(u64, ContactEvent<T>)>,
    next_event: usize,
    listeners: Vec<ListenerSlot>,
    listener_index: HashMap<NodeId, usize>,
    sources: Vec<ActiveSource<T>>,
    outputs: Vec<Vec<T>>,
    tick: u64,
    failed: bool,
    tick_seconds: Vec<f64>,
    active_per_tick: Vec<usize>,
    trace: Option<TickTrace<T>>,
}

fn tick_of<T: Real>(time: T, tick_rate: u32) -> u64 {
    let t = time.as_f64() * f64::from(tick_rate);
    // Absorb representation error such as 0.29 * 100 = 28.999999999999996.
    (t + 1e-9).floor().max(0.0) as u64
}

impl<T: Real> Engine<T> {
    pub fn new(
        mut scene: Scene<T>,
        timeline: EventTimeline<T>,
        config: EngineConfig<T>,
        hooks: HookRegistry<T>,
    ) -> Result<Self, EngineError> {
        config.validate()?;
        scene.templates = scene.templates.resampled(config.sample_rate)?;
        for e in timeline.events() {
            scene.require_object(&e.object_a)?;
            scene.require_object(&e.object_b)?;
        }
        let timeline = timeline
            .events()
            .iter()
            .map(|e| (tick_of(e.time, config.tick_rate), e.clone()))
            .collect();

        let mut graph = HapticGraph::new(scene.poses_at(T::zero()));
        let graph_err = |source| EngineError::Graph { tick: 0, source };
        let mut listeners = Vec::new();
        let mut listener_index = HashMap::new();
        for (i, l) in scene.listeners.iter().enumerate() {
            let object = scene.require_object(&l.object)?;
            let pos = scene.world_position(&l.object, l.local_position)?;
            let node = graph.attach_endpoint_node(NodeKind::Listener, object, pos).map_err(graph_err)?;
            listener_index.insert(node, i);
            listeners.push(ListenerSlot { spec: i, node });
        }
        let mut sources = Vec::new();
        for s in &scene.sources {
            let SourceKind::Persistent { looping } = s.kind else {
                continue;
            };
            let object = scene.require_object(&s.object)?;
            let template = scene
                .templates
                .get(&s.template)
                .ok_or_else(|| EngineError::UnknownTemplate(s.template.clone()))?;
            let pos = scene.world_position(&s.object, s.local_position)?;
            let node = graph.attach_endpoint_node(NodeKind::Source, object, pos).map_err(graph_err)?;
            sources.push(ActiveSource {
                id: s.id.clone(),
                node,
                object,
                signal: template.signal.clone(),
                cursor: 0,
                persistent: true,
                looping,
                started_tick: 0,
            });
        }
        let outputs = (0..listeners.len()).map(|_| Vec::new()).collect();
        Ok(Self {
            scene,
            config,
            hooks,
            graph,
            detector: ContactDetector::new(),
            timeline,
            next_event: 0,
            listeners,
            listener_index,
            sources,
            outputs,
            tick: 0,
            failed: false,
            tick_seconds: Vec::new(),
            active_per_tick: Vec::new(),
            trace: None,
        })
    }

    pub fn scene(&self) -> &Scene<T> {
        &self.scene
    }

    pub fn config(&self) -> &EngineConfig<T> {
        &self.config
    }

    pub fn graph(&self) -> &HapticGraph<T> {
        &self.graph
    }

    pub fn sources(&self) -> &[ActiveSource<T>] {
        &self.sources
    }

    pub fn listener_nodes(&self) -> Vec<NodeId> {
        self.listeners.iter().map(|l| l.node).collect()
    }

    pub fn tick_index(&self) -> u64 {
        self.tick
    }

    pub fn last_trace(&self) -> Option<&TickTrace<T>> {
        self.trace.as_ref()
    }

    pub fn tick_seconds(&self) -> &[f64] {
        &self.tick_seconds
    }

    /// Attaches a temporary source on `object` at world `point` emitting
    /// `template × min(energy / e_max, 1)`.
    pub fn spawn_temporary_source(
        &mut self,
        id: &str,
        template: &str,
        energy: T,
        point: Vec3<T>,
        object: ObjectIndex,
    ) -> Result<&ActiveSource<T>, EngineError> {
        if !(energy > self.config.spawn_threshold) {
            return Err(EngineError::BelowThreshold {
                energy: energy.as_f64(),
                threshold: self.config.spawn_threshold.as_f64(),
            });
        }
        let t = self
            .scene
            .templates
            .get(template)
            .ok_or_else(|| EngineError::UnknownTemplate(template.to_string()))?;
        let signal = temporary_signal(&t.signal, energy, self.config.e_max);
        let node = self
            .graph
            .attach_endpoint_node(NodeKind::Source, object, point)
            .map_err(|source| EngineError::Graph { tick: self.tick, source })?;
        self.sources.push(ActiveSource {
            id: id.to_string(),
            node,
            object,
            signal,
            cursor: 0,
            persistent: false,
            looping: false,
            started_tick: self.tick,
        });
        Ok(self.sources.last().unwrap())
    }

    /// Advances one tick. On error the engine refuses further ticks.
    pub fn tick(&mut self) -> Result<(), EngineError> {
        if self.failed {
            return Err(EngineError::Aborted);
        }
        let started = Instant::now();
        let result = self.step();
        self.tick_seconds.push(started.elapsed().as_secs_f64());
        if result.is_err() {
            self.failed = true;
        }
        result
    }

    fn graph_err(&self) -> impl Fn(GraphError) -> EngineError {
        let tick = self.tick;
        move |source| EngineError::Graph { tick, source }
    }

    fn step(&mut self) -> Result<(), EngineError> {
        let rate = T::lit(f64::from(self.config.tick_rate));
        let dt = T::one() / rate;
        let time = T::lit(self.tick as f64) / rate;

        // (1) Kinematics and contact events.
        let poses = self.scene.poses_at(time);
        for (i, (o, p)) in self.scene.objects.iter().zip(&poses).enumerate() {
            if !o.motion.is_static() {
                self.graph.set_object_pose(ObjectIndex(i as u32), *p).map_err(self.graph_err())?;
            }
        }
        let detection = self.detector.detect_contacts(&self.scene, &poses, time, dt)?;
        let mut events = detection.events;
        while self.next_event < self.timeline.len() && self.timeline[self.next_event].0 <= self.tick {
            events.push(self.timeline[self.next_event].1.clone());
            self.next_event += 1;
        }

        // (2) Graph update and temporary sources.
        for (a, b, point) in detection.persisting {
            let key = ContactKey::new(a, b, crate::contact::DETECTED_CONTACT_INDEX);
            self.graph.move_contact(key, point).map_err(self.graph_err())?;
        }
        for e in &events {
            self.apply_event(e)?;
        }

        // (3) Source frames and routing.
        let frame_len = self.config.frame_len();
        let frames: Vec<SourceFrame<T>> = self
            .sources
            .iter()
            .map(|s| SourceFrame {
                id: s.id.clone(),
                node: s.node,
                position: self.graph.node(s.node).map(|n| n.position).unwrap_or_else(Vec3::zero),
                frame: if s.looping {
                    s.signal.frame_looped(s.cursor, frame_len)
                } else {
                    s.signal.frame(s.cursor, frame_len)
                },
            })
            .collect();
        let routed = self.route(&frames)?;

        // (4) Mixing and output.
        let mut per_listener: Vec<Vec<Contribution<T>>> = (0..self.listeners.len()).map(|_| Vec::new()).collect();
        for r in &routed {
            let s = &self.sources[r.source];
            per_listener[r.listener].push(Contribution {
                source: s.id.clone(),
                persistent: s.persistent,
                age: T::lit((self.tick - s.started_tick) as f64) / rate,
                signal: r.signal.clone(),
            });
        }
        let mut mixed = Vec::with_capacity(self.listeners.len());
        for contributions in &per_listener {
            mixed.push(self.config.mixer.mix(self.config.sample_rate, frame_len, contributions)?);
        }
        let mut active = 0;
        for (out, m) in self.outputs.iter_mut().zip(&mixed) {
            if !m.is_silent() {
                active += 1;
            }
            out.extend_from_slice(&m.samples()[..frame_len]);
        }
        self.active_per_tick.push(active);

        if self.config.trace {
            self.trace = Some(TickTrace {
                tick: self.tick,
                sources: frames,
                frames: routed,
                listener_nodes: self.listener_nodes(),
                components: self.graph.component_labels(),
                mixed,
            });
        }

        // Cursors advance whether or not anything was heard.
        for s in &mut self.sources {
            s.cursor += frame_len;
        }
        let mut kept = Vec::with_capacity(self.sources.len());
        for s in std::mem::take(&mut self.sources) {
            if s.is_expired() {
                self.graph.remove_endpoint_node(s.node).map_err(self.graph_err())?;
            } else {
                kept.push(s);
            }
        }
        self.sources = kept;

        if self.config.check_invariants {
            let violations = self.graph.check_invariants();
            if !violations.is_empty() {
                return Err(EngineError::Invariant {
                    tick: self.tick,
                    details: format!("{violations:?}"),
                });
            }
        }
        self.tick += 1;
        Ok(())
    }

    fn apply_event(&mut self, e: &ContactEvent<T>) -> Result<(), EngineError> {
        let a = self.scene.require_object(&e.object_a)?;
        let b = self.scene.require_object(&e.object_b)?;
        match e.kind {
            ContactKind::Begin => {
                let point = e.point.unwrap_or_else(|| self.graph.pose(a).map(|p| p.position).unwrap_or_else(Vec3::zero));
                self.graph.add_contact_pair(a, b, e.index, point).map_err(self.graph_err())?;
            }
            ContactKind::End => {
                self.graph
                    .remove_contact_pair(ContactKey::new(a, b, e.index))
                    .map_err(self.graph_err())?;
            }
            ContactKind::Impulse { .. } => {
                let Some(energy) = e.energy() else {
                    return Ok(());
                };
                if !(energy > self.config.spawn_threshold) {
                    return Ok(());
                }
                let rule = self.scene.sources.iter().find(|s| {
                    s.kind == SourceKind::TemporaryRule && (s.object == e.object_a || s.object == e.object_b)
                });
                if let Some(rule) = rule {
                    let (id, template) = (rule.id.clone(), rule.template.clone());
                    let object = self.scene.require_object(&rule.object)?;
                    let point = e.point.unwrap_or_else(|| self.graph.pose(object).map(|p| p.position).unwrap_or_else(Vec3::zero));
                    self.spawn_temporary_source(&id, &template, energy, point, object)?;
                }
            }
        }
        Ok(())
    }

    fn route(&self, frames: &[SourceFrame<T>]) -> Result<Vec<RoutedFrame<T>>, EngineError> {
        let listener_pos: Vec<Vec3<T>> = self
            .listeners
            .iter()
            .map(|l| self.graph.node(l.node).map(|n| n.position).unwrap_or_else(Vec3::zero))
            .collect();
        let alpha = self.config.distance_alpha;
        let net = match self.config.modality {
            Modality::Ht if !frames.is_empty() => Some(PropagationNetwork::from_graph(
                &self.graph,
                &self.config.propagation,
                |o| self.scene.material_of(o),
                |o| self.scene.object(o).modulation.as_ref(),
                &self.hooks,
            )?),
            _ => None,
        };
        let route_one = |si: usize| -> Result<Vec<RoutedFrame<T>>, EngineError> {
            let f = &frames[si];
            let deliver = |listener: usize, gain: T, distance: T, signal: HapticSignal<T>| RoutedFrame {
                listener,
                source: si,
                gain,
                distance,
                signal,
            };
            let scaled = |g: T| {
                if g == T::one() {
                    f.frame.clone()
                } else {
                    f.frame.scaled_unchecked(g)
                }
            };
            Ok(match self.config.modality {
                Modality::Ht => {
                    let net = net.as_ref().expect("network built for HT");
                    route_ht(net, f.node, &self.listener_index, &self.config.propagation)?
                        .into_iter()
                        .map(|(l, path)| {
                            let d = f.position.distance(listener_pos[l]);
                            deliver(l, path.gain, d, apply_path(&f.frame, &path))
                        })
                        .collect()
                }
                Modality::Sd => route_sd(f.position, &listener_pos, alpha)
                    .into_iter()
                    .map(|(l, g, d)| deliver(l, g, d, scaled(g)))
                    .collect(),
                Modality::Md => route_md(f.position, &listener_pos, alpha)
                    .into_iter()
                    .map(|(l, g, d)| deliver(l, g, d, scaled(g)))
                    .collect(),
                Modality::Mn => route_mn(f.position, &listener_pos)
                    .into_iter()
                    .map(|(l, g, d)| deliver(l, g, d, scaled(g)))
                    .collect(),
            })
        };

        let workers = self.config.workers.min(frames.len()).max(1);
        let per_source: Vec<Result<Vec<RoutedFrame<T>>, EngineError>> = if workers == 1 {
            (0..frames.len()).map(route_one).collect()
        } else {
            let chunk = frames.len().div_ceil(workers);
            let route_one = &route_one;
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..workers)
                    .map(|w| {
                        scope.spawn(move || {
                            (w * chunk..((w + 1) * chunk).min(frames.len()))
                                .map(route_one)
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                let mut all = Vec::with_capacity(frames.len());
                for h in handles {
                    match h.join() {
                        Ok(part) => all.extend(part),
                        Err(_) => all.push(Err(EngineError::Worker)),
                    }
                }
                all
            })
        };
        let mut routed = Vec::new();
        for r in per_source {
            routed.extend(r?);
        }
        Ok(routed)
    }

    /// Runs `ticks` ticks.
    pub fn run_ticks(&mut self, ticks: u64) -> Result<(), EngineError> {
        for _ in 0..ticks {
            self.tick()?;
        }
        Ok(())
    }

    /// Runs for `duration` seconds (rounded to whole ticks).
    pub fn run(&mut self, duration: T) -> Result<(), EngineError> {
        let ticks = ticks_for(duration, self.config.tick_rate)?;
        self.run_ticks(ticks)
    }

    pub fn output(&self) -> ListenerOutput<T> {
        ListenerOutput {
            sample_rate: self.config.sample_rate,
            listeners: self
                .listeners
                .iter()
                .zip(&self.outputs)
                .map(|(l, buf)| {
                    (
                        self.scene.listeners[l.spec].id.clone(),
                        HapticSignal::from_finite(buf.clone(), self.config.sample_rate),
                    )
                })
                .collect(),
        }
    }

    pub fn stats(&self) -> RunStats {
        let listeners = self
            .listeners
            .iter()
            .zip(&self.outputs)
            .map(|(l, buf)| {
                let spec = &self.scene.listeners[l.spec];
                let s = HapticSignal::from_finite(buf.clone(), self.config.sample_rate);
                ListenerStats {
                    id: spec.id.clone(),
                    body_part: spec.body_part.clone(),
                    rms: s.rms().as_f64(),
                    peak: s.peak().as_f64(),
                    active_samples: buf.iter().filter(|x| **x != T::zero()).count(),
                }
            })
            .collect();
        RunStats {
            modality: self.config.modality,
            tick_rate: self.config.tick_rate,
            sample_rate: self.config.sample_rate,
            ticks: self.tick,
            listeners,
            active_listeners_per_tick: self.active_per_tick.clone(),
            timing: TimingStats::from_seconds(&self.tick_seconds),
        }
    }
}

pub fn ticks_for<T: Real>(duration: T, tick_rate: u32) -> Result<u64, EngineError> {
    if !duration.is_finite() || duration <= T::zero() {
        return Err(config_err(format!("duration {duration} must be > 0")));
    }
    Ok((duration.as_f64() * f64::from(tick_rate)).round().max(1.0) as u64)
}
