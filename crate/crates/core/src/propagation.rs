//! Modulation functions and path search over the haptic graph.
//!
//! Propagation runs on a [`PropagationNetwork`]: an immutable CSR snapshot
//! of the graph with every edge's modulation already evaluated. Two
//! strategies are provided:
//!
//! * [`propagate_bfs`] enumerates every loop-free path from a source,
//!   breadth-first, cutting branches below the gain floor or at the hop cap.
//! * [`shortest_paths`] keeps only the maximum-gain path per listener, found
//!   with a hop-bounded Dijkstra over edge costs `-ln(gain)`.
//!
//! Listener nodes capture signal: a path may end at a listener but never
//! pass through one.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::document::ModulationDoc;
use crate::graph::{ConnectionKind, HapticConnection, HapticGraph, NodeId, NodeKind};
use crate::real::Real;
use crate::scene::{HapticMaterial, ObjectIndex};
use crate::signal::HapticSignal;

/// Default minimal exponent in the material function.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Default distance attenuation coefficient (1/m) of the distance function.
pub const DEFAULT_DISTANCE_ALPHA: f64 = 0.2;
pub const DEFAULT_MAX_HOPS: usize = 16;
pub const DEFAULT_GAIN_FLOOR: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown modulation hook '{0}'")]
    UnknownHook(String),
    #[error("hook '{0}' is not a pure gain and cannot be used with the Dijkstra strategy")]
    IncompatibleStrategy(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

fn arg(msg: String) -> PropagationError {
    PropagationError::InvalidArgument(msg)
}

/// `e^{-max((1-κ)ρ, ε) d} (1-κ) ρ`: material-aware intra-object gain.
pub fn gain_fct1<T: Real>(distance: T, kappa: T, rho: T, epsilon: T) -> Result<T, PropagationError> {
    if !distance.is_finite() || distance < T::zero() {
        return Err(arg(format!("distance {distance} must be finite and >= 0")));
    }
    if !(kappa >= T::zero() && kappa <= T::one()) {
        return Err(arg(format!("kappa {kappa} must lie in [0, 1]")));
    }
    if !rho.is_finite() || rho <= T::zero() {
        return Err(arg(format!("rho {rho} must be finite and > 0")));
    }
    if !epsilon.is_finite() || epsilon <= T::zero() {
        return Err(arg(format!("epsilon {epsilon} must be finite and > 0")));
    }
    let loss = (T::one() - kappa) * rho;
    Ok((-(loss.max(epsilon)) * distance).exp() * loss)
}

/// `e^{-α d}`: distance-only gain.
pub fn gain_fct2<T: Real>(distance: T, alpha: T) -> Result<T, PropagationError> {
    if !distance.is_finite() || distance < T::zero() {
        return Err(arg(format!("distance {distance} must be finite and >= 0")));
    }
    if !alpha.is_finite() || alpha < T::zero() {
        return Err(arg(format!("alpha {alpha} must be finite and >= 0")));
    }
    Ok((-alpha * distance).exp())
}

/// User-supplied modulation, registered by name.
///
/// Pure-gain hooks only scale the signal and work with both strategies.
/// General transforms (delay, filtering) override [`transform`](Self::transform),
/// return `false` from [`is_pure_gain`](Self::is_pure_gain) and are BFS-only;
/// their [`gain`](Self::gain) is still used for gain-floor pruning.
pub trait ModulationHook<T: Real>: Send + Sync {
    fn gain(&self, distance: T, material: &HapticMaterial<T>) -> T;

    fn is_pure_gain(&self) -> bool {
        true
    }

    fn transform(&self, signal: &HapticSignal<T>, distance: T, material: &HapticMaterial<T>) -> HapticSignal<T> {
        let g = self.gain(distance, material);
        signal.scale(g).unwrap_or_else(|_| HapticSignal::silent(signal.len(), signal.sample_rate()))
    }
}

#[derive(Clone, Default)]
pub struct HookRegistry<T> {
    hooks: BTreeMap<String, Arc<dyn ModulationHook<T>>>,
}

impl<T> fmt::Debug for HookRegistry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.hooks.keys()).finish()
    }
}

impl<T: Real> HookRegistry<T> {
    pub fn new() -> Self {
        Self {
            hooks: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: impl Into<String>, hook: Arc<dyn ModulationHook<T>>) {
        self.hooks.insert(name.into(), hook);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn ModulationHook<T>>> {
        self.hooks.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModulationFn<T> {
    Identity,
    Constant { gain: T },
    /// `max(0, 1 - slope·d)`.
    Linear { slope: T },
    /// `e^{-α d}`.
    Exponential { alpha: T },
    /// Material-aware function using the object's κ and ρ.
    Material { epsilon: T },
    /// Distance-only function used by the SD/MD modalities.
    Distance { alpha: T },
    Custom { name: String },
}

impl<T: Real> ModulationFn<T> {
    pub fn material() -> Self {
        ModulationFn::Material {
            epsilon: T::lit(DEFAULT_EPSILON),
        }
    }

    pub fn from_doc(doc: &ModulationDoc) -> Result<Self, PropagationError> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(T::lit(v))
            } else {
                Err(arg(format!("{name} = {v} must be finite and >= 0")))
            }
        };
        Ok(match doc {
            ModulationDoc::Identity => ModulationFn::Identity,
            ModulationDoc::Constant { gain } => ModulationFn::Constant {
                gain: nonneg("gain", *gain)?,
            },
            ModulationDoc::Linear { slope } => ModulationFn::Linear {
                slope: nonneg("slope", *slope)?,
            },
            ModulationDoc::Exponential { alpha } => ModulationFn::Exponential {
                alpha: nonneg("alpha", *alpha)?,
            },
            ModulationDoc::Material { epsilon } => {
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    return Err(arg(format!("epsilon = {epsilon} must be > 0")));
                }
                ModulationFn::Material {
                    epsilon: T::lit(*epsilon),
                }
            }
            ModulationDoc::Distance { alpha } => ModulationFn::Distance {
                alpha: nonneg("alpha", *alpha)?,
            },
            ModulationDoc::Custom { name } => ModulationFn::Custom { name: name.clone() },
        })
    }

    pub fn to_doc(&self) -> ModulationDoc {
        match self {
            ModulationFn::Identity => ModulationDoc::Identity,
            ModulationFn::Constant { gain } => ModulationDoc::Constant { gain: gain.as_f64() },
            ModulationFn::Linear { slope } => ModulationDoc::Linear { slope: slope.as_f64() },
            ModulationFn::Exponential { alpha } => ModulationDoc::Exponential { alpha: alpha.as_f64() },
            ModulationFn::Material { epsilon } => ModulationDoc::Material {
                epsilon: epsilon.as_f64(),
            },
            ModulationFn::Distance { alpha } => ModulationDoc::Distance { alpha: alpha.as_f64() },
            ModulationFn::Custom { name } => ModulationDoc::Custom { name: name.clone() },
        }
    }

    pub fn evaluate(
        &self,
        distance: T,
        material: &HapticMaterial<T>,
        hooks: &HookRegistry<T>,
    ) -> Result<EdgeModulation<T>, PropagationError> {
        let g = match self {
            ModulationFn::Identity => T::one(),
            ModulationFn::Constant { gain } => *gain,
            ModulationFn::Linear { slope } => (T::one() - *slope * distance).max(T::zero()),
            ModulationFn::Exponential { alpha } | ModulationFn::Distance { alpha } => gain_fct2(distance, *alpha)?,
            ModulationFn::Material { epsilon } => gain_fct1(distance, material.kappa, material.rho, *epsilon)?,
            ModulationFn::Custom { name } => {
                let hook = hooks.get(name).ok_or_else(|| PropagationError::UnknownHook(name.clone()))?;
                let nominal = hook.gain(distance, material);
                if !nominal.is_finite() || nominal < T::zero() {
                    return Err(arg(format!("hook '{name}' returned gain {nominal}")));
                }
                if hook.is_pure_gain() {
                    nominal
                } else {
                    return Ok(EdgeModulation::Transform(Arc::new(TransformStage {
                        name: name.clone(),
                        hook: hook.clone(),
                        distance,
                        material: material.clone(),
                        nominal,
                    })));
                }
            }
        };
        Ok(EdgeModulation::Gain(g))
    }
}

/// A non-linear edge: the hook plus the parameters it is applied with.
pub struct TransformStage<T> {
    pub name: String,
    pub hook: Arc<dyn ModulationHook<T>>,
    pub distance: T,
    pub material: HapticMaterial<T>,
    pub nominal: T,
}

impl<T: fmt::Debug> fmt::Debug for TransformStage<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformStage")
            .field("name", &self.name)
            .field("distance", &self.distance)
            .field("nominal", &self.nominal)
            .finish()
    }
}

/// Evaluated modulation of one edge.
#[derive(Debug, Clone)]
pub enum EdgeModulation<T> {
    Gain(T),
    Transform(Arc<TransformStage<T>>),
}

impl<T: Real> EdgeModulation<T> {
    /// Scalar gain (nominal gain for transforms).
    pub fn gain(&self) -> T {
        match self {
            EdgeModulation::Gain(g) => *g,
            EdgeModulation::Transform(t) => t.nominal,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, EdgeModulation::Gain(_))
    }

    fn apply(&self, signal: &HapticSignal<T>) -> HapticSignal<T> {
        match self {
            EdgeModulation::Gain(g) => signal.scaled_unchecked(*g),
            EdgeModulation::Transform(t) => t.hook.transform(signal, t.distance, &t.material),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Bfs,
    Dijkstra,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" => Ok(Strategy::Bfs),
            "dijkstra" => Ok(Strategy::Dijkstra),
            other => Err(format!("unknown strategy '{other}' (expected bfs or dijkstra)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig<T> {
    pub strategy: Strategy,
    pub max_hops: usize,
    pub gain_floor: T,
    pub intra_fn: ModulationFn<T>,
    pub inter_fn: ModulationFn<T>,
}

impl<T: Real> Default for PropagationConfig<T> {
    fn default() -> Self {
        Self {
            strategy: Strategy::Dijkstra,
            max_hops: DEFAULT_MAX_HOPS,
            gain_floor: T::lit(DEFAULT_GAIN_FLOOR),
            intra_fn: ModulationFn::material(),
            inter_fn: ModulationFn::Identity,
        }
    }
}

impl<T: Real> PropagationConfig<T> {
    pub fn validate(&self) -> Result<(), PropagationError> {
        if self.max_hops == 0 {
            return Err(arg("max_hops must be >= 1".into()));
        }
        if !(self.gain_floor > T::zero() && self.gain_floor < T::one()) {
            return Err(arg(format!("gain_floor {} must lie in (0, 1)", self.gain_floor)));
        }
        Ok(())
    }
}

/// Gain of one connection: intra edges use the object's override or
/// `intra_fn` with the object's material; inter edges use `inter_fn` with
/// the material of the first endpoint's object.
pub fn edge_gain<T: Real>(
    connection: &HapticConnection<T>,
    config: &PropagationConfig<T>,
    material: &HapticMaterial<T>,
    intra_override: Option<&ModulationFn<T>>,
    hooks: &HookRegistry<T>,
) -> Result<EdgeModulation<T>, PropagationError> {
    match connection.kind {
        ConnectionKind::Intra => intra_override
            .unwrap_or(&config.intra_fn)
            .evaluate(connection.distance, material, hooks),
        ConnectionKind::Inter => config.inter_fn.evaluate(connection.distance, material, hooks),
    }
}

/// Immutable adjacency snapshot with evaluated edge modulations.
#[derive(Debug, Clone)]
pub struct PropagationNetwork<T> {
    ids: Vec<NodeId>,
    lookup: HashMap<NodeId, usize>,
    listener: Vec<bool>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    edge_of: Vec<u32>,
    modulation: Vec<EdgeModulation<T>>,
    transform_hook: Option<String>,
}

impl<T: Real> PropagationNetwork<T> {
    /// Builds from explicit nodes `(id, is_listener)` and undirected edges.
    pub fn from_edges(
        nodes: &[(NodeId, bool)],
        edges: Vec<(NodeId, NodeId, EdgeModulation<T>)>,
    ) -> Result<Self, PropagationError> {
        let ids: Vec<NodeId> = nodes.iter().map(|n| n.0).collect();
        let lookup: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let listener = nodes.iter().map(|n| n.1).collect();
        let n = ids.len();
        let mut degree = vec![0usize; n];
        let mut resolved = Vec::with_capacity(edges.len());
        let mut modulation = Vec::with_capacity(edges.len());
        let mut transform_hook = None;
        for (a, b, m) in edges {
            let ia = *lookup.get(&a).ok_or(PropagationError::UnknownNode(a))?;
            let ib = *lookup.get(&b).ok_or(PropagationError::UnknownNode(b))?;
            if let EdgeModulation::Transform(t) = &m {
                transform_hook.get_or_insert_with(|| t.name.clone());
            }
            let g = m.gain();
            if !g.is_finite() || g < T::zero() {
                return Err(arg(format!("edge {a}-{b} has gain {g}")));
            }
            degree[ia] += 1;
            degree[ib] += 1;
            resolved.push((ia, ib));
            modulation.push(m);
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        let mut edge_of = vec![0u32; offsets[n]];
        for (e, &(ia, ib)) in resolved.iter().enumerate() {
            targets[fill[ia]] = ib as u32;
            edge_of[fill[ia]] = e as u32;
            fill[ia] += 1;
            targets[fill[ib]] = ia as u32;
            edge_of[fill[ib]] = e as u32;
            fill[ib] += 1;
        }
        Ok(Self {
            ids,
            lookup,
            listener,
            offsets,
            targets,
            edge_of,
            modulation,
            transform_hook,
        })
    }

    /// Snapshot of `graph` with edge modulations evaluated from `config`.
    pub fn from_graph<'m>(
        graph: &HapticGraph<T>,
        config: &PropagationConfig<T>,
        material_of: impl Fn(ObjectIndex) -> &'m HapticMaterial<T>,
        intra_override: impl Fn(ObjectIndex) -> Option<&'m ModulationFn<T>>,
        hooks: &HookRegistry<T>,
    ) -> Result<Self, PropagationError> {
        let nodes: Vec<(NodeId, bool)> = graph.nodes().map(|n| (n.id, n.kind == NodeKind::Listener)).collect();
        let mut edges = Vec::with_capacity(graph.edge_count());
        for c in graph.connections() {
            let object = graph.node(c.a).expect("edge endpoints exist").object;
            let m = edge_gain(c, config, material_of(object), intra_override(object), hooks)?;
            edges.push((c.a, c.b, m));
        }
        Self::from_edges(&nodes, edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.lookup.contains_key(&id)
    }

    pub fn is_listener(&self, id: NodeId) -> bool {
        self.lookup.get(&id).is_some_and(|&i| self.listener[i])
    }

    /// Name of the first non-pure hook in the network, if any.
    pub fn transform_hook(&self) -> Option<&str> {
        self.transform_hook.as_deref()
    }

    fn index(&self, id: NodeId) -> Result<usize, PropagationError> {
        self.lookup.get(&id).copied().ok_or(PropagationError::UnknownNode(id))
    }

    fn adjacent(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.offsets[i]..self.offsets[i + 1]).map(|k| (self.targets[k] as usize, self.edge_of[k] as usize))
    }
}

/// Ordered source → listener path with its cumulative gain.
#[derive(Debug, Clone)]
pub struct PathResult<T> {
    pub nodes: Vec<NodeId>,
    pub gain: T,
    /// Per-edge modulations, kept only when the path contains a transform.
    pub steps: Vec<EdgeModulation<T>>,
}

impl<T: Real> PathResult<T> {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }
}

/// Sends `signal` along `path`: a single scaling for pure-gain paths,
/// otherwise each edge's modulation in path order.
pub fn apply_path<T: Real>(signal: &HapticSignal<T>, path: &PathResult<T>) -> HapticSignal<T> {
    if path.steps.is_empty() {
        return signal.scaled_unchecked(path.gain);
    }
    path.steps.iter().fold(signal.clone(), |s, step| step.apply(&s))
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Label<T> {
    node: u32,
    parent: u32,
    edge: u32,
    hops: u32,
    gain: T,
    cost: T,
}

fn build_path<T: Real>(net: &PropagationNetwork<T>, labels: &[Label<T>], leaf: usize) -> PathResult<T> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut cur = leaf as u32;
    while cur != NO_PARENT {
        let l = &labels[cur as usize];
        nodes.push(net.ids[l.node as usize]);
        if l.parent != NO_PARENT {
            edges.push(l.edge as usize);
        }
        cur = l.parent;
    }
    nodes.reverse();
    edges.reverse();
    let steps = if edges.iter().any(|&e| !net.modulation[e].is_pure()) {
        edges.iter().map(|&e| net.modulation[e].clone()).collect()
    } else {
        Vec::new()
    };
    PathResult {
        nodes,
        gain: labels[leaf].gain,
        steps,
    }
}

fn on_branch<T>(labels: &[Label<T>], leaf: u32, node: u32) -> bool {
    let mut cur = leaf;
    while cur != NO_PARENT {
        let l = &labels[cur as usize];
        if l.node == node {
            return true;
        }
        cur = l.parent;
    }
    false
}

/// Every loop-free path from `source` to each reachable listener, found
/// breadth-first. A branch is dropped once its gain falls below
/// `gain_floor` and is not extended past `max_hops` edges.
pub fn propagate_bfs<T: Real>(
    net: &PropagationNetwork<T>,
    source: NodeId,
    config: &PropagationConfig<T>,
) -> Result<BTreeMap<NodeId, Vec<PathResult<T>>>, PropagationError> {
    let src = net.index(source)?;
    let mut labels = vec![Label {
        node: src as u32,
        parent: NO_PARENT,
        edge: 0,
        hops: 0,
        gain: T::one(),
        cost: T::zero(),
    }];
    let mut out: BTreeMap<NodeId, Vec<PathResult<T>>> = BTreeMap::new();
    let mut head = 0;
    while head < labels.len() {
        let cur = labels[head];
        let cur_idx = head as u32;
        head += 1;
        if cur.hops as usize >= config.max_hops {
            continue;
        }
        for (next, edge) in net.adjacent(cur.node as usize) {
            let gain = cur.gain * net.modulation[edge].gain();
            if gain < config.gain_floor || on_branch(&labels, cur_idx, next as u32) {
                continue;
            }
            labels.push(Label {
                node: next as u32,
                parent: cur_idx,
                edge: edge as u32,
                hops: cur.hops + 1,
                gain,
                cost: T::zero(),
            });
            if net.listener[next] {
                let leaf = labels.len() - 1;
                out.entry(net.ids[next]).or_default().push(build_path(net, &labels, leaf));
                // Captured: listeners do not forward.
                labels.pop();
            }
        }
    }
    Ok(out)
}

struct HeapItem<T> {
    cost: T,
    hops: u32,
    seq: u32,
}

impl<T: Real> PartialEq for HeapItem<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for HeapItem<T> {}
impl<T: Real> PartialOrd for HeapItem<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for HeapItem<T> {
    // Reversed: BinaryHeap pops the cheapest, then fewest hops, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then(other.hops.cmp(&self.hops))
            .then(other.seq.cmp(&self.seq))
    }
}

fn edge_cost<T: Real>(gain: T) -> T {
    // Gains above one are searched as free edges; the reported path gain
    // is still the true product.
    if gain >= T::one() {
        T::zero()
    } else {
        -gain.ln()
    }
}

/// Hop-bounded label-setting search. A label at node `v` with `h` hops is
/// dominated once `v` has been settled with fewer hops (settled labels are
/// never more expensive), so each node settles at most `max_hops` times and
/// settled paths are loop-free.
fn dijkstra<T: Real>(
    net: &PropagationNetwork<T>,
    src: usize,
    target: Option<usize>,
    config: &PropagationConfig<T>,
) -> Result<BTreeMap<NodeId, PathResult<T>>, PropagationError> {
    if let Some(name) = net.transform_hook() {
        return Err(PropagationError::IncompatibleStrategy(name.to_string()));
    }
    let n = net.node_count();
    let mut settled_hops = vec![u32::MAX; n];
    let mut found: BTreeMap<NodeId, PathResult<T>> = BTreeMap::new();
    let mut labels = vec![Label {
        node: src as u32,
        parent: NO_PARENT,
        edge: 0,
        hops: 0,
        gain: T::one(),
        cost: T::zero(),
    }];
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        cost: T::zero(),
        hops: 0,
        seq: 0,
    });
    let terminal = |i: usize| match target {
        Some(t) => i == t,
        None => net.listener[i],
    };
    while let Some(item) = heap.pop() {
        let li = item.seq as usize;
        let cur = labels[li];
        let node = cur.node as usize;
        if cur.hops >= settled_hops[node] {
            continue;
        }
        settled_hops[node] = cur.hops;
        if node != src && terminal(node) {
            let id = net.ids[node];
            found.entry(id).or_insert_with(|| build_path(net, &labels, li));
            if target.is_some() {
                break;
            }
            continue;
        }
        if node != src && net.listener[node] {
            continue;
        }
        if cur.hops as usize >= config.max_hops {
            continue;
        }
        for (next, edge) in net.adjacent(node) {
            let g = net.modulation[edge].gain();
            if g <= T::zero() {
                continue;
            }
            let gain = cur.gain * g;
            if gain < config.gain_floor || cur.hops + 1 >= settled_hops[next] {
                continue;
            }
            if !terminal(next) && net.listener[next] {
                continue;
            }
            let cost = cur.cost + edge_cost(g);
            let seq = labels.len() as u32;
            labels.push(Label {
                node: next as u32,
                parent: li as u32,
                edge: edge as u32,
                hops: cur.hops + 1,
                gain,
                cost,
            });
            heap.push(HeapItem {
                cost,
                hops: cur.hops + 1,
                seq,
            });
        }
    }
    Ok(found)
}

/// Maximum-gain path from `source` to every reachable listener.
pub fn shortest_paths<T: Real>(
    net: &PropagationNetwork<T>,
    source: NodeId,
    config: &PropagationConfig<T>,
) -> Result<BTreeMap<NodeId, PathResult<T>>, PropagationError> {
    let src = net.index(source)?;
    dijkstra(net, src, None, config)
}

/// Maximum-gain path from `source` to `listener`, or `None` when no path
/// within `max_hops` keeps its gain at or above `gain_floor`.
pub fn shortest_path<T: Real>(
    net: &PropagationNetwork<T>,
    source: NodeId,
    listener: NodeId,
    config: &PropagationConfig<T>,
) -> Result<Option<PathResult<T>>, PropagationError> {
    let src = net.index(source)?;
    let dst = net.index(listener)?;
    if src == dst {
        return Ok(Some(PathResult {
            nodes: vec![source],
            gain: T::one(),
            steps: Vec::new(),
        }));
    }
    Ok(dijkstra(net, src, Some(dst), config)?.remove(&listener))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::scene::HapticMaterial;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn net(listeners: &[u32], count: u32, edges: &[(u32, u32, f64)]) -> PropagationNetwork<f64> {
        let nodes: Vec<(NodeId, bool)> = (0..count).map(|i| (n(i), listeners.contains(&i))).collect();
        let edges = edges.iter().map(|&(a, b, g)| (n(a), n(b), EdgeModulation::Gain(g))).collect();
        PropagationNetwork::from_edges(&nodes, edges).unwrap()
    }

    fn cfg() -> PropagationConfig<f64> {
        PropagationConfig::default()
    }

    #[test]
    fn fct1_examples() {
        assert_eq!(gain_fct1(0.0, 0.0, 1.0, 0.1).unwrap(), 1.0);
        let g = gain_fct1(2.0, 0.5, 1.0, 0.1).unwrap();
        assert!((g - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((g - 0.18394).abs() < 1e-5);
        assert_eq!(gain_fct1(3.7, 1.0, 1.0, 0.1).unwrap(), 0.0);
        assert!(gain_fct1(-1.0, 0.5, 1.0, 0.1).is_err());
        assert!(gain_fct1(1.0, 1.5, 1.0, 0.1).is_err());
        assert!(gain_fct1(1.0, 0.5, 0.0, 0.1).is_err());
        assert!(gain_fct1(1.0, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn fct1_uses_epsilon_as_minimum_exponent() {
        // (1-κ)ρ = 0.01 < ε = 0.1, so the exponent is ε·d.
        let g = gain_fct1(1.0, 0.99, 1.0, 0.1).unwrap();
        assert!((g - (-0.1f64).exp() * (1.0 - 0.99)).abs() < 1e-15);
    }

    #[test]
    fn fct2_examples() {
        assert_eq!(gain_fct2(0.0, 0.2).unwrap(), 1.0);
        assert!((gain_fct2(5.0, 0.2).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(gain_fct2(10.0, 0.0).unwrap(), 1.0);
        assert!(gain_fct2(-1.0, 0.2).is_err());
    }

    #[test]
    fn gain_functions_are_nonincreasing_in_distance() {
        for &(k, r) in &[(0.0, 1.0), (0.5, 1.0), (0.2, 0.3), (0.9, 2.0)] {
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let g = gain_fct1(i as f64 * 0.05, k, r, 0.1).unwrap();
                assert!(g <= prev);
                prev = g;
            }
        }
        for &a in &[0.0, 0.2, 1.3] {
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let g = gain_fct2(i as f64 * 0.05, a).unwrap();
                assert!(g <= prev);
                prev = g;
            }
        }
    }

    #[test]
    fn edge_gain_dispatch() {
        let hooks = HookRegistry::new();
        let mat = HapticMaterial::new(0.5, 1.0);
        let inter = HapticConnection {
            kind: ConnectionKind::Inter,
            a: n(0),
            b: n(1),
            distance: 0.3,
        };
        assert_eq!(edge_gain(&inter, &cfg(), &mat, None, &hooks).unwrap().gain(), 1.0);
        let intra = HapticConnection {
            kind: ConnectionKind::Intra,
            distance: 2.0,
            ..inter
        };
        let g = edge_gain(&intra, &cfg(), &mat, None, &hooks).unwrap().gain();
        assert!((g - 0.18394).abs() < 1e-5);
        let c = PropagationConfig {
            intra_fn: ModulationFn::Constant { gain: 0.7 },
            ..cfg()
        };
        assert_eq!(edge_gain(&intra, &c, &mat, None, &hooks).unwrap().gain(), 0.7);
        let linear = ModulationFn::Linear { slope: 0.25 };
        assert_eq!(edge_gain(&intra, &c, &mat, Some(&linear), &hooks).unwrap().gain(), 0.5);
    }

    #[test]
    fn unknown_hook_is_an_error() {
        let f: ModulationFn<f64> = ModulationFn::Custom { name: "nope".into() };
        assert!(matches!(
            f.evaluate(1.0, &HapticMaterial::new(0.1, 1.0), &HookRegistry::new()),
            Err(PropagationError::UnknownHook(_))
        ));
    }

    #[test]
    fn bfs_skips_unreachable_listeners() {
        let net = net(&[3], 4, &[(0, 1, 0.9), (2, 3, 0.9)]);
        assert!(propagate_bfs(&net, n(0), &cfg()).unwrap().is_empty());
    }

    #[test]
    fn bfs_chain_multiplies_gains() {
        let e1 = (-1.0f64).exp();
        let net = net(&[3], 4, &[(0, 1, 0.5), (1, 2, 1.0), (2, 3, e1)]);
        let out = propagate_bfs(&net, n(0), &cfg()).unwrap();
        let paths = &out[&n(3)];
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, vec![n(0), n(1), n(2), n(3)]);
        assert!((paths[0].gain - 0.5 * e1).abs() < 1e-15);
    }

    #[test]
    fn bfs_diamond_returns_both_routes() {
        // 0 - 1 - 3 - 4 and 0 - 2 - 3 - 4.
        let net = net(&[4], 5, &[(0, 1, 0.9), (0, 2, 0.5), (1, 3, 0.8), (2, 3, 0.6), (3, 4, 1.0)]);
        let out = propagate_bfs(&net, n(0), &cfg()).unwrap();
        let mut gains: Vec<f64> = out[&n(4)].iter().map(|p| p.gain).collect();
        gains.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(out[&n(4)].len(), 2);
        assert!((gains[0] - 0.5 * 0.6).abs() < 1e-15);
        assert!((gains[1] - 0.9 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn listeners_do_not_forward() {
        let net = net(&[1, 2], 3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let out = propagate_bfs(&net, n(0), &cfg()).unwrap();
        assert_eq!(out.len(), 1);
        assert!(!shortest_paths(&net, n(0), &cfg()).unwrap().contains_key(&n(2)));
    }

    #[test]
    fn dijkstra_prefers_larger_product() {
        // A: 0-1-3 with 0.5·0.5, B: 0-2-3 with 0.9·0.2.
        let net = net(&[3], 4, &[(0, 1, 0.5), (1, 3, 0.5), (0, 2, 0.9), (2, 3, 0.2)]);
        let p = shortest_path(&net, n(0), n(3), &cfg()).unwrap().unwrap();
        assert_eq!(p.nodes, vec![n(0), n(1), n(3)]);
        assert!((p.gain - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dijkstra_single_edge_and_floor() {
        let net1 = net(&[1], 2, &[(0, 1, 0.42)]);
        let p = shortest_path(&net1, n(0), n(1), &cfg()).unwrap().unwrap();
        assert_eq!((p.nodes.len(), p.gain), (2, 0.42));
        let low = net(&[2], 3, &[(0, 1, 0.05), (1, 2, 0.05)]);
        assert!(shortest_path(&low, n(0), n(2), &cfg()).unwrap().is_none());
    }

    #[test]
    fn dijkstra_respects_hop_cap() {
        // Best path has 3 hops, a worse one has 1.
        let net = net(&[3], 4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 0.3)]);
        let c = PropagationConfig { max_hops: 2, ..cfg() };
        let p = shortest_path(&net, n(0), n(3), &c).unwrap().unwrap();
        assert_eq!(p.gain, 0.3);
        let p = shortest_path(&net, n(0), n(3), &cfg()).unwrap().unwrap();
        assert_eq!(p.gain, 1.0);
        assert_eq!(p.hops(), 3);
    }

    #[test]
    fn dijkstra_prunes_zero_gain_edges() {
        let net = net(&[1], 2, &[(0, 1, 0.0)]);
        assert!(shortest_path(&net, n(0), n(1), &cfg()).unwrap().is_none());
    }

    struct Invert;
    impl ModulationHook<f64> for Invert {
        fn gain(&self, _: f64, _: &HapticMaterial<f64>) -> f64 {
            1.0
        }
        fn is_pure_gain(&self) -> bool {
            false
        }
        fn transform(&self, s: &HapticSignal<f64>, _: f64, _: &HapticMaterial<f64>) -> HapticSignal<f64> {
            HapticSignal::new(s.samples().iter().map(|x| -x).collect(), s.sample_rate()).unwrap()
        }
    }

    #[test]
    fn transforms_are_bfs_only_and_apply_in_order() {
        let mut hooks = HookRegistry::new();
        hooks.register("invert", Arc::new(Invert));
        let mat = HapticMaterial::new(0.0, 1.0);
        let t = ModulationFn::Custom { name: "invert".into() }.evaluate(0.0, &mat, &hooks).unwrap();
        let nodes = [(n(0), false), (n(1), false), (n(2), true)];
        let net = PropagationNetwork::from_edges(&nodes, vec![(n(0), n(1), EdgeModulation::Gain(0.5)), (n(1), n(2), t)]).unwrap();
        assert!(matches!(
            shortest_path(&net, n(0), n(2), &cfg()),
            Err(PropagationError::IncompatibleStrategy(_))
        ));
        let out = propagate_bfs(&net, n(0), &cfg()).unwrap();
        let path = &out[&n(2)][0];
        assert_eq!(path.steps.len(), 2);
        let s = HapticSignal::new(vec![1.0, -0.5], 8000).unwrap();
        assert_eq!(apply_path(&s, path).samples(), &[-0.5, 0.25]);
    }

    #[test]
    fn apply_path_examples() {
        let s = HapticSignal::new(vec![1.0], 8000).unwrap();
        let unit = PathResult {
            nodes: vec![n(0), n(1)],
            gain: 1.0,
            steps: vec![],
        };
        assert_eq!(apply_path(&s, &unit), s);
        let e1 = (-1.0f64).exp();
        let net = net(&[2], 3, &[(0, 1, 0.5), (1, 2, e1)]);
        let p = shortest_path(&net, n(0), n(2), &cfg()).unwrap().unwrap();
        let out = apply_path(&s, &p);
        assert!((out.samples()[0] - 0.18394).abs() < 1e-5);
        let zero = PathResult { gain: 0.0, ..unit };
        assert!(apply_path(&s, &zero).is_silent());
    }

    #[test]
    fn network_from_graph_uses_materials() {
        let mut g = HapticGraph::with_objects(2);
        let s = g.attach_endpoint_node(NodeKind::Source, ObjectIndex(0), Vec3::new(0.0, 0.0, 0.0)).unwrap();
        let l = g.attach_endpoint_node(NodeKind::Listener, ObjectIndex(1), Vec3::new(2.0, 0.0, 0.0)).unwrap();
        g.add_contact_pair(ObjectIndex(0), ObjectIndex(1), 0, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        let mats = [HapticMaterial::new(0.0, 1.0), HapticMaterial::new(0.5, 1.0)];
        let net = PropagationNetwork::from_graph(&g, &cfg(), |o| &mats[o.get()], |_| None, &HookRegistry::new()).unwrap();
        let p = shortest_path(&net, s, l, &cfg()).unwrap().unwrap();
        assert!((p.gain - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(PropagationConfig { max_hops: 0, ..cfg() }.validate().is_err());
        assert!(PropagationConfig { gain_floor: 1.0, ..cfg() }.validate().is_err());
        assert!(PropagationConfig { gain_floor: 0.0, ..cfg() }.validate().is_err());
    }
}
