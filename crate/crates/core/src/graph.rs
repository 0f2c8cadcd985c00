//! The dynamic haptic graph.
//!
//! Nodes belong to exactly one object. All nodes of an object form a clique
//! of intra-connections; inter-connections join the two nodes of a contact
//! pair on different objects. Node ids are never reused, so iteration order
//! (and therefore everything downstream) is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::geometry::{Pose, Vec3};
use crate::real::Real;
use crate::scene::ObjectIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Source,
    Listener,
    Contact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HapticNode<T> {
    pub id: NodeId,
    pub object: ObjectIndex,
    pub kind: NodeKind,
    /// World position.
    pub position: Vec3<T>,
    /// Position in the owning object's frame; world position follows the pose.
    pub local: Vec3<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConnectionKind {
    Intra,
    Inter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HapticConnection<T> {
    pub kind: ConnectionKind,
    /// Endpoints with `a < b`.
    pub a: NodeId,
    pub b: NodeId,
    /// Cached Euclidean distance between the endpoints.
    pub distance: T,
}

/// Identifies one contact pair: two objects plus a contact index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContactKey {
    pub a: ObjectIndex,
    pub b: ObjectIndex,
    pub index: u32,
}

impl ContactKey {
    /// Normalizes the object order so `(a, b)` and `(b, a)` name the same pair.
    pub fn new(a: ObjectIndex, b: ObjectIndex, index: u32) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Self { a, b, index }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown object #{0}")]
    UnknownObject(u32),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("contact ({}, {}, #{}) already exists", .0.a.0, .0.b.0, .0.index)]
    DuplicateContact(ContactKey),
    #[error("unknown contact ({}, {}, #{})", .0.a.0, .0.b.0, .0.index)]
    UnknownContact(ContactKey),
    #[error("an object cannot be in contact with itself (object #{0})")]
    SelfContact(u32),
    #[error("node {0} is a contact node; remove its contact pair instead")]
    ContactNode(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Node is missing from, or misfiled in, the per-object index.
    Partition { node: NodeId },
    /// Two nodes of one object without an intra-connection.
    MissingIntra { a: NodeId, b: NodeId },
    /// Edge kind disagrees with the endpoints' objects.
    EdgeKind { a: NodeId, b: NodeId, kind: ConnectionKind },
    SelfLoop { node: NodeId },
    DanglingEdge { a: NodeId, b: NodeId },
    /// Adjacency and edge set disagree.
    Asymmetric { a: NodeId, b: NodeId },
    StaleDistance { a: NodeId, b: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HapticGraph<T> {
    poses: Vec<Pose<T>>,
    nodes: BTreeMap<NodeId, HapticNode<T>>,
    edges: BTreeMap<(NodeId, NodeId), HapticConnection<T>>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    by_object: Vec<BTreeSet<NodeId>>,
    contacts: BTreeMap<ContactKey, (NodeId, NodeId)>,
    next_id: u32,
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<T: Real> HapticGraph<T> {
    /// Empty graph over objects with the given current poses.
    pub fn new(poses: Vec<Pose<T>>) -> Self {
        let n = poses.len();
        Self {
            poses,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            adjacency: BTreeMap::new(),
            by_object: vec![BTreeSet::new(); n],
            contacts: BTreeMap::new(),
            next_id: 0,
        }
    }

    /// Empty graph over `count` objects, all at the identity pose.
    pub fn with_objects(count: usize) -> Self {
        Self::new(vec![Pose::identity(); count])
    }

    fn check_object(&self, o: ObjectIndex) -> Result<(), GraphError> {
        if o.get() < self.by_object.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownObject(o.0))
        }
    }

    fn insert_node(&mut self, object: ObjectIndex, kind: NodeKind, position: Vec3<T>) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let local = self.poses[object.get()].inverse_transform_point(position);
        let peers: Vec<NodeId> = self.by_object[object.get()].iter().copied().collect();
        self.nodes.insert(
            id,
            HapticNode {
                id,
                object,
                kind,
                position,
                local,
            },
        );
        self.adjacency.insert(id, BTreeSet::new());
        self.by_object[object.get()].insert(id);
        for p in peers {
            self.insert_edge(ConnectionKind::Intra, id, p);
        }
        id
    }

    fn insert_edge(&mut self, kind: ConnectionKind, x: NodeId, y: NodeId) {
        let (a, b) = ordered(x, y);
        let distance = self.nodes[&a].position.distance(self.nodes[&b].position);
        self.edges.insert(
            (a, b),
            HapticConnection {
                kind,
                a,
                b,
                distance,
            },
        );
        self.adjacency.get_mut(&a).unwrap().insert(b);
        self.adjacency.get_mut(&b).unwrap().insert(a);
    }

    fn delete_node(&mut self, id: NodeId) {
        let node = self.nodes.remove(&id).expect("node exists");
        for n in self.adjacency.remove(&id).unwrap_or_default() {
            self.edges.remove(&ordered(id, n));
            if let Some(adj) = self.adjacency.get_mut(&n) {
                adj.remove(&id);
            }
        }
        self.by_object[node.object.get()].remove(&id);
    }

    /// Adds one contact node per object at `point`, the inter-connection
    /// between them and the intra-connections restoring each clique.
    /// Returns `(node on a, node on b)`.
    pub fn add_contact_pair(
        &mut self,
        a: ObjectIndex,
        b: ObjectIndex,
        index: u32,
        point: Vec3<T>,
    ) -> Result<(NodeId, NodeId), GraphError> {
        self.check_object(a)?;
        self.check_object(b)?;
        if a == b {
            return Err(GraphError::SelfContact(a.0));
        }
        let key = ContactKey::new(a, b, index);
        if self.contacts.contains_key(&key) {
            return Err(GraphError::DuplicateContact(key));
        }
        let na = self.insert_node(a, NodeKind::Contact, point);
        let nb = self.insert_node(b, NodeKind::Contact, point);
        self.insert_edge(ConnectionKind::Inter, na, nb);
        let stored = if key.a == a { (na, nb) } else { (nb, na) };
        self.contacts.insert(key, stored);
        Ok((na, nb))
    }

    /// Removes both contact nodes of `key` and every incident edge.
    pub fn remove_contact_pair(&mut self, key: ContactKey) -> Result<(), GraphError> {
        let (na, nb) = self.contacts.remove(&key).ok_or(GraphError::UnknownContact(key))?;
        self.delete_node(na);
        self.delete_node(nb);
        Ok(())
    }

    /// Adds a source or listener node at world `position`, intra-connected
    /// to every existing node of `object`.
    pub fn attach_endpoint_node(
        &mut self,
        kind: NodeKind,
        object: ObjectIndex,
        position: Vec3<T>,
    ) -> Result<NodeId, GraphError> {
        self.check_object(object)?;
        debug_assert!(kind != NodeKind::Contact, "contact nodes come in pairs");
        Ok(self.insert_node(object, kind, position))
    }

    /// Removes a source or listener node.
    pub fn remove_endpoint_node(&mut self, id: NodeId) -> Result<(), GraphError> {
        match self.nodes.get(&id) {
            None => Err(GraphError::UnknownNode(id)),
            Some(n) if n.kind == NodeKind::Contact => Err(GraphError::ContactNode(id)),
            Some(_) => {
                self.delete_node(id);
                Ok(())
            }
        }
    }

    /// Moves an object; its nodes follow rigidly and incident distances are
    /// recomputed.
    pub fn set_object_pose(&mut self, object: ObjectIndex, pose: Pose<T>) -> Result<(), GraphError> {
        self.check_object(object)?;
        if self.poses[object.get()] == pose {
            return Ok(());
        }
        self.poses[object.get()] = pose;
        let ids: Vec<NodeId> = self.by_object[object.get()].iter().copied().collect();
        for id in &ids {
            let n = self.nodes.get_mut(id).unwrap();
            n.position = pose.transform_point(n.local);
        }
        self.refresh_distances(&ids);
        Ok(())
    }

    /// Slides both nodes of a contact pair to a new world point.
    pub fn move_contact(&mut self, key: ContactKey, point: Vec3<T>) -> Result<(), GraphError> {
        let (na, nb) = *self.contacts.get(&key).ok_or(GraphError::UnknownContact(key))?;
        for id in [na, nb] {
            let n = self.nodes.get_mut(&id).unwrap();
            if n.position == point {
                continue;
            }
            n.position = point;
            n.local = self.poses[n.object.get()].inverse_transform_point(point);
        }
        self.refresh_distances(&[na, nb]);
        Ok(())
    }

    fn refresh_distances(&mut self, ids: &[NodeId]) {
        for id in ids {
            let p = self.nodes[id].position;
            for other in &self.adjacency[id] {
                let d = p.distance(self.nodes[other].position);
                self.edges.get_mut(&ordered(*id, *other)).unwrap().distance = d;
            }
        }
    }

    pub fn pose(&self, object: ObjectIndex) -> Option<&Pose<T>> {
        self.poses.get(object.get())
    }

    pub fn object_count(&self) -> usize {
        self.by_object.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&HapticNode<T>> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &HapticNode<T>> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn connections(&self) -> impl Iterator<Item = &HapticConnection<T>> {
        self.edges.values()
    }

    pub fn connection(&self, a: NodeId, b: NodeId) -> Option<&HapticConnection<T>> {
        self.edges.get(&ordered(a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    pub fn nodes_of(&self, object: ObjectIndex) -> impl Iterator<Item = NodeId> + '_ {
        self.by_object.get(object.get()).into_iter().flatten().copied()
    }

    pub fn intra_edge_count(&self, object: ObjectIndex) -> usize {
        let ids: Vec<NodeId> = self.nodes_of(object).collect();
        let mut count = 0;
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if matches!(self.connection(*a, *b), Some(c) if c.kind == ConnectionKind::Intra) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn contact(&self, key: ContactKey) -> Option<(NodeId, NodeId)> {
        self.contacts.get(&key).copied()
    }

    pub fn contacts(&self) -> impl Iterator<Item = (&ContactKey, &(NodeId, NodeId))> {
        self.contacts.iter()
    }

    /// Connected components, each sorted by node id; components ordered by
    /// their smallest node.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in self.nodes.keys() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                for m in self.neighbors(n) {
                    if seen.insert(m) {
                        comp.push(m);
                        stack.push(m);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    /// Component label per node (index into [`components`](Self::components)).
    pub fn component_labels(&self) -> BTreeMap<NodeId, usize> {
        let mut labels = BTreeMap::new();
        for (i, comp) in self.components().into_iter().enumerate() {
            for n in comp {
                labels.insert(n, i);
            }
        }
        labels
    }

    /// Every structural violation found; empty when the graph is consistent.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for n in self.nodes.values() {
            let filed = self
                .by_object
                .get(n.object.get())
                .is_some_and(|s| s.contains(&n.id));
            let elsewhere = self
                .by_object
                .iter()
                .enumerate()
                .any(|(i, s)| i != n.object.get() && s.contains(&n.id));
            if !filed || elsewhere {
                v.push(Violation::Partition { node: n.id });
            }
        }
        for set in &self.by_object {
            for id in set {
                if !self.nodes.contains_key(id) {
                    v.push(Violation::Partition { node: *id });
                }
            }
        }
        for set in &self.by_object {
            let ids: Vec<NodeId> = set.iter().copied().collect();
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    if !self.edges.contains_key(&ordered(*a, *b)) {
                        v.push(Violation::MissingIntra { a: *a, b: *b });
                    }
                }
            }
        }
        let tol = T::lit(1e-9);
        for (&(a, b), c) in &self.edges {
            if a == b {
                v.push(Violation::SelfLoop { node: a });
                continue;
            }
            let (Some(na), Some(nb)) = (self.nodes.get(&a), self.nodes.get(&b)) else {
                v.push(Violation::DanglingEdge { a, b });
                continue;
            };
            let same = na.object == nb.object;
            if same != (c.kind == ConnectionKind::Intra) {
                v.push(Violation::EdgeKind { a, b, kind: c.kind });
            }
            if (c.distance - na.position.distance(nb.position)).abs() > tol {
                v.push(Violation::StaleDistance { a, b });
            }
            let linked = self.adjacency.get(&a).is_some_and(|s| s.contains(&b))
                && self.adjacency.get(&b).is_some_and(|s| s.contains(&a));
            if !linked {
                v.push(Violation::Asymmetric { a, b });
            }
        }
        for (&a, set) in &self.adjacency {
            for &b in set {
                if !self.edges.contains_key(&ordered(a, b)) {
                    v.push(Violation::Asymmetric { a, b });
                }
            }
        }
        v
    }

    /// Graphviz DOT dump. `object_name` labels objects.
    pub fn to_dot(&self, object_name: impl Fn(ObjectIndex) -> String) -> String {
        let mut s = String::from("graph haptic {\n");
        for n in self.nodes.values() {
            let kind = match n.kind {
                NodeKind::Source => "source",
                NodeKind::Listener => "listener",
                NodeKind::Contact => "contact",
            };
            let _ = writeln!(
                s,
                "  {} [object=\"{}\", kind=\"{}\", label=\"{}\\n{}\"];",
                n.id,
                object_name(n.object),
                kind,
                n.id,
                object_name(n.object)
            );
        }
        for c in self.edges.values() {
            let (kind, style) = match c.kind {
                ConnectionKind::Intra => ("intra", "solid"),
                ConnectionKind::Inter => ("inter", "dashed"),
            };
            let _ = writeln!(
                s,
                "  {} -- {} [kind=\"{}\", distance={}, style={}];",
                c.a, c.b, kind, c.distance, style
            );
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(i: u32) -> ObjectIndex {
        ObjectIndex(i)
    }

    fn p(x: f64) -> Vec3<f64> {
        Vec3::new(x, 0.0, 0.0)
    }

    fn node_and_edge_sets(g: &HapticGraph<f64>) -> (Vec<HapticNode<f64>>, Vec<HapticConnection<f64>>) {
        (g.nodes().cloned().collect(), g.connections().copied().collect())
    }

    #[test]
    fn contact_pair_edge_counts() {
        let mut g = HapticGraph::with_objects(2);
        g.attach_endpoint_node(NodeKind::Source, o(0), p(0.0)).unwrap();
        g.attach_endpoint_node(NodeKind::Listener, o(1), p(1.0)).unwrap();
        g.attach_endpoint_node(NodeKind::Listener, o(1), p(2.0)).unwrap();
        let before = g.edge_count();
        g.add_contact_pair(o(0), o(1), 0, p(0.5)).unwrap();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edge_count() - before, 4);
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn contact_pair_between_empty_objects() {
        let mut g = HapticGraph::with_objects(2);
        g.add_contact_pair(o(0), o(1), 0, p(0.0)).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.connections().next().unwrap().kind, ConnectionKind::Inter);
    }

    #[test]
    fn duplicate_and_unknown_contacts_error() {
        let mut g = HapticGraph::with_objects(2);
        g.add_contact_pair(o(0), o(1), 0, p(0.0)).unwrap();
        assert!(matches!(g.add_contact_pair(o(1), o(0), 0, p(0.0)), Err(GraphError::DuplicateContact(_))));
        assert!(g.add_contact_pair(o(0), o(1), 1, p(0.0)).is_ok());
        assert!(matches!(
            g.remove_contact_pair(ContactKey::new(o(0), o(1), 7)),
            Err(GraphError::UnknownContact(_))
        ));
        assert!(matches!(g.add_contact_pair(o(0), o(5), 0, p(0.0)), Err(GraphError::UnknownObject(5))));
        assert!(matches!(g.add_contact_pair(o(0), o(0), 0, p(0.0)), Err(GraphError::SelfContact(0))));
    }

    #[test]
    fn add_then_remove_restores_empty_graph() {
        let mut g = HapticGraph::with_objects(2);
        g.add_contact_pair(o(0), o(1), 0, p(0.0)).unwrap();
        g.remove_contact_pair(ContactKey::new(o(0), o(1), 0)).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn removing_one_contact_leaves_the_other() {
        let mut g = HapticGraph::with_objects(2);
        g.add_contact_pair(o(0), o(1), 0, p(0.0)).unwrap();
        let (na, nb) = g.add_contact_pair(o(0), o(1), 1, p(1.0)).unwrap();
        g.remove_contact_pair(ContactKey::new(o(0), o(1), 0)).unwrap();
        let nodes: Vec<NodeId> = g.nodes().map(|n| n.id).collect();
        assert_eq!(nodes, vec![na, nb]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.connection(na, nb).unwrap().kind, ConnectionKind::Inter);
    }

    #[test]
    fn endpoint_clique_examples() {
        let mut g = HapticGraph::with_objects(1);
        g.attach_endpoint_node(NodeKind::Listener, o(0), p(0.0)).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        g.attach_endpoint_node(NodeKind::Listener, o(0), p(1.0)).unwrap();
        assert_eq!(g.edge_count(), 1);
        g.attach_endpoint_node(NodeKind::Listener, o(0), p(2.0)).unwrap();
        let before = g.edge_count();
        g.attach_endpoint_node(NodeKind::Source, o(0), p(3.0)).unwrap();
        assert_eq!(g.edge_count() - before, 3);
        assert!(g.attach_endpoint_node(NodeKind::Source, o(9), p(0.0)).is_err());
    }

    #[test]
    fn components_examples() {
        let g = HapticGraph::<f64>::with_objects(0);
        assert!(g.components().is_empty());
        let mut g = HapticGraph::with_objects(2);
        g.attach_endpoint_node(NodeKind::Source, o(0), p(0.0)).unwrap();
        g.attach_endpoint_node(NodeKind::Listener, o(1), p(5.0)).unwrap();
        assert_eq!(g.components().len(), 2);
        g.add_contact_pair(o(0), o(1), 0, p(2.0)).unwrap();
        assert_eq!(g.components().len(), 1);
    }

    #[test]
    fn missing_intra_edge_is_reported() {
        let mut g = HapticGraph::with_objects(1);
        let a = g.attach_endpoint_node(NodeKind::Listener, o(0), p(0.0)).unwrap();
        let b = g.attach_endpoint_node(NodeKind::Listener, o(0), p(1.0)).unwrap();
        g.edges.remove(&(a, b));
        g.adjacency.get_mut(&a).unwrap().remove(&b);
        g.adjacency.get_mut(&b).unwrap().remove(&a);
        assert_eq!(g.check_invariants(), vec![Violation::MissingIntra { a, b }]);
    }

    #[test]
    fn inter_edge_inside_one_object_is_reported() {
        let mut g = HapticGraph::with_objects(1);
        let a = g.attach_endpoint_node(NodeKind::Listener, o(0), p(0.0)).unwrap();
        let b = g.attach_endpoint_node(NodeKind::Listener, o(0), p(1.0)).unwrap();
        g.edges.get_mut(&(a, b)).unwrap().kind = ConnectionKind::Inter;
        assert_eq!(
            g.check_invariants(),
            vec![Violation::EdgeKind {
                a,
                b,
                kind: ConnectionKind::Inter
            }]
        );
    }

    #[test]
    fn pose_updates_move_nodes_and_distances() {
        let mut g = HapticGraph::with_objects(2);
        g.attach_endpoint_node(NodeKind::Source, o(0), p(0.0)).unwrap();
        let (ca, _) = g.add_contact_pair(o(0), o(1), 0, p(1.0)).unwrap();
        g.set_object_pose(o(0), Pose::from_position(Vec3::new(0.0, 3.0, 0.0))).unwrap();
        assert_eq!(g.node(ca).unwrap().position, Vec3::new(1.0, 3.0, 0.0));
        assert!(g.check_invariants().is_empty());
        g.move_contact(ContactKey::new(o(0), o(1), 0), p(4.0)).unwrap();
        assert!(g.check_invariants().is_empty());
        let s = g.nodes_of(o(0)).next().unwrap();
        assert_eq!(g.connection(s, ca).unwrap().distance, Vec3::new(4.0, -3.0, 0.0).norm());
    }

    #[test]
    fn dot_export_lists_nodes_and_edges() {
        let mut g = HapticGraph::with_objects(2);
        g.add_contact_pair(o(0), o(1), 0, p(0.0)).unwrap();
        let dot = g.to_dot(|i| format!("obj{}", i.0));
        assert!(dot.starts_with("graph haptic {"));
        assert!(dot.contains("n0 -- n1 [kind=\"inter\""));
        assert!(dot.contains("object=\"obj1\""));
    }

    #[derive(Debug, Clone)]
    enum Op {
        Add(u32, u32, u32),
        Remove(usize),
        Attach(bool, u32),
        Detach(usize),
        Move(u32, f64),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0u32..5, 0u32..5, 0u32..3).prop_map(|(a, b, i)| Op::Add(a, b, i)),
            (0usize..16).prop_map(Op::Remove),
            (any::<bool>(), 0u32..5).prop_map(|(l, o)| Op::Attach(l, o)),
            (0usize..16).prop_map(Op::Detach),
            (0u32..5, -3.0f64..3.0).prop_map(|(o, x)| Op::Move(o, x)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn random_mutations_preserve_invariants(ops in prop::collection::vec(op(), 1..40)) {
            let mut g = HapticGraph::with_objects(5);
            for (step, op) in ops.into_iter().enumerate() {
                match op {
                    Op::Add(a, b, i) => {
                        let _ = g.add_contact_pair(o(a), o(b), i, Vec3::new(step as f64, 0.0, 1.0));
                    }
                    Op::Remove(k) => {
                        let keys: Vec<ContactKey> = g.contacts().map(|(k, _)| *k).collect();
                        if !keys.is_empty() {
                            g.remove_contact_pair(keys[k % keys.len()]).unwrap();
                        }
                    }
                    Op::Attach(listener, obj) => {
                        let kind = if listener { NodeKind::Listener } else { NodeKind::Source };
                        g.attach_endpoint_node(kind, o(obj), Vec3::new(0.0, step as f64, 0.0)).unwrap();
                    }
                    Op::Detach(k) => {
                        let ends: Vec<NodeId> = g.nodes().filter(|n| n.kind != NodeKind::Contact).map(|n| n.id).collect();
                        if !ends.is_empty() {
                            g.remove_endpoint_node(ends[k % ends.len()]).unwrap();
                        }
                    }
                    Op::Move(obj, x) => {
                        g.set_object_pose(o(obj), Pose::from_position(Vec3::new(x, x, 0.0))).unwrap();
                    }
                }
                prop_assert!(g.check_invariants().is_empty());
                for obj in 0..5 {
                    let k = g.nodes_of(o(obj)).count();
                    prop_assert_eq!(g.intra_edge_count(o(obj)), k * k.saturating_sub(1) / 2);
                }
            }
        }

        #[test]
        fn add_remove_is_an_inverse(pre in prop::collection::vec((0u32..4, 0u32..4), 0..6), a in 0u32..4, b in 0u32..4) {
            prop_assume!(a != b);
            let mut g = HapticGraph::with_objects(4);
            for (i, (x, y)) in pre.into_iter().enumerate() {
                let _ = g.add_contact_pair(o(x), o(y), i as u32, Vec3::new(i as f64, 1.0, 0.0));
            }
            let before = node_and_edge_sets(&g);
            g.add_contact_pair(o(a), o(b), 99, Vec3::new(0.5, 0.5, 0.5)).unwrap();
            g.remove_contact_pair(ContactKey::new(o(a), o(b), 99)).unwrap();
            prop_assert_eq!(before, node_and_edge_sets(&g));
        }
    }
}
