//! Path search checked against exhaustive loop-free path enumeration.

use std::collections::BTreeSet;

use proptest::prelude::*;
use vibrograph::graph::NodeId;
use vibrograph::propagation::{
    propagate_bfs, shortest_path, EdgeModulation, PropagationConfig, PropagationNetwork,
};

#[derive(Debug, Clone)]
struct Instance {
    n: usize,
    listeners: Vec<usize>,
    edges: Vec<(usize, usize, f64)>,
}

/// Node 0 is the source; listener nodes end paths and are never passed through.
fn all_paths(inst: &Instance, target: usize, max_hops: usize, floor: f64) -> Vec<(Vec<usize>, f64)> {
    let mut adj = vec![Vec::new(); inst.n];
    for &(a, b, g) in &inst.edges {
        adj[a].push((b, g));
        adj[b].push((a, g));
    }
    let mut out = Vec::new();
    let mut stack = vec![(vec![0usize], 1.0f64)];
    while let Some((path, gain)) = stack.pop() {
        let last = *path.last().unwrap();
        if last == target && path.len() > 1 {
            out.push((path, gain));
            continue;
        }
        if path.len() > 1 && inst.listeners.contains(&last) {
            continue;
        }
        if path.len() - 1 == max_hops {
            continue;
        }
        for &(next, g) in &adj[last] {
            if path.contains(&next) || gain * g < floor {
                continue;
            }
            let mut p = path.clone();
            p.push(next);
            stack.push((p, gain * g));
        }
    }
    out
}

fn network(inst: &Instance) -> PropagationNetwork<f64> {
    let nodes: Vec<(NodeId, bool)> = (0..inst.n).map(|i| (NodeId(i as u32), inst.listeners.contains(&i))).collect();
    let edges = inst
        .edges
        .iter()
        .map(|&(a, b, g)| (NodeId(a as u32), NodeId(b as u32), EdgeModulation::Gain(g)))
        .collect();
    PropagationNetwork::from_edges(&nodes, edges).unwrap()
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let m = pairs.len();
        (
            Just(n),
            prop::collection::vec(prop::bool::weighted(0.3), n - 1),
            prop::collection::vec(prop::option::weighted(0.5, 0.001f64..=1.0), m),
        )
            .prop_map(move |(n, is_listener, gains)| {
                let mut listeners: Vec<usize> = (1..n).filter(|i| is_listener[i - 1]).collect();
                if listeners.is_empty() {
                    listeners.push(n - 1);
                }
                let edges = pairs
                    .iter()
                    .zip(gains)
                    .filter_map(|(&(a, b), g)| g.map(|g| (a, b, g)))
                    .collect();
                Instance { n, listeners, edges }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dijkstra_matches_exhaustive_maximum(inst in instance(), hops in 1usize..8, floor in prop::sample::select(vec![1e-12, 0.01, 0.2])) {
        let net = network(&inst);
        let cfg = PropagationConfig { max_hops: hops, gain_floor: floor, ..PropagationConfig::default() };
        for &l in &inst.listeners {
            let best = all_paths(&inst, l, hops, floor).into_iter().map(|p| p.1).fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))));
            let got = shortest_path(&net, NodeId(0), NodeId(l as u32), &cfg).unwrap();
            match (best, got) {
                (None, None) => {}
                (Some(b), Some(p)) => {
                    prop_assert!((p.gain - b).abs() <= 1e-12 * b, "listener {l}: {} vs {b}", p.gain);
                    prop_assert!(p.hops() <= hops);
                    let distinct: BTreeSet<_> = p.nodes.iter().collect();
                    prop_assert_eq!(distinct.len(), p.nodes.len());
                }
                (b, g) => prop_assert!(false, "listener {l}: oracle {b:?}, search {:?}", g.map(|p| p.gain)),
            }
        }
    }

    #[test]
    fn bfs_returns_exactly_the_oracle_paths(inst in instance(), hops in 1usize..8) {
        let net = network(&inst);
        let cfg = PropagationConfig { max_hops: hops, gain_floor: 1e-12, ..PropagationConfig::default() };
        let got = propagate_bfs(&net, NodeId(0), &cfg).unwrap();
        for &l in &inst.listeners {
            let expected: BTreeSet<Vec<u32>> = all_paths(&inst, l, hops, 1e-12)
                .into_iter()
                .map(|(p, _)| p.into_iter().map(|i| i as u32).collect())
                .collect();
            let found: BTreeSet<Vec<u32>> = got
                .get(&NodeId(l as u32))
                .map(|ps| ps.iter().map(|p| p.nodes.iter().map(|n| n.0).collect()).collect())
                .unwrap_or_default();
            prop_assert_eq!(found, expected);
        }
    }

    #[test]
    fn more_hops_or_lower_floor_never_lose_gain(inst in instance(), hops in 1usize..7) {
        let net = network(&inst);
        let tight = PropagationConfig { max_hops: hops, gain_floor: 0.05, ..PropagationConfig::default() };
        let loose = PropagationConfig { max_hops: hops + 1, gain_floor: 0.01, ..PropagationConfig::default() };
        for &l in &inst.listeners {
            let a = shortest_path(&net, NodeId(0), NodeId(l as u32), &tight).unwrap().map_or(0.0, |p| p.gain);
            let b = shortest_path(&net, NodeId(0), NodeId(l as u32), &loose).unwrap().map_or(0.0, |p| p.gain);
            prop_assert!(b >= a);
        }
    }
}
