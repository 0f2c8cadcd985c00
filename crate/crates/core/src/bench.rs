//! Synthetic load for the real-time budget: a grid of objects joined by
//! many contacts, several looping sources and listeners, timed per tick.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::{
    EngineDoc, EventDoc, EventKindDoc, ListenerDoc, MaterialDoc, ObjectDoc, PropagationDoc, ScenarioDoc, ShapeDoc,
    SourceDoc, SourceKindDoc, TemplateDoc,
};
use crate::engine::TimingStats;
use crate::propagation::{HookRegistry, Strategy};
use crate::real::Real;
use crate::scenario::{Scenario, ScenarioError};
use crate::template::{SynthSpec, Waveform};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub objects: usize,
    /// Contact pairs; each adds two graph nodes.
    pub contacts: usize,
    pub sources: usize,
    pub listeners: usize,
    pub ticks: u64,
    pub strategy: Strategy,
    pub workers: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    /// 100 objects and 500 nodes (480 contact nodes plus 10 sources and
    /// 10 listeners).
    fn default() -> Self {
        Self {
            objects: 100,
            contacts: 240,
            sources: 10,
            listeners: 10,
            ticks: 500,
            strategy: Strategy::Dijkstra,
            workers: 1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub objects: usize,
    pub nodes: usize,
    pub edges: usize,
    pub sources: usize,
    pub listeners: usize,
    pub ticks: u64,
    pub timing: TimingStats,
    pub wall_seconds: f64,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        format!(
            "objects {}  nodes {}  edges {}  sources {}  listeners {}  ticks {}\n\
             tick time (ms): mean {:.4}  p50 {:.4}  p90 {:.4}  p99 {:.4}  max {:.4}\n\
             wall time {:.3} s",
            self.objects,
            self.nodes,
            self.edges,
            self.sources,
            self.listeners,
            self.ticks,
            self.timing.mean_ms,
            self.timing.p50_ms,
            self.timing.p90_ms,
            self.timing.p99_ms,
            self.timing.max_ms,
            self.wall_seconds
        )
    }
}

/// Objects sit on a square grid (1 m pitch); neighbouring objects are
/// chained first, remaining contacts join random pairs.
pub fn bench_document(cfg: &BenchConfig) -> ScenarioDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = (cfg.objects as f64).sqrt().ceil().max(1.0) as usize;
    let pos = |i: usize| [(i % side) as f64, (i / side) as f64, 0.0];
    let mut doc = ScenarioDoc {
        engine: Some(EngineDoc {
            duration: cfg.ticks as f64 / 100.0,
            seed: cfg.seed,
            workers: cfg.workers,
            propagation: PropagationDoc {
                strategy: match cfg.strategy {
                    Strategy::Bfs => "bfs".into(),
                    Strategy::Dijkstra => "dijkstra".into(),
                },
                ..PropagationDoc::default()
            },
            ..EngineDoc::default()
        }),
        ..ScenarioDoc::default()
    };
    for i in 0..cfg.objects {
        let m = format!("m{i}");
        doc.materials.insert(
            m.clone(),
            MaterialDoc {
                kappa: rng.gen_range(0.0..0.3),
                rho: rng.gen_range(0.5..1.0),
                extra: Default::default(),
            },
        );
        doc.objects.push(ObjectDoc {
            id: format!("o{i}"),
            material: m,
            position: pos(i),
            orientation: [1.0, 0.0, 0.0, 0.0],
            mass: 1.0,
            unbounded: false,
            detect: false,
            shape: Some(ShapeDoc::Sphere { radius: 0.5 }),
            motion: None,
            modulation: None,
        });
    }
    let mut pairs = Vec::new();
    for i in 1..cfg.objects.min(cfg.contacts + 1) {
        pairs.push((i - 1, i));
    }
    let mut next_index: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    while pairs.len() < cfg.contacts && cfg.objects > 1 {
        let a = rng.gen_range(0..cfg.objects);
        let b = rng.gen_range(0..cfg.objects);
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    for (a, b) in pairs {
        let slot = next_index.entry((a, b)).or_insert(0);
        let index = *slot;
        *slot += 1;
        let (pa, pb) = (pos(a), pos(b));
        let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0, 0.0];
        doc.events.push(EventDoc {
            time: 0.0,
            kind: EventKindDoc::Begin,
            a: format!("o{a}"),
            b: format!("o{b}"),
            point: Some(mid),
            index,
            m1: None,
            v1: None,
            m2: None,
            v2: None,
        });
    }
    doc.templates.push(TemplateDoc {
        id: "noise".into(),
        path: None,
        sample_rate: Some(crate::signal::DEFAULT_SAMPLE_RATE),
        samples: None,
        synth: Some(SynthSpec {
            waveform: Waveform::Noise,
            frequency: 0.0,
            duration: 1.0,
            attack: 0.0,
            decay: 0.0,
            envelope: Vec::new(),
            seed: cfg.seed,
        }),
    });
    // Sources and listeners on distinct objects spread over the grid.
    let stride = (cfg.objects / (cfg.sources + cfg.listeners).max(1)).max(1);
    for k in 0..cfg.sources {
        doc.sources.push(SourceDoc {
            id: format!("s{k}"),
            kind: SourceKindDoc::Persistent,
            object: format!("o{}", (2 * k * stride) % cfg.objects),
            template: "noise".into(),
            position: [0.0, 0.0, 0.2],
            looping: true,
        });
    }
    for k in 0..cfg.listeners {
        doc.listeners.push(ListenerDoc {
            id: format!("l{k}"),
            body_part: "pad".into(),
            object: format!("o{}", ((2 * k + 1) * stride) % cfg.objects),
            position: [0.0, 0.0, 0.2],
            radius: 0.05,
        });
    }
    doc
}

pub fn run_bench<T: Real>(cfg: &BenchConfig) -> Result<BenchReport, ScenarioError> {
    let started = Instant::now();
    let doc = bench_document(cfg);
    let mut scenario = Scenario::<T>::from_doc(&doc, Path::new("."))?;
    scenario.config.check_invariants = false;
    let mut engine = scenario.engine(HookRegistry::new())?;
    engine.run_ticks(cfg.ticks)?;
    let graph = engine.graph();
    Ok(BenchReport {
        objects: graph.object_count(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        sources: engine.sources().len(),
        listeners: engine.listener_nodes().len(),
        ticks: cfg.ticks,
        timing: TimingStats::from_seconds(engine.tick_seconds()),
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bench_has_the_target_size() {
        let cfg = BenchConfig {
            ticks: 3,
            ..BenchConfig::default()
        };
        let r = run_bench::<f64>(&cfg).unwrap();
        assert_eq!(r.objects, 100);
        assert_eq!(r.nodes, 500);
        assert_eq!((r.sources, r.listeners), (10, 10));
    }
}
