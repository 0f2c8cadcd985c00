//! Vibrotactile rendering over a dynamic contact graph.
//!
//! Scene objects exchange vibration through contact points. Each tick the
//! engine updates a graph of source, listener and contact nodes, sends
//! every source frame through it (or through one of the distance-only
//! modalities) and mixes what reaches each listener.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the precision.

pub mod bench;
pub mod contact;
pub mod document;
pub mod engine;
pub mod export;
pub mod geometry;
pub mod graph;
pub mod mixing;
pub mod propagation;
pub mod real;
pub mod report;
pub mod scenario;
pub mod scenarios;
pub mod scene;
pub mod signal;
pub mod template;

pub use real::Real;

pub type Vec3f = geometry::Vec3<f32>;
pub type Vec3d = geometry::Vec3<f64>;
pub type Signal32 = signal::HapticSignal<f32>;
pub type Signal64 = signal::HapticSignal<f64>;
pub type Scene32 = scene::Scene<f32>;
pub type Scene64 = scene::Scene<f64>;
pub type Graph32 = graph::HapticGraph<f32>;
pub type Graph64 = graph::HapticGraph<f64>;
pub type Network32 = propagation::PropagationNetwork<f32>;
pub type Network64 = propagation::PropagationNetwork<f64>;
pub type Engine32 = engine::Engine<f32>;
pub type Engine64 = engine::Engine<f64>;
pub type Scenario32 = scenario::Scenario<f32>;
pub type Scenario64 = scenario::Scenario<f64>;
