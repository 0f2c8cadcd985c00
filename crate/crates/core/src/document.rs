//! Serde mirror of the scenario document (TOML).
//!
//! Every section is optional so the same types read scene files, timeline
//! files and full scenario files. Values are `f64` here and converted to
//! the engine scalar during validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::template::SynthSpec;

/// Document-level parse failure with a 1-based position.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn from_toml(text: &str, err: toml::de::Error) -> Self {
        let (line, column) = match err.span() {
            Some(span) => line_col(text, span.start),
            None => (1, 1),
        };
        Self {
            line,
            column,
            message: err.message().to_string(),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

pub fn parse_document(text: &str) -> Result<ScenarioDoc, ParseError> {
    toml::from_str(text).map_err(|e| ParseError::from_toml(text, e))
}

pub fn render_document(doc: &ScenarioDoc) -> String {
    toml::to_string(doc).expect("scenario documents always serialize")
}

fn default_gravity() -> [f64; 3] {
    [0.0, 0.0, -9.81]
}

fn zero3() -> [f64; 3] {
    [0.0; 3]
}

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn yes() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn is_zero3(v: &[f64; 3]) -> bool {
    *v == [0.0; 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineDoc>,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialDoc>,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    #[serde(default)]
    pub templates: Vec<TemplateDoc>,
    #[serde(default)]
    pub sources: Vec<SourceDoc>,
    #[serde(default)]
    pub listeners: Vec<ListenerDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventDoc>,
}

impl Default for ScenarioDoc {
    fn default() -> Self {
        Self {
            gravity: default_gravity(),
            engine: None,
            materials: BTreeMap::new(),
            objects: Vec::new(),
            templates: Vec::new(),
            sources: Vec::new(),
            listeners: Vec::new(),
            events: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDoc {
    pub kappa: f64,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeDoc {
    Sphere { radius: f64 },
    Plane { normal: [f64; 3], offset: f64 },
    Box { half_extents: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MotionDoc {
    Linear {
        velocity: [f64; 3],
        #[serde(default)]
        start: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stop: Option<f64>,
    },
    Ballistic {
        #[serde(default = "zero3")]
        velocity: [f64; 3],
        #[serde(default)]
        start: f64,
    },
    Keyframes {
        times: Vec<f64>,
        positions: Vec<[f64; 3]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModulationDoc {
    Identity,
    Constant { gain: f64 },
    Linear { slope: f64 },
    Exponential { alpha: f64 },
    Material {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Distance {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Custom { name: String },
}

pub(crate) fn default_epsilon() -> f64 {
    0.1
}

pub(crate) fn default_alpha() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: String,
    pub material: String,
    #[serde(default = "zero3")]
    pub position: [f64; 3],
    #[serde(default = "identity_quat")]
    pub orientation: [f64; 4],
    #[serde(default)]
    pub mass: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unbounded: bool,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub detect: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<MotionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDoc {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKindDoc {
    Persistent,
    Temporary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDoc {
    pub id: String,
    pub kind: SourceKindDoc,
    pub object: String,
    pub template: String,
    #[serde(default = "zero3", skip_serializing_if = "is_zero3")]
    pub position: [f64; 3],
    #[serde(default, rename = "loop", skip_serializing_if = "is_false")]
    pub looping: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListenerDoc {
    pub id: String,
    pub body_part: String,
    pub object: String,
    #[serde(default = "zero3")]
    pub position: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKindDoc {
    Begin,
    End,
    Impulse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDoc {
    pub time: f64,
    pub kind: EventKindDoc,
    pub a: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "is_zero_u32")]
    pub index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v2: Option<f64>,
}

fn is_zero_u32(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationDoc {
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_max_hops")]
    pub max_hops: usize,
    #[serde(default = "default_gain_floor")]
    pub gain_floor: f64,
    #[serde(default = "default_intra")]
    pub intra: ModulationDoc,
    #[serde(default = "default_inter")]
    pub inter: ModulationDoc,
}

fn default_strategy() -> String {
    "dijkstra".into()
}
fn default_max_hops() -> usize {
    16
}
fn default_gain_floor() -> f64 {
    0.01
}
fn default_intra() -> ModulationDoc {
    ModulationDoc::Material {
        epsilon: default_epsilon(),
    }
}
fn default_inter() -> ModulationDoc {
    ModulationDoc::Identity
}

impl Default for PropagationDoc {
    fn default() -> Self {
        Self {
            strategy: default_strategy(),
            max_hops: default_max_hops(),
            gain_floor: default_gain_floor(),
            intra: default_intra(),
            inter: default_inter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixerDoc {
    #[serde(default = "default_mixer")]
    pub kind: String,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_half_life")]
    pub half_life: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, f64>,
}

fn default_mixer() -> String {
    "cumulative".into()
}
fn default_s_max() -> f64 {
    1.0
}
fn default_half_life() -> f64 {
    2.0
}

impl Default for MixerDoc {
    fn default() -> Self {
        Self {
            kind: default_mixer(),
            s_max: default_s_max(),
            half_life: default_half_life(),
            weights: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineDoc {
    #[serde(default = "default_tick_rate")]
    pub tick_rate: u32,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default = "default_modality")]
    pub modality: String,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_e_max")]
    pub e_max: f64,
    #[serde(default = "default_spawn_threshold")]
    pub spawn_threshold: f64,
    #[serde(default = "default_alpha")]
    pub distance_alpha: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub propagation: PropagationDoc,
    #[serde(default)]
    pub mixer: MixerDoc,
}

fn default_tick_rate() -> u32 {
    100
}
fn default_sample_rate() -> u32 {
    crate::signal::DEFAULT_SAMPLE_RATE
}
fn default_modality() -> String {
    "ht".into()
}
fn default_duration() -> f64 {
    10.0
}
fn default_e_max() -> f64 {
    100.0
}
fn default_spawn_threshold() -> f64 {
    5.0
}
fn default_workers() -> usize {
    1
}

impl Default for EngineDoc {
    fn default() -> Self {
        Self {
            tick_rate: default_tick_rate(),
            sample_rate: default_sample_rate(),
            modality: default_modality(),
            duration: default_duration(),
            seed: 0,
            e_max: default_e_max(),
            spawn_threshold: default_spawn_threshold(),
            distance_alpha: default_alpha(),
            workers: default_workers(),
            propagation: PropagationDoc::default(),
            mixer: MixerDoc::default(),
        }
    }
}
