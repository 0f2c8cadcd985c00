//! Scenario documents: a scene plus engine settings and a contact timeline.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::contact::{ContactError, EventTimeline};
use crate::document::{self, ScenarioDoc};
use crate::engine::{Engine, EngineConfig, EngineError};
use crate::propagation::HookRegistry;
use crate::real::Real;
use crate::scene::{Scene, SceneError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("timeline: {0}")]
    Timeline(#[from] ContactError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub scene: Scene<T>,
    pub timeline: EventTimeline<T>,
    pub config: EngineConfig<T>,
    /// Run length in seconds.
    pub duration: T,
}

impl<T: Real> Scenario<T> {
    pub fn from_doc(doc: &ScenarioDoc, base_dir: &Path) -> Result<Self, ScenarioError> {
        let scene = Scene::from_doc(doc, base_dir)?;
        let timeline = EventTimeline::from_docs(&doc.events)?;
        for e in timeline.events() {
            scene.require_object(&e.object_a)?;
            scene.require_object(&e.object_b)?;
        }
        let engine = doc.engine.clone().unwrap_or_default();
        let config = EngineConfig::from_doc(&engine)?;
        let duration = T::lit(engine.duration);
        crate::engine::ticks_for(duration, config.tick_rate)?;
        Ok(Self {
            scene,
            timeline,
            config,
            duration,
        })
    }

    pub fn engine(&self, hooks: HookRegistry<T>) -> Result<Engine<T>, EngineError> {
        Engine::new(self.scene.clone(), self.timeline.clone(), self.config.clone(), hooks)
    }
}

pub fn load_scenario<T: Real>(text: &str, base_dir: &Path) -> Result<Scenario<T>, ScenarioError> {
    let doc = document::parse_document(text).map_err(SceneError::from)?;
    Scenario::from_doc(&doc, base_dir)
}

pub fn load_scenario_file<T: Real>(path: &Path) -> Result<Scenario<T>, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    load_scenario(&text, base)
}
