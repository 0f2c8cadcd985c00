//! Static scene description: materials, objects, sources, listeners and
//! templates, validated on load.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::document::{
    self, ListenerDoc, MaterialDoc, MotionDoc, ObjectDoc, ParseError, ScenarioDoc, ShapeDoc,
    SourceDoc, SourceKindDoc, TemplateDoc,
};
use crate::geometry::{Pose, Quat, Vec3};
use crate::propagation::ModulationFn;
use crate::real::Real;
use crate::template::{SignalTemplate, TemplateError, TemplateRegistry, TemplateSource};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown {what} '{id}'")]
    Reference { what: &'static str, id: String },
    #[error("{field} = {value} is out of range: {expected}")]
    Range {
        field: String,
        value: f64,
        expected: &'static str,
    },
    #[error("duplicate {what} '{id}'")]
    Duplicate { what: &'static str, id: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

fn range(field: impl Into<String>, value: f64, expected: &'static str) -> SceneError {
    SceneError::Range {
        field: field.into(),
        value,
        expected,
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Position of an object in [`Scene::objects`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectIndex(pub u32);

impl ObjectIndex {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HapticMaterial<T> {
    /// Vibrotactile transmissibility, in `[0, 1]`.
    pub kappa: T,
    /// Density coefficient, `> 0`.
    pub rho: T,
    /// Designer-defined properties, carried for custom modulation hooks.
    pub extra: BTreeMap<String, T>,
}

impl<T: Real> HapticMaterial<T> {
    pub fn new(kappa: T, rho: T) -> Self {
        Self {
            kappa,
            rho,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape<T> {
    Sphere { radius: T },
    /// Solid half-space `normal · p <= offset`.
    Plane { normal: Vec3<T>, offset: T },
    Box { half_extents: Vec3<T> },
}

impl<T: Real> Shape<T> {
    /// Radius of a sphere enclosing the shape, `None` for unbounded planes.
    pub fn bounding_radius(&self) -> Option<T> {
        match self {
            Shape::Sphere { radius } => Some(*radius),
            Shape::Box { half_extents } => Some(half_extents.norm()),
            Shape::Plane { .. } => None,
        }
    }

    /// Signed distance from `world` to the surface of this shape placed at
    /// `pose` (negative inside).
    pub fn signed_distance(&self, pose: &Pose<T>, world: Vec3<T>) -> T {
        match self {
            Shape::Sphere { radius } => world.distance(pose.position) - *radius,
            Shape::Plane { normal, offset } => {
                let n = pose.orientation.rotate(*normal);
                let off = *offset + n.dot(pose.position);
                n.dot(world) - off
            }
            Shape::Box { half_extents } => {
                let local = pose.inverse_transform_point(world);
                let q = local.map(|c| c.abs()) - *half_extents;
                let outside = q.map(|c| c.max(T::zero())).norm();
                let inside = q.x.max(q.y).max(q.z).min(T::zero());
                outside + inside
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Motion<T> {
    Static,
    /// Constant velocity between `start` and `stop`.
    Linear {
        velocity: Vec3<T>,
        start: T,
        stop: Option<T>,
    },
    /// Free fall under scene gravity starting at `start`.
    Ballistic { velocity: Vec3<T>, start: T },
    /// Piecewise-linear world positions.
    Keyframes { times: Vec<T>, positions: Vec<Vec3<T>> },
}

impl<T: Real> Motion<T> {
    pub fn is_static(&self) -> bool {
        matches!(self, Motion::Static)
    }

    /// World position at `t` for an object whose rest position is `origin`.
    pub fn position_at(&self, origin: Vec3<T>, t: T, gravity: Vec3<T>) -> Vec3<T> {
        match self {
            Motion::Static => origin,
            Motion::Linear {
                velocity,
                start,
                stop,
            } => {
                let mut tt = t.max(*start);
                if let Some(stop) = stop {
                    tt = tt.min(*stop);
                }
                origin + *velocity * (tt - *start)
            }
            Motion::Ballistic { velocity, start } => {
                let tau = (t - *start).max(T::zero());
                origin + *velocity * tau + gravity * (T::lit(0.5) * tau * tau)
            }
            Motion::Keyframes { times, positions } => {
                if t <= times[0] {
                    return positions[0];
                }
                for i in 1..times.len() {
                    if t <= times[i] {
                        let span = times[i] - times[i - 1];
                        if span <= T::zero() {
                            return positions[i];
                        }
                        let f = (t - times[i - 1]) / span;
                        return positions[i - 1] + (positions[i] - positions[i - 1]) * f;
                    }
                }
                positions[positions.len() - 1]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HapticObject<T> {
    pub id: String,
    /// Key into [`Scene::materials`].
    pub material: String,
    pub shape: Option<Shape<T>>,
    /// Rest pose (at `t = 0` for moving objects).
    pub pose: Pose<T>,
    pub mass: T,
    /// Abstract volume such as air: never collision-tested.
    pub is_unbounded: bool,
    /// Whether the built-in detector tests this object.
    pub detect: bool,
    pub motion: Motion<T>,
    /// Per-object override of the intra-connection function.
    pub modulation: Option<ModulationFn<T>>,
}

impl<T: Real> HapticObject<T> {
    pub fn pose_at(&self, t: T, gravity: Vec3<T>) -> Pose<T> {
        Pose {
            position: self.motion.position_at(self.pose.position, t, gravity),
            orientation: self.pose.orientation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Persistent { looping: bool },
    /// Spawns a temporary source when its object takes part in a collision
    /// above the energy threshold.
    TemporaryRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec<T> {
    pub id: String,
    pub kind: SourceKind,
    pub object: String,
    pub local_position: Vec3<T>,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListenerSpec<T> {
    pub id: String,
    pub body_part: String,
    pub object: String,
    pub local_position: Vec3<T>,
    pub bound_radius: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub gravity: Vec3<T>,
    pub materials: BTreeMap<String, HapticMaterial<T>>,
    pub objects: Vec<HapticObject<T>>,
    pub sources: Vec<SourceSpec<T>>,
    pub listeners: Vec<ListenerSpec<T>>,
    pub templates: TemplateRegistry<T>,
    index: BTreeMap<String, ObjectIndex>,
}

/// Parses and validates a scene document. File templates resolve against
/// `base_dir`.
pub fn load_scene<T: Real>(text: &str, base_dir: &Path) -> Result<Scene<T>, SceneError> {
    let doc = document::parse_document(text)?;
    Scene::from_doc(&doc, base_dir)
}

fn finite(field: &str, v: f64) -> Result<f64, SceneError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(range(field, v, "must be finite"))
    }
}

fn vec3<T: Real>(field: &str, a: [f64; 3]) -> Result<Vec3<T>, SceneError> {
    for v in a {
        finite(field, v)?;
    }
    Ok(Vec3::from_array(a))
}

fn unit_check(field: &str, norm: f64) -> Result<(), SceneError> {
    if (norm - 1.0).abs() > 1e-6 {
        return Err(range(field, norm, "norm must be 1 (within 1e-6)"));
    }
    Ok(())
}

impl<T: Real> Scene<T> {
    pub fn from_doc(doc: &ScenarioDoc, base_dir: &Path) -> Result<Self, SceneError> {
        let gravity: Vec3<T> = vec3("gravity", doc.gravity)?;

        let mut materials = BTreeMap::new();
        for (name, m) in &doc.materials {
            materials.insert(name.clone(), material_from_doc(name, m)?);
        }

        let mut index = BTreeMap::new();
        let mut objects = Vec::with_capacity(doc.objects.len());
        for (i, o) in doc.objects.iter().enumerate() {
            if index.insert(o.id.clone(), ObjectIndex(i as u32)).is_some() {
                return Err(SceneError::Duplicate {
                    what: "object",
                    id: o.id.clone(),
                });
            }
            if !materials.contains_key(&o.material) {
                return Err(SceneError::Reference {
                    what: "material",
                    id: o.material.clone(),
                });
            }
            objects.push(object_from_doc(o)?);
        }

        let mut templates = TemplateRegistry::new();
        for t in &doc.templates {
            if templates.contains(&t.id) {
                return Err(SceneError::Duplicate {
                    what: "template",
                    id: t.id.clone(),
                });
            }
            templates.insert(SignalTemplate::load(&t.id, template_source(t)?, base_dir)?)?;
        }

        let mut scene = Scene {
            gravity,
            materials,
            objects,
            sources: Vec::new(),
            listeners: Vec::new(),
            templates,
            index,
        };

        let mut source_ids = BTreeSet::new();
        for s in &doc.sources {
            if !source_ids.insert(s.id.clone()) {
                return Err(SceneError::Duplicate {
                    what: "source",
                    id: s.id.clone(),
                });
            }
            scene.require_object(&s.object)?;
            if !scene.templates.contains(&s.template) {
                return Err(SceneError::Reference {
                    what: "template",
                    id: s.template.clone(),
                });
            }
            let kind = match s.kind {
                SourceKindDoc::Persistent => SourceKind::Persistent { looping: s.looping },
                SourceKindDoc::Temporary if s.looping => {
                    return Err(invalid(format!("sources.{}.loop", s.id), "only persistent sources loop"))
                }
                SourceKindDoc::Temporary => SourceKind::TemporaryRule,
            };
            scene.sources.push(SourceSpec {
                id: s.id.clone(),
                kind,
                object: s.object.clone(),
                local_position: vec3(&format!("sources.{}.position", s.id), s.position)?,
                template: s.template.clone(),
            });
        }

        if doc.listeners.is_empty() {
            return Err(invalid("listeners", "a scene needs at least one listener"));
        }
        let mut listener_ids = BTreeSet::new();
        let mut parts = BTreeSet::new();
        for l in &doc.listeners {
            if !listener_ids.insert(l.id.clone()) {
                return Err(SceneError::Duplicate {
                    what: "listener",
                    id: l.id.clone(),
                });
            }
            let obj = scene.require_object(&l.object)?;
            if !parts.insert((l.object.clone(), l.body_part.clone())) {
                return Err(SceneError::Duplicate {
                    what: "body part",
                    id: format!("{}/{}", l.object, l.body_part),
                });
            }
            let radius = finite(&format!("listeners.{}.radius", l.id), l.radius)?;
            if radius <= 0.0 {
                return Err(range(format!("listeners.{}.radius", l.id), radius, "must be > 0"));
            }
            let local = vec3(&format!("listeners.{}.position", l.id), l.position)?;
            let object = &scene.objects[obj.get()];
            if !object.is_unbounded {
                if let Some(shape) = &object.shape {
                    let world = object.pose.transform_point(local);
                    let d = shape.signed_distance(&object.pose, world);
                    if d > T::lit(radius) + T::lit(1e-9) {
                        return Err(invalid(
                            format!("listeners.{}.position", l.id),
                            format!(
                                "lies {} m outside object '{}' (bound radius {})",
                                d.as_f64(),
                                l.object,
                                radius
                            ),
                        ));
                    }
                }
            }
            scene.listeners.push(ListenerSpec {
                id: l.id.clone(),
                body_part: l.body_part.clone(),
                object: l.object.clone(),
                local_position: local,
                bound_radius: T::lit(radius),
            });
        }
        Ok(scene)
    }

    pub fn to_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            gravity: self.gravity.to_array(),
            engine: None,
            materials: self
                .materials
                .iter()
                .map(|(k, m)| {
                    (
                        k.clone(),
                        MaterialDoc {
                            kappa: m.kappa.as_f64(),
                            rho: m.rho.as_f64(),
                            extra: m.extra.iter().map(|(k, v)| (k.clone(), v.as_f64())).collect(),
                        },
                    )
                })
                .collect(),
            objects: self.objects.iter().map(object_to_doc).collect(),
            templates: self.templates.iter().map(template_to_doc).collect(),
            sources: self
                .sources
                .iter()
                .map(|s| SourceDoc {
                    id: s.id.clone(),
                    kind: match s.kind {
                        SourceKind::Persistent { .. } => SourceKindDoc::Persistent,
                        SourceKind::TemporaryRule => SourceKindDoc::Temporary,
                    },
                    object: s.object.clone(),
                    template: s.template.clone(),
                    position: s.local_position.to_array(),
                    looping: matches!(s.kind, SourceKind::Persistent { looping: true }),
                })
                .collect(),
            listeners: self
                .listeners
                .iter()
                .map(|l| ListenerDoc {
                    id: l.id.clone(),
                    body_part: l.body_part.clone(),
                    object: l.object.clone(),
                    position: l.local_position.to_array(),
                    radius: l.bound_radius.as_f64(),
                })
                .collect(),
            events: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> String {
        document::render_document(&self.to_doc())
    }

    pub fn object_index(&self, id: &str) -> Option<ObjectIndex> {
        self.index.get(id).copied()
    }

    pub fn require_object(&self, id: &str) -> Result<ObjectIndex, SceneError> {
        self.object_index(id).ok_or_else(|| SceneError::Reference {
            what: "object",
            id: id.to_string(),
        })
    }

    pub fn object(&self, index: ObjectIndex) -> &HapticObject<T> {
        &self.objects[index.get()]
    }

    pub fn material_of(&self, index: ObjectIndex) -> &HapticMaterial<T> {
        &self.materials[&self.object(index).material]
    }

    /// Rest-pose world position of a point given in object coordinates.
    pub fn world_position(&self, object: &str, local: Vec3<T>) -> Result<Vec3<T>, SceneError> {
        let idx = self.require_object(object)?;
        Ok(self.object(idx).pose.transform_point(local))
    }

    /// Poses of every object at time `t`.
    pub fn poses_at(&self, t: T) -> Vec<Pose<T>> {
        self.objects.iter().map(|o| o.pose_at(t, self.gravity)).collect()
    }
}

fn material_from_doc<T: Real>(name: &str, m: &MaterialDoc) -> Result<HapticMaterial<T>, SceneError> {
    let kappa = finite(&format!("materials.{name}.kappa"), m.kappa)?;
    if !(0.0..=1.0).contains(&kappa) {
        return Err(range(format!("materials.{name}.kappa"), kappa, "must lie in [0, 1]"));
    }
    let rho = finite(&format!("materials.{name}.rho"), m.rho)?;
    if rho <= 0.0 {
        return Err(range(format!("materials.{name}.rho"), rho, "must be > 0"));
    }
    let mut extra = BTreeMap::new();
    for (k, v) in &m.extra {
        extra.insert(k.clone(), T::lit(finite(&format!("materials.{name}.extra.{k}"), *v)?));
    }
    Ok(HapticMaterial {
        kappa: T::lit(kappa),
        rho: T::lit(rho),
        extra,
    })
}

fn object_from_doc<T: Real>(o: &ObjectDoc) -> Result<HapticObject<T>, SceneError> {
    let f = |name: &str| format!("objects.{}.{}", o.id, name);
    let mass = finite(&f("mass"), o.mass)?;
    if mass < 0.0 {
        return Err(range(f("mass"), mass, "must be >= 0"));
    }
    for v in o.orientation {
        finite(&f("orientation"), v)?;
    }
    let qn = o.orientation.iter().map(|v| v * v).sum::<f64>().sqrt();
    unit_check(&f("orientation"), qn)?;
    let pose = Pose {
        position: vec3(&f("position"), o.position)?,
        orientation: Quat::from_wxyz(o.orientation),
    };
    let shape = match &o.shape {
        None => None,
        Some(ShapeDoc::Sphere { radius }) => {
            let r = finite(&f("shape.radius"), *radius)?;
            if r <= 0.0 {
                return Err(range(f("shape.radius"), r, "must be > 0"));
            }
            Some(Shape::Sphere { radius: T::lit(r) })
        }
        Some(ShapeDoc::Plane { normal, offset }) => {
            let n: Vec3<T> = vec3(&f("shape.normal"), *normal)?;
            unit_check(&f("shape.normal"), n.norm().as_f64())?;
            Some(Shape::Plane {
                normal: n,
                offset: T::lit(finite(&f("shape.offset"), *offset)?),
            })
        }
        Some(ShapeDoc::Box { half_extents }) => {
            let h: Vec3<T> = vec3(&f("shape.half_extents"), *half_extents)?;
            for c in [h.x, h.y, h.z] {
                if c <= T::zero() {
                    return Err(range(f("shape.half_extents"), c.as_f64(), "must be > 0"));
                }
            }
            Some(Shape::Box { half_extents: h })
        }
    };
    if shape.is_none() && !o.unbounded {
        return Err(invalid(f("shape"), "bounded objects need a shape"));
    }
    let motion = match &o.motion {
        None => Motion::Static,
        Some(MotionDoc::Linear {
            velocity,
            start,
            stop,
        }) => {
            let start = finite(&f("motion.start"), *start)?;
            if let Some(stop) = stop {
                if finite(&f("motion.stop"), *stop)? < start {
                    return Err(range(f("motion.stop"), *stop, "must be >= motion.start"));
                }
            }
            Motion::Linear {
                velocity: vec3(&f("motion.velocity"), *velocity)?,
                start: T::lit(start),
                stop: stop.map(T::lit),
            }
        }
        Some(MotionDoc::Ballistic { velocity, start }) => Motion::Ballistic {
            velocity: vec3(&f("motion.velocity"), *velocity)?,
            start: T::lit(finite(&f("motion.start"), *start)?),
        },
        Some(MotionDoc::Keyframes { times, positions }) => {
            if times.is_empty() || times.len() != positions.len() {
                return Err(invalid(f("motion"), "keyframes need matching, non-empty times and positions"));
            }
            if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite()) {
                return Err(invalid(f("motion.times"), "must be finite and nondecreasing"));
            }
            Motion::Keyframes {
                times: times.iter().map(|&t| T::lit(t)).collect(),
                positions: positions
                    .iter()
                    .map(|p| vec3(&f("motion.positions"), *p))
                    .collect::<Result<_, _>>()?,
            }
        }
    };
    let modulation = match &o.modulation {
        None => None,
        Some(m) => Some(ModulationFn::from_doc(m).map_err(|e| invalid(f("modulation"), e.to_string()))?),
    };
    Ok(HapticObject {
        id: o.id.clone(),
        material: o.material.clone(),
        shape,
        pose,
        mass: T::lit(mass),
        is_unbounded: o.unbounded,
        detect: o.detect,
        motion,
        modulation,
    })
}

fn object_to_doc<T: Real>(o: &HapticObject<T>) -> ObjectDoc {
    ObjectDoc {
        id: o.id.clone(),
        material: o.material.clone(),
        position: o.pose.position.to_array(),
        orientation: o.pose.orientation.to_wxyz(),
        mass: o.mass.as_f64(),
        unbounded: o.is_unbounded,
        detect: o.detect,
        shape: o.shape.as_ref().map(|s| match s {
            Shape::Sphere { radius } => ShapeDoc::Sphere {
                radius: radius.as_f64(),
            },
            Shape::Plane { normal, offset } => ShapeDoc::Plane {
                normal: normal.to_array(),
                offset: offset.as_f64(),
            },
            Shape::Box { half_extents } => ShapeDoc::Box {
                half_extents: half_extents.to_array(),
            },
        }),
        motion: match &o.motion {
            Motion::Static => None,
            Motion::Linear {
                velocity,
                start,
                stop,
            } => Some(MotionDoc::Linear {
                velocity: velocity.to_array(),
                start: start.as_f64(),
                stop: stop.map(|s| s.as_f64()),
            }),
            Motion::Ballistic { velocity, start } => Some(MotionDoc::Ballistic {
                velocity: velocity.to_array(),
                start: start.as_f64(),
            }),
            Motion::Keyframes { times, positions } => Some(MotionDoc::Keyframes {
                times: times.iter().map(|t| t.as_f64()).collect(),
                positions: positions.iter().map(|p| p.to_array()).collect(),
            }),
        },
        modulation: o.modulation.as_ref().map(ModulationFn::to_doc),
    }
}

fn template_source(t: &TemplateDoc) -> Result<TemplateSource, SceneError> {
    let count = t.path.is_some() as u8 + t.samples.is_some() as u8 + t.synth.is_some() as u8;
    if count != 1 {
        return Err(invalid(
            format!("templates.{}", t.id),
            "exactly one of path, samples or synth is required",
        ));
    }
    let rate = t.sample_rate.unwrap_or(crate::signal::DEFAULT_SAMPLE_RATE);
    if rate == 0 {
        return Err(range(format!("templates.{}.sample_rate", t.id), 0.0, "must be > 0"));
    }
    Ok(if let Some(p) = &t.path {
        TemplateSource::File(PathBuf::from(p))
    } else if let Some(samples) = &t.samples {
        TemplateSource::Inline {
            samples: samples.clone(),
            sample_rate: rate,
        }
    } else {
        TemplateSource::Synth {
            spec: t.synth.clone().expect("checked above"),
            sample_rate: rate,
        }
    })
}

fn template_to_doc<T: Real>(t: &SignalTemplate<T>) -> TemplateDoc {
    let mut doc = TemplateDoc {
        id: t.id.clone(),
        path: None,
        sample_rate: None,
        samples: None,
        synth: None,
    };
    match &t.source {
        TemplateSource::File(p) => doc.path = Some(p.to_string_lossy().into_owned()),
        TemplateSource::Inline {
            samples,
            sample_rate,
        } => {
            doc.samples = Some(samples.clone());
            doc.sample_rate = Some(*sample_rate);
        }
        TemplateSource::Synth { spec, sample_rate } => {
            doc.synth = Some(spec.clone());
            doc.sample_rate = Some(*sample_rate);
        }
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[materials.flesh]
kappa = 0.3
rho = 0.9

[[objects]]
id = "avatar"
material = "flesh"
shape = { kind = "box", half_extents = [0.2, 0.2, 0.5] }

[[listeners]]
id = "chest"
body_part = "chest"
object = "avatar"
radius = 0.05
"#;

    fn load(text: &str) -> Result<Scene<f64>, SceneError> {
        load_scene(text, Path::new("."))
    }

    #[test]
    fn minimal_scene_loads() {
        let s = load(MINIMAL).unwrap();
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.listeners.len(), 1);
        assert_eq!(s.sources.len(), 0);
    }

    #[test]
    fn kappa_out_of_range_names_the_field() {
        let text = MINIMAL.replace("kappa = 0.3", "kappa = 1.5");
        match load(&text) {
            Err(SceneError::Range { field, value, .. }) => {
                assert!(field.ends_with("kappa"), "{field}");
                assert_eq!(value, 1.5);
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_reference_names_the_id() {
        let text = MINIMAL.replace("object = \"avatar\"", "object = \"ghost\"");
        match load(&text) {
            Err(SceneError::Reference { what, id }) => {
                assert_eq!((what, id.as_str()), ("object", "ghost"));
            }
            other => panic!("expected reference error, got {other:?}"),
        }
    }

    #[test]
    fn scene_without_listeners_is_rejected() {
        let text = MINIMAL.split("[[listeners]]").next().unwrap().to_string();
        assert!(matches!(load(&text), Err(SceneError::Invalid { .. })));
    }

    #[test]
    fn listener_outside_its_object_is_rejected() {
        let text = MINIMAL.replace("radius = 0.05", "radius = 0.05\nposition = [3.0, 0.0, 0.0]");
        assert!(matches!(load(&text), Err(SceneError::Invalid { field, .. }) if field.contains("chest")));
    }

    #[test]
    fn parse_error_reports_position() {
        match load("[[objects]]\nid = 3 3\n") {
            Err(SceneError::Parse(p)) => assert_eq!(p.line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn world_position_examples() {
        let mut s = load(MINIMAL).unwrap();
        let p = s.world_position("avatar", Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(p, Vec3::new(1.0, 0.0, 0.0));
        s.objects[0].pose.position = Vec3::new(0.0, 0.0, 5.0);
        assert_eq!(s.world_position("avatar", Vec3::new(1.0, 0.0, 0.0)).unwrap(), Vec3::new(1.0, 0.0, 5.0));
        s.objects[0].pose.orientation = Quat::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        s.objects[0].pose.position = Vec3::zero();
        let p = s.world_position("avatar", Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((p - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-9);
        assert!(s.world_position("nope", Vec3::zero()).is_err());
    }

    #[test]
    fn motion_paths() {
        let g = Vec3::new(0.0, 0.0, -10.0);
        let o = Vec3::new(0.0, 0.0, 5.0);
        let m = Motion::Ballistic {
            velocity: Vec3::zero(),
            start: 0.0,
        };
        assert_eq!(m.position_at(o, 1.0, g), Vec3::new(0.0, 0.0, 0.0));
        let m = Motion::Linear {
            velocity: Vec3::new(1.0, 0.0, 0.0),
            start: 1.0,
            stop: Some(2.0),
        };
        assert_eq!(m.position_at(o, 0.5, g).x, 0.0);
        assert_eq!(m.position_at(o, 5.0, g).x, 1.0);
        let m = Motion::Keyframes {
            times: vec![0.0, 2.0],
            positions: vec![Vec3::zero(), Vec3::new(2.0, 0.0, 0.0)],
        };
        assert_eq!(m.position_at(o, 1.0, g).x, 1.0);
    }

    #[test]
    fn box_signed_distance() {
        let s = Shape::Box {
            half_extents: Vec3::new(1.0, 1.0, 1.0),
        };
        let p = Pose::identity();
        assert_eq!(s.signed_distance(&p, Vec3::new(3.0, 0.0, 0.0)), 2.0);
        assert_eq!(s.signed_distance(&p, Vec3::new(0.5, 0.0, 0.0)), -0.5);
    }
}
