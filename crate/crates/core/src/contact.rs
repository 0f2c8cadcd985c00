//! Contact events: scripted timelines and a small kinematic detector.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::document::{self, EventDoc, EventKindDoc, ParseError};
use crate::geometry::{Pose, Vec3};
use crate::real::Real;
use crate::scene::{ObjectIndex, Scene, Shape};

/// Default kinetic energy (J) a collision must exceed to spawn a temporary source.
pub const DEFAULT_SPAWN_THRESHOLD: f64 = 5.0;

/// Contact index used for pairs found by [`ContactDetector`], so they never
/// collide with scripted contact indices.
pub const DETECTED_CONTACT_INDEX: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("event {position}: {message}")]
    InvalidEvent { position: usize, message: String },
    #[error("contact ({a}, {b}, #{index}): {message}")]
    Nesting {
        a: String,
        b: String,
        index: u32,
        message: &'static str,
    },
    #[error("unsupported shape pair {shape_a}/{shape_b} for objects '{a}' and '{b}'")]
    UnsupportedGeometry {
        a: String,
        b: String,
        shape_a: &'static str,
        shape_b: &'static str,
    },
    #[error("pose state covers {found} objects, scene has {expected}")]
    PoseCount { expected: usize, found: usize },
}

/// `½ m₁ v₁² + ½ m₂ v₂²`.
pub fn collision_energy<T: Real>(mass_a: T, speed_a: T, mass_b: T, speed_b: T) -> Result<T, ContactError> {
    for (name, v) in [("mass_a", mass_a), ("speed_a", speed_a), ("mass_b", mass_b), ("speed_b", speed_b)] {
        if !v.is_finite() || v < T::zero() {
            return Err(ContactError::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
        }
    }
    let half = T::lit(0.5);
    Ok(half * mass_a * speed_a * speed_a + half * mass_b * speed_b * speed_b)
}

/// Strictly above the default threshold.
pub fn should_spawn_temporary<T: Real>(energy: T) -> bool {
    exceeds_threshold(energy, T::lit(DEFAULT_SPAWN_THRESHOLD))
}

pub fn exceeds_threshold<T: Real>(energy: T, threshold: T) -> bool {
    energy > threshold
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactKind<T> {
    Begin,
    End,
    Impulse {
        mass_a: T,
        speed_a: T,
        mass_b: T,
        speed_b: T,
    },
}

impl<T: Real> ContactKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ContactKind::Begin => "begin",
            ContactKind::End => "end",
            ContactKind::Impulse { .. } => "impulse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactEvent<T> {
    pub time: T,
    pub kind: ContactKind<T>,
    pub object_a: String,
    pub object_b: String,
    pub point: Option<Vec3<T>>,
    /// Distinguishes simultaneous contacts between the same two objects.
    pub index: u32,
}

impl<T: Real> ContactEvent<T> {
    /// Unordered pair key used for nesting checks and graph bookkeeping.
    pub fn pair_key(&self) -> (String, String, u32) {
        let (a, b) = if self.object_a <= self.object_b {
            (self.object_a.clone(), self.object_b.clone())
        } else {
            (self.object_b.clone(), self.object_a.clone())
        };
        (a, b, self.index)
    }

    pub fn energy(&self) -> Option<T> {
        match self.kind {
            ContactKind::Impulse {
                mass_a,
                speed_a,
                mass_b,
                speed_b,
            } => collision_energy(mass_a, speed_a, mass_b, speed_b).ok(),
            _ => None,
        }
    }

    pub fn to_doc(&self) -> EventDoc {
        let (kind, m1, v1, m2, v2) = match self.kind {
            ContactKind::Begin => (EventKindDoc::Begin, None, None, None, None),
            ContactKind::End => (EventKindDoc::End, None, None, None, None),
            ContactKind::Impulse {
                mass_a,
                speed_a,
                mass_b,
                speed_b,
            } => (
                EventKindDoc::Impulse,
                Some(mass_a.as_f64()),
                Some(speed_a.as_f64()),
                Some(mass_b.as_f64()),
                Some(speed_b.as_f64()),
            ),
        };
        EventDoc {
            time: self.time.as_f64(),
            kind,
            a: self.object_a.clone(),
            b: self.object_b.clone(),
            point: self.point.map(|p| p.to_array()),
            index: self.index,
            m1,
            v1,
            m2,
            v2,
        }
    }
}

/// Time-sorted, nesting-checked list of scripted contact events.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventTimeline<T> {
    events: Vec<ContactEvent<T>>,
}

impl<T: Real> EventTimeline<T> {
    pub fn empty() -> Self {
        Self { events: Vec::new() }
    }

    /// Sorts (stably) by time and validates Begin/End nesting per pair.
    pub fn new(mut events: Vec<ContactEvent<T>>) -> Result<Self, ContactError> {
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("event times are finite"));
        let mut open = BTreeSet::new();
        for e in &events {
            let key = e.pair_key();
            match e.kind {
                ContactKind::Begin => {
                    if !open.insert(key.clone()) {
                        return Err(ContactError::Nesting {
                            a: key.0,
                            b: key.1,
                            index: key.2,
                            message: "begin while already in contact",
                        });
                    }
                }
                ContactKind::End => {
                    if !open.remove(&key) {
                        return Err(ContactError::Nesting {
                            a: key.0,
                            b: key.1,
                            index: key.2,
                            message: "end without a matching begin",
                        });
                    }
                }
                ContactKind::Impulse { .. } => {}
            }
        }
        Ok(Self { events })
    }

    pub fn from_docs(docs: &[EventDoc]) -> Result<Self, ContactError> {
        let events = docs
            .iter()
            .enumerate()
            .map(|(i, d)| event_from_doc(i, d))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(events)
    }

    pub fn events(&self) -> &[ContactEvent<T>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_docs(&self) -> Vec<EventDoc> {
        self.events.iter().map(ContactEvent::to_doc).collect()
    }
}

/// Parses the `events` section of a document into a validated timeline.
pub fn ingest_timeline<T: Real>(text: &str) -> Result<EventTimeline<T>, ContactError> {
    let doc = document::parse_document(text)?;
    EventTimeline::from_docs(&doc.events)
}

fn event_from_doc<T: Real>(position: usize, d: &EventDoc) -> Result<ContactEvent<T>, ContactError> {
    let bad = |message: String| ContactError::InvalidEvent { position, message };
    if !d.time.is_finite() || d.time < 0.0 {
        return Err(bad(format!("time {} must be finite and >= 0", d.time)));
    }
    if d.a == d.b {
        return Err(bad(format!("object '{}' cannot contact itself", d.a)));
    }
    let point = match d.point {
        Some(p) if p.iter().all(|c| c.is_finite()) => Some(Vec3::from_array(p)),
        Some(_) => return Err(bad("point must be finite".into())),
        None => None,
    };
    let kind = match d.kind {
        EventKindDoc::Begin => ContactKind::Begin,
        EventKindDoc::End => ContactKind::End,
        EventKindDoc::Impulse => {
            let (Some(m1), Some(v1)) = (d.m1, d.v1) else {
                return Err(bad("impulse needs m1 and v1".into()));
            };
            let vals = [m1, v1, d.m2.unwrap_or(0.0), d.v2.unwrap_or(0.0)];
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(bad("impulse masses and speeds must be finite and >= 0".into()));
            }
            ContactKind::Impulse {
                mass_a: T::lit(vals[0]),
                speed_a: T::lit(vals[1]),
                mass_b: T::lit(vals[2]),
                speed_b: T::lit(vals[3]),
            }
        }
    };
    if point.is_none() && !matches!(kind, ContactKind::End) {
        return Err(bad(format!("{} events need a contact point", kind.name())));
    }
    Ok(ContactEvent {
        time: T::lit(d.time),
        kind,
        object_a: d.a.clone(),
        object_b: d.b.clone(),
        point,
        index: d.index,
    })
}

/// Output of one detector step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Detection<T> {
    pub events: Vec<ContactEvent<T>>,
    /// Pairs that stayed in contact, with their current contact point.
    pub persisting: Vec<(ObjectIndex, ObjectIndex, Vec3<T>)>,
}

/// Kinematic overlap detector. Emits Begin (plus an Impulse) when two
/// shapes start overlapping and End when they separate; speeds come from
/// finite differences of consecutive poses.
#[derive(Debug, Clone, Default)]
pub struct ContactDetector<T> {
    active: BTreeSet<(ObjectIndex, ObjectIndex)>,
    previous: Option<Vec<Vec3<T>>>,
}

fn shape_name<T>(s: &Shape<T>) -> &'static str {
    match s {
        Shape::Sphere { .. } => "sphere",
        Shape::Plane { .. } => "plane",
        Shape::Box { .. } => "box",
    }
}

struct Unsupported;

/// Contact point if the two placed shapes overlap.
fn overlap<T: Real>(
    a: &Shape<T>,
    pa: &Pose<T>,
    b: &Shape<T>,
    pb: &Pose<T>,
) -> Result<Option<Vec3<T>>, Unsupported> {
    use Shape::*;
    match (a, b) {
        (Sphere { radius: ra }, Sphere { radius: rb }) => {
            let d = pa.position.distance(pb.position);
            if d > *ra + *rb {
                return Ok(None);
            }
            let w = *ra / (*ra + *rb);
            Ok(Some(pa.position + (pb.position - pa.position) * w))
        }
        (Sphere { radius }, Plane { normal, offset }) => Ok(sphere_plane(pa.position, *radius, *normal, *offset, pb)),
        (Plane { normal, offset }, Sphere { radius }) => Ok(sphere_plane(pb.position, *radius, *normal, *offset, pa)),
        (Sphere { radius }, Box { half_extents }) => Ok(sphere_box(pa.position, *radius, *half_extents, pb)),
        (Box { half_extents }, Sphere { radius }) => Ok(sphere_box(pb.position, *radius, *half_extents, pa)),
        (Box { half_extents }, Plane { normal, offset }) => Ok(box_plane(pa, *half_extents, *normal, *offset, pb)),
        (Plane { normal, offset }, Box { half_extents }) => Ok(box_plane(pb, *half_extents, *normal, *offset, pa)),
        _ => Err(Unsupported),
    }
}

fn world_plane<T: Real>(normal: Vec3<T>, offset: T, pose: &Pose<T>) -> (Vec3<T>, T) {
    let n = pose.orientation.rotate(normal);
    (n, offset + n.dot(pose.position))
}

fn sphere_plane<T: Real>(c: Vec3<T>, r: T, normal: Vec3<T>, offset: T, plane_pose: &Pose<T>) -> Option<Vec3<T>> {
    let (n, off) = world_plane(normal, offset, plane_pose);
    let s = n.dot(c) - off;
    (s <= r).then(|| c - n * s)
}

fn sphere_box<T: Real>(c: Vec3<T>, r: T, h: Vec3<T>, box_pose: &Pose<T>) -> Option<Vec3<T>> {
    let local = box_pose.inverse_transform_point(c);
    let clamped = Vec3::new(
        local.x.max(-h.x).min(h.x),
        local.y.max(-h.y).min(h.y),
        local.z.max(-h.z).min(h.z),
    );
    let closest = box_pose.transform_point(clamped);
    (closest.distance(c) <= r).then_some(closest)
}

fn box_plane<T: Real>(box_pose: &Pose<T>, h: Vec3<T>, normal: Vec3<T>, offset: T, plane_pose: &Pose<T>) -> Option<Vec3<T>> {
    let (n, off) = world_plane(normal, offset, plane_pose);
    let q = box_pose.orientation;
    let axes = [
        q.rotate(Vec3::new(T::one(), T::zero(), T::zero())),
        q.rotate(Vec3::new(T::zero(), T::one(), T::zero())),
        q.rotate(Vec3::new(T::zero(), T::zero(), T::one())),
    ];
    let reach = (0..3).map(|i| h.component(i) * n.dot(axes[i]).abs()).fold(T::zero(), |a, b| a + b);
    let c = box_pose.position;
    let s = n.dot(c) - off;
    (s <= reach).then(|| c - n * s)
}

impl<T: Real> ContactDetector<T> {
    pub fn new() -> Self {
        Self {
            active: BTreeSet::new(),
            previous: None,
        }
    }

    pub fn active_pairs(&self) -> impl Iterator<Item = &(ObjectIndex, ObjectIndex)> {
        self.active.iter()
    }

    /// Tests every pair of bounded, detection-enabled objects at `poses`.
    pub fn detect_contacts(
        &mut self,
        scene: &Scene<T>,
        poses: &[Pose<T>],
        time: T,
        dt: T,
    ) -> Result<Detection<T>, ContactError> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(ContactError::InvalidArgument(format!("dt = {dt} must be > 0")));
        }
        if poses.len() != scene.objects.len() {
            return Err(ContactError::PoseCount {
                expected: scene.objects.len(),
                found: poses.len(),
            });
        }
        let velocity = |i: usize| -> Vec3<T> {
            match &self.previous {
                Some(prev) => (poses[i].position - prev[i]) * (T::one() / dt),
                None => Vec3::zero(),
            }
        };
        let candidates: Vec<usize> = scene
            .objects
            .iter()
            .enumerate()
            .filter(|(_, o)| o.detect && !o.is_unbounded && o.shape.is_some())
            .map(|(i, _)| i)
            .collect();

        let mut out = Detection::default();
        let mut now = BTreeSet::new();
        let mut points = BTreeMap::new();
        for (k, &i) in candidates.iter().enumerate() {
            for &j in &candidates[k + 1..] {
                let (oa, ob) = (&scene.objects[i], &scene.objects[j]);
                let (sa, sb) = (oa.shape.as_ref().unwrap(), ob.shape.as_ref().unwrap());
                if let (Some(ra), Some(rb)) = (sa.bounding_radius(), sb.bounding_radius()) {
                    if poses[i].position.distance(poses[j].position) > ra + rb {
                        continue;
                    }
                }
                let hit = overlap(sa, &poses[i], sb, &poses[j]).map_err(|_| ContactError::UnsupportedGeometry {
                    a: oa.id.clone(),
                    b: ob.id.clone(),
                    shape_a: shape_name(sa),
                    shape_b: shape_name(sb),
                })?;
                if let Some(p) = hit {
                    let key = (ObjectIndex(i as u32), ObjectIndex(j as u32));
                    now.insert(key);
                    points.insert(key, p);
                }
            }
        }

        let event = |kind, a: ObjectIndex, b: ObjectIndex, point| ContactEvent {
            time,
            kind,
            object_a: scene.object(a).id.clone(),
            object_b: scene.object(b).id.clone(),
            point,
            index: DETECTED_CONTACT_INDEX,
        };
        for &(a, b) in self.active.difference(&now) {
            out.events.push(event(ContactKind::End, a, b, None));
        }
        for &(a, b) in &now {
            let p = points[&(a, b)];
            if self.active.contains(&(a, b)) {
                out.persisting.push((a, b, p));
            } else {
                out.events.push(event(ContactKind::Begin, a, b, Some(p)));
                out.events.push(event(
                    ContactKind::Impulse {
                        mass_a: scene.object(a).mass,
                        speed_a: velocity(a.get()).norm(),
                        mass_b: scene.object(b).mass,
                        speed_b: velocity(b.get()).norm(),
                    },
                    a,
                    b,
                    Some(p),
                ));
            }
        }
        self.active = now;
        self.previous = Some(poses.iter().map(|p| p.position).collect());
        Ok(out)
    }
}
