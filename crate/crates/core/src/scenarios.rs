//! Generators for the six desk-scale ride scenarios.
//!
//! Every scenario shares one base scene: a ground plane, a mine cart that
//! rests on it through two wheel contacts, an avatar sitting in the cart
//! with the ten default listeners, and an unbounded air volume. Coordinates
//! are metres with `x` to the avatar's right, `y` forward and `z` up.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::document::{
    EngineDoc, EventDoc, EventKindDoc, ListenerDoc, MaterialDoc, MotionDoc, ObjectDoc, ScenarioDoc, ShapeDoc,
    SourceDoc, SourceKindDoc, TemplateDoc,
};
use crate::template::{SynthSpec, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("{field} = {value} is out of range: {expected}")]
    Range {
        field: &'static str,
        value: f64,
        expected: String,
    },
    #[error("unknown scenario kind '{0}'")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Stalactites,
    Wind,
    Projectiles,
    Explosion,
    Carts,
    Walls,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Stalactites,
        ScenarioKind::Wind,
        ScenarioKind::Projectiles,
        ScenarioKind::Explosion,
        ScenarioKind::Carts,
        ScenarioKind::Walls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Stalactites => "stalactites",
            ScenarioKind::Wind => "wind",
            ScenarioKind::Projectiles => "projectiles",
            ScenarioKind::Explosion => "explosion",
            ScenarioKind::Carts => "carts",
            ScenarioKind::Walls => "walls",
        }
    }

    /// Duration used when none is given.
    pub fn default_duration(self) -> f64 {
        match self {
            ScenarioKind::Walls => 20.0,
            _ => 10.0,
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = GenerateError;
    fn from_str(s: &str) -> Result<Self, GenerateError> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| GenerateError::UnknownKind(s.to_string()))
    }
}

/// Generator inputs. `count` applies to stalactites (impacts) and
/// projectiles (darts per burst); `period` to projectile bursts.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub seed: u64,
    pub duration: f64,
    pub count: usize,
    pub period: f64,
}

pub const MIN_DURATION: f64 = 5.0;
pub const MAX_DURATION: f64 = 120.0;

impl GeneratorParams {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            seed,
            duration: kind.default_duration(),
            count: 3,
            period: 5.0,
        }
    }
}

/// Avatar-local listener layout: `(id, body part, position)`.
pub const LISTENER_LAYOUT: [(&str, &str, [f64; 3]); 10] = [
    ("head_l", "head_left", [-0.1, 0.0, 0.75]),
    ("head_r", "head_right", [0.1, 0.0, 0.75]),
    ("hand_l", "hand_left", [-0.25, 0.1, 0.0]),
    ("hand_r", "hand_right", [0.25, 0.1, 0.0]),
    ("upper_back_l", "upper_back_left", [-0.12, -0.15, 0.45]),
    ("upper_back_r", "upper_back_right", [0.12, -0.15, 0.45]),
    ("middle_back_l", "middle_back_left", [-0.12, -0.15, 0.15]),
    ("middle_back_r", "middle_back_right", [0.12, -0.15, 0.15]),
    ("upper_leg_l", "upper_leg_left", [-0.12, 0.0, -0.45]),
    ("upper_leg_r", "upper_leg_right", [0.12, 0.0, -0.45]),
];

const AVATAR_CENTER: [f64; 3] = [0.0, 0.0, 1.6];
const AVATAR_HALF: [f64; 3] = [0.25, 0.15, 0.9];
const CART_CENTER: [f64; 3] = [0.0, 0.0, 0.45];
const CART_HALF: [f64; 3] = [0.6, 0.9, 0.25];

/// Wall presets `(name, κ, ρ)`, ordered from strongest to weakest
/// transmission.
pub const WALL_PRESETS: [(&str, f64, f64); 3] = [("stone", 0.1, 1.0), ("wood", 0.4, 0.6), ("ribbon", 0.8, 0.1)];

fn check(field: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), GenerateError> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(GenerateError::Range {
            field,
            value,
            expected: format!("must lie in [{lo}, {hi}]"),
        })
    }
}

fn material(kappa: f64, rho: f64) -> MaterialDoc {
    MaterialDoc {
        kappa,
        rho,
        extra: BTreeMap::new(),
    }
}

fn object(id: &str, material: &str, position: [f64; 3], shape: Option<ShapeDoc>) -> ObjectDoc {
    ObjectDoc {
        id: id.into(),
        material: material.into(),
        position,
        orientation: [1.0, 0.0, 0.0, 0.0],
        mass: 0.0,
        unbounded: false,
        detect: false,
        shape,
        motion: None,
        modulation: None,
    }
}

fn synth(id: &str, spec: SynthSpec, sample_rate: u32) -> TemplateDoc {
    TemplateDoc {
        id: id.into(),
        path: None,
        sample_rate: Some(sample_rate),
        samples: None,
        synth: Some(spec),
    }
}

fn spec(waveform: Waveform, frequency: f64, duration: f64, decay: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        waveform,
        frequency,
        duration,
        attack: 0.002,
        decay,
        envelope: Vec::new(),
        seed,
    }
}

fn source(id: &str, kind: SourceKindDoc, object: &str, template: &str, position: [f64; 3], looping: bool) -> SourceDoc {
    SourceDoc {
        id: id.into(),
        kind,
        object: object.into(),
        template: template.into(),
        position,
        looping,
    }
}

fn event(time: f64, kind: EventKindDoc, a: &str, b: &str, point: Option<[f64; 3]>, index: u32) -> EventDoc {
    EventDoc {
        time,
        kind,
        a: a.into(),
        b: b.into(),
        point,
        index,
        m1: None,
        v1: None,
        m2: None,
        v2: None,
    }
}

fn impulse(time: f64, a: &str, b: &str, point: [f64; 3], m1: f64, v1: f64) -> EventDoc {
    EventDoc {
        m1: Some(m1),
        v1: Some(v1),
        m2: Some(0.0),
        v2: Some(0.0),
        ..event(time, EventKindDoc::Impulse, a, b, Some(point), 0)
    }
}

/// Rounds to microseconds so generated documents stay readable.
fn round_us(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn base(params: &GeneratorParams) -> ScenarioDoc {
    let mut doc = ScenarioDoc {
        engine: Some(EngineDoc {
            duration: params.duration,
            seed: params.seed,
            ..EngineDoc::default()
        }),
        ..ScenarioDoc::default()
    };
    doc.materials.insert("rock".into(), material(0.2, 0.9));
    doc.materials.insert("metal".into(), material(0.1, 0.8));
    doc.materials.insert("body".into(), material(0.3, 0.7));
    doc.materials.insert("air".into(), material(0.99, 0.01));

    doc.objects.push(object(
        "ground",
        "rock",
        [0.0; 3],
        Some(ShapeDoc::Plane {
            normal: [0.0, 0.0, 1.0],
            offset: 0.0,
        }),
    ));
    doc.objects[0].detect = true;
    let mut cart = object("cart", "metal", CART_CENTER, Some(ShapeDoc::Box { half_extents: CART_HALF }));
    cart.mass = 300.0;
    doc.objects.push(cart);
    let mut avatar = object("avatar", "body", AVATAR_CENTER, Some(ShapeDoc::Box { half_extents: AVATAR_HALF }));
    avatar.mass = 70.0;
    avatar.detect = true;
    doc.objects.push(avatar);
    let mut air = object("air", "air", [0.0; 3], None);
    air.unbounded = true;
    doc.objects.push(air);

    for (id, part, pos) in LISTENER_LAYOUT {
        doc.listeners.push(ListenerDoc {
            id: id.into(),
            body_part: part.into(),
            object: "avatar".into(),
            position: pos,
            radius: 0.05,
        });
    }
    doc.events.push(event(0.0, EventKindDoc::Begin, "cart", "ground", Some([-0.5, 0.0, 0.0]), 0));
    doc.events.push(event(0.0, EventKindDoc::Begin, "cart", "ground", Some([0.5, 0.0, 0.0]), 1));
    doc.events.push(event(0.0, EventKindDoc::Begin, "avatar", "cart", Some([0.0, 0.0, 0.7]), 0));
    doc
}

pub fn generate(kind: ScenarioKind, params: &GeneratorParams) -> Result<ScenarioDoc, GenerateError> {
    check("duration", params.duration, MIN_DURATION, MAX_DURATION)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut doc = base(params);
    let rate = crate::signal::DEFAULT_SAMPLE_RATE;
    match kind {
        ScenarioKind::Stalactites => stalactites(&mut doc, params, &mut rng, rate)?,
        ScenarioKind::Wind => wind(&mut doc, params, &mut rng, rate),
        ScenarioKind::Projectiles => projectiles(&mut doc, params, &mut rng, rate)?,
        ScenarioKind::Explosion => explosion(&mut doc, params, rate),
        ScenarioKind::Carts => carts(&mut doc, params, rate),
        ScenarioKind::Walls => walls(&mut doc, params, &mut rng, rate)?,
    }
    Ok(doc)
}

/// Falling spheres that hit either the ground or an isolated ledge at
/// well-separated times, so at most one impact sounds at once.
fn stalactites(doc: &mut ScenarioDoc, p: &GeneratorParams, rng: &mut ChaCha8Rng, rate: u32) -> Result<(), GenerateError> {
    let max_count = (p.duration - 2.0).floor().max(1.0);
    check("count", p.count as f64, 1.0, max_count)?;
    let mut ledge = object("ledge", "rock", [3.0, 4.0, 2.0], Some(ShapeDoc::Box { half_extents: [1.0, 0.5, 0.2] }));
    ledge.mass = 500.0;
    doc.objects.push(ledge);
    doc.templates.push(synth("impact", spec(Waveform::Noise, 0.0, 0.35, 12.0, p.seed ^ 0x5a), rate));
    doc.sources.push(source("ground_impact", SourceKindDoc::Temporary, "ground", "impact", [0.0; 3], false));
    doc.sources.push(source("ledge_impact", SourceKindDoc::Temporary, "ledge", "impact", [0.0; 3], false));

    let spacing = (p.duration - 2.0) / p.count as f64;
    let g = 9.81;
    for i in 0..p.count {
        let t_hit = round_us(1.0 + (i as f64 + 0.5) * spacing + rng.gen_range(-0.2..=0.2) * spacing);
        let mass = round_us(rng.gen_range(2.0..=10.0));
        let speed = round_us(rng.gen_range(4.0..=8.0));
        let radius = 0.15;
        let on_ledge = i % 3 == 1;
        let (target, surface) = if on_ledge {
            ("ledge", [3.0 + rng.gen_range(-0.8..=0.8), 4.0 + rng.gen_range(-0.3..=0.3), 2.2])
        } else {
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            ("ground", [side * rng.gen_range(1.0..=3.0), rng.gen_range(-2.0..=3.0), 0.0])
        };
        let surface = surface.map(round_us);
        let fall = speed / g;
        let t_drop = t_hit - fall;
        let height = 0.5 * g * fall * fall;
        let id = format!("stalactite_{i}");
        let times: Vec<f64> = (0..=4).map(|k| round_us(t_drop + fall * k as f64 / 4.0)).collect();
        let positions: Vec<[f64; 3]> = times
            .iter()
            .map(|t| {
                let tau = t - t_drop;
                [surface[0], surface[1], round_us(surface[2] + radius + height - 0.5 * g * tau * tau)]
            })
            .collect();
        let mut s = object(&id, "rock", [surface[0], surface[1], surface[2] + radius + height], Some(ShapeDoc::Sphere { radius }));
        s.mass = mass;
        s.motion = Some(MotionDoc::Keyframes {
            times: std::iter::once(0.0).chain(times).collect(),
            positions: std::iter::once([surface[0], surface[1], round_us(surface[2] + radius + height)])
                .chain(positions)
                .collect(),
        });
        doc.objects.push(s);
        doc.events.push(event(t_hit, EventKindDoc::Begin, &id, target, Some(surface), 0));
        doc.events.push(impulse(t_hit, &id, target, surface, mass, speed));
        doc.events.push(event(round_us(t_hit + 0.3), EventKindDoc::End, &id, target, None, 0));
    }
    Ok(())
}

/// An updraft volume touching the avatar carries a persistent source with a
/// seeded, time-varying intensity envelope.
fn wind(doc: &mut ScenarioDoc, p: &GeneratorParams, rng: &mut ChaCha8Rng, rate: u32) {
    doc.materials.insert("updraft".into(), material(0.5, 0.4));
    let mut updraft = object("updraft", "updraft", [0.0; 3], None);
    updraft.unbounded = true;
    doc.objects.push(updraft);
    let steps = (p.duration / 1.5).ceil() as usize;
    let envelope = (0..=steps)
        .map(|k| [round_us(k as f64 * p.duration / steps as f64), round_us(rng.gen_range(0.15..=1.0))])
        .collect();
    let mut s = spec(Waveform::Noise, 0.0, p.duration, 0.0, p.seed ^ 0x77);
    s.envelope = envelope;
    s.attack = 0.5;
    doc.templates.push(synth("gust", s, rate));
    doc.sources.push(source("wind", SourceKindDoc::Persistent, "updraft", "gust", [0.0, 2.0, 1.6], false));
    doc.events.push(event(0.0, EventKindDoc::Begin, "updraft", "avatar", Some([0.0, 0.15, 1.6]), 0));
}

/// Bursts of darts hitting the avatar's front every `period` seconds.
fn projectiles(doc: &mut ScenarioDoc, p: &GeneratorParams, rng: &mut ChaCha8Rng, rate: u32) -> Result<(), GenerateError> {
    check("period", p.period, 1.0, p.duration)?;
    check("count", p.count as f64, 1.0, 10.0)?;
    let mut gun = object("gun", "metal", [0.0, 8.0, 1.6], Some(ShapeDoc::Sphere { radius: 0.2 }));
    gun.mass = 5.0;
    doc.objects.push(gun);
    doc.templates.push(synth("dart", spec(Waveform::Square, 250.0, 0.08, 30.0, 0), rate));
    doc.sources.push(source("dart_hit", SourceKindDoc::Temporary, "avatar", "dart", [0.0; 3], false));
    let mut t = 1.0;
    while t < p.duration {
        for k in 0..p.count {
            let time = round_us(t + 0.1 * k as f64);
            let point = [
                round_us(rng.gen_range(-0.2..=0.2)),
                AVATAR_CENTER[1] + AVATAR_HALF[1],
                round_us(AVATAR_CENTER[2] + rng.gen_range(-0.5..=0.6)),
            ];
            doc.events.push(impulse(time, "gun", "avatar", point, 0.05, 30.0));
        }
        t += p.period;
    }
    Ok(())
}

/// A shock-wave sphere with a looping source sweeps through the avatar
/// from left to right; the detector tracks the contact.
fn explosion(doc: &mut ScenarioDoc, p: &GeneratorParams, rate: u32) {
    let speed = 8.0 / p.duration;
    doc.materials.insert("blast".into(), material(0.2, 1.0));
    let mut wave = object("shockwave", "blast", [-4.0, 0.0, 1.6], Some(ShapeDoc::Sphere { radius: 0.5 }));
    wave.mass = 1.0;
    wave.detect = true;
    wave.motion = Some(MotionDoc::Linear {
        velocity: [round_us(speed), 0.0, 0.0],
        start: 0.0,
        stop: None,
    });
    doc.objects.push(wave);
    doc.templates.push(synth("blast", spec(Waveform::Rumble, 60.0, 1.0, 0.0, 0x3c), rate));
    doc.sources.push(source("explosion", SourceKindDoc::Persistent, "shockwave", "blast", [0.0; 3], true));
}

/// Two rumbling carts travel on parallel tracks in front of and behind the
/// avatar in opposite directions; the detector keeps their ground contacts.
fn carts(doc: &mut ScenarioDoc, p: &GeneratorParams, rate: u32) {
    let speed = round_us(12.0 / p.duration);
    let half = [0.5, 0.4, 0.3];
    for (id, y, x0, dir) in [("cart_front", 1.5, -6.0, 1.0), ("cart_back", -1.5, 6.0, -1.0)] {
        let mut c = object(id, "metal", [x0, y, half[2]], Some(ShapeDoc::Box { half_extents: half }));
        c.mass = 200.0;
        c.detect = true;
        c.motion = Some(MotionDoc::Linear {
            velocity: [dir * speed, 0.0, 0.0],
            start: 0.0,
            stop: None,
        });
        doc.objects.push(c);
    }
    doc.templates.push(synth("rumble", spec(Waveform::Rumble, 40.0, 2.0, 0.0, 0x11), rate));
    doc.sources.push(source("rumble_front", SourceKindDoc::Persistent, "cart_front", "rumble", [0.0, 0.0, 0.3], true));
    doc.sources.push(source("rumble_back", SourceKindDoc::Persistent, "cart_back", "rumble", [0.0, 0.0, 0.3], true));
}

/// Nine walls brushing the avatar in sequence, three per material preset.
fn walls(doc: &mut ScenarioDoc, p: &GeneratorParams, rng: &mut ChaCha8Rng, rate: u32) -> Result<(), GenerateError> {
    check("duration", p.duration, 10.0, MAX_DURATION)?;
    for (name, kappa, rho) in WALL_PRESETS {
        doc.materials.insert(name.into(), material(kappa, rho));
    }
    doc.templates.push(synth("stone_hit", spec(Waveform::Sine, 120.0, 0.5, 6.0, 0), rate));
    doc.templates.push(synth("wood_hit", spec(Waveform::Square, 200.0, 0.4, 10.0, 0), rate));
    doc.templates.push(synth("ribbon_hit", spec(Waveform::Noise, 0.0, 0.3, 14.0, p.seed ^ 0x99), rate));
    let gap = (p.duration - 1.0) / 9.0;
    for i in 0..9 {
        let (preset, _, _) = WALL_PRESETS[i / 3];
        let id = format!("{preset}_wall_{}", i % 3 + 1);
        let side = if i % 2 == 0 { -1.0 } else { 1.0 };
        let x = side * (AVATAR_HALF[0] + 0.2);
        let mut w = object(&id, preset, [x, 0.0, 1.6], Some(ShapeDoc::Box { half_extents: [0.2, 1.0, 1.5] }));
        w.mass = 1000.0;
        doc.objects.push(w);
        doc.sources.push(source(
            &format!("{id}_hit"),
            SourceKindDoc::Temporary,
            &id,
            &format!("{preset}_hit"),
            [0.0; 3],
            false,
        ));
        let t = round_us(0.5 + gap * i as f64 + rng.gen_range(0.0..=0.2) * gap);
        let point = [side * AVATAR_HALF[0], 0.0, round_us(1.6 + rng.gen_range(-0.3..=0.3))];
        doc.events.push(event(t, EventKindDoc::Begin, "avatar", &id, Some(point), 0));
        doc.events.push(impulse(t, "avatar", &id, point, 70.0, 1.5));
        doc.events.push(event(round_us(t + 0.6 * gap), EventKindDoc::End, "avatar", &id, None, 0));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{parse_document, render_document};
    use crate::scenario::Scenario;
    use std::path::Path;

    fn count(doc: &ScenarioDoc, kind: EventKindDoc) -> usize {
        doc.events.iter().filter(|e| e.kind == kind).count()
    }

    #[test]
    fn stalactites_have_distinct_impacts() {
        let doc = generate(ScenarioKind::Stalactites, &GeneratorParams::new(ScenarioKind::Stalactites, 7)).unwrap();
        let mut times: Vec<f64> = doc.events.iter().filter(|e| e.kind == EventKindDoc::Impulse).map(|e| e.time).collect();
        assert_eq!(times.len(), 3);
        times.dedup();
        assert_eq!(times.len(), 3);
    }

    #[test]
    fn walls_have_nine_pairs_three_per_preset() {
        let doc = generate(ScenarioKind::Walls, &GeneratorParams::new(ScenarioKind::Walls, 1)).unwrap();
        let walls: Vec<&EventDoc> = doc.events.iter().filter(|e| e.b.contains("_wall_")).collect();
        assert_eq!(walls.iter().filter(|e| e.kind == EventKindDoc::Begin).count(), 9);
        assert_eq!(walls.iter().filter(|e| e.kind == EventKindDoc::End).count(), 9);
        for (preset, _, _) in WALL_PRESETS {
            let n = walls
                .iter()
                .filter(|e| e.kind == EventKindDoc::Begin && e.b.starts_with(preset))
                .count();
            assert_eq!(n, 3, "{preset}");
        }
    }

    #[test]
    fn projectiles_burst_every_period() {
        let p = GeneratorParams {
            count: 1,
            ..GeneratorParams::new(ScenarioKind::Projectiles, 3)
        };
        let doc = generate(ScenarioKind::Projectiles, &p).unwrap();
        assert_eq!(count(&doc, EventKindDoc::Impulse), 2);
        let p3 = GeneratorParams::new(ScenarioKind::Projectiles, 3);
        let doc = generate(ScenarioKind::Projectiles, &p3).unwrap();
        assert_eq!(count(&doc, EventKindDoc::Impulse), 6);
    }

    #[test]
    fn generation_is_seeded() {
        for kind in ScenarioKind::ALL {
            let a = generate(kind, &GeneratorParams::new(kind, 11)).unwrap();
            let b = generate(kind, &GeneratorParams::new(kind, 11)).unwrap();
            assert_eq!(render_document(&a), render_document(&b));
        }
        let a = generate(ScenarioKind::Stalactites, &GeneratorParams::new(ScenarioKind::Stalactites, 1)).unwrap();
        let b = generate(ScenarioKind::Stalactites, &GeneratorParams::new(ScenarioKind::Stalactites, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn every_scenario_validates_after_a_text_round_trip() {
        for kind in ScenarioKind::ALL {
            let doc = generate(kind, &GeneratorParams::new(kind, 5)).unwrap();
            let text = render_document(&doc);
            let back = parse_document(&text).unwrap();
            assert_eq!(back, doc, "{}", kind.name());
            Scenario::<f64>::from_doc(&back, Path::new(".")).unwrap_or_else(|e| panic!("{}: {e}", kind.name()));
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = GeneratorParams::new(ScenarioKind::Stalactites, 0);
        p.count = 0;
        assert!(generate(ScenarioKind::Stalactites, &p).is_err());
        p.count = 3;
        p.duration = 1.0;
        assert!(generate(ScenarioKind::Stalactites, &p).is_err());
        assert!("nope".parse::<ScenarioKind>().is_err());
        assert_eq!("walls".parse::<ScenarioKind>().unwrap(), ScenarioKind::Walls);
    }
}
