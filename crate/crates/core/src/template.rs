//! Designer-authored template signals and the formats they load from.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::signal::{HapticSignal, SignalError};

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template '{id}': {source}")]
    Signal {
        id: String,
        #[source]
        source: SignalError,
    },
    #[error("template '{id}': cannot read {path}: {message}")]
    Io {
        id: String,
        path: PathBuf,
        message: String,
    },
    #[error("template '{id}': {message}")]
    Format { id: String, message: String },
    #[error("duplicate template id '{0}'")]
    Duplicate(String),
}

/// Procedural waveform recipe, used by generated scenarios so that a
/// scenario file stays self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub waveform: Waveform,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    pub duration: f64,
    /// Linear fade-in time in seconds.
    #[serde(default)]
    pub attack: f64,
    /// Exponential decay rate in 1/s (0 = sustained).
    #[serde(default)]
    pub decay: f64,
    /// Optional piecewise-linear amplitude envelope as `[time_s, gain]` points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub envelope: Vec<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
}

fn default_frequency() -> f64 {
    170.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Square,
    Noise,
    /// Sine carrier with seeded random amplitude jitter.
    Rumble,
}

/// Where a template's samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateSource {
    /// WAV (mono 16-bit PCM) or CSV file, relative to the scene document.
    File(PathBuf),
    Inline { samples: Vec<f64>, sample_rate: u32 },
    Synth { spec: SynthSpec, sample_rate: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTemplate<T> {
    pub id: String,
    pub source: TemplateSource,
    /// Peak-normalized signal at its native sample rate.
    pub signal: HapticSignal<T>,
}

impl<T: Real> SignalTemplate<T> {
    pub fn load(id: &str, source: TemplateSource, base_dir: &Path) -> Result<Self, TemplateError> {
        let raw = match &source {
            TemplateSource::File(path) => load_file(id, &base_dir.join(path))?,
            TemplateSource::Inline {
                samples,
                sample_rate,
            } => HapticSignal::new(samples.iter().map(|&s| T::lit(s)).collect(), *sample_rate)
                .map_err(|e| sig_err(id, e))?,
            TemplateSource::Synth { spec, sample_rate } => synthesize(id, spec, *sample_rate)?,
        };
        Ok(Self {
            id: id.to_string(),
            source,
            signal: raw.normalized(),
        })
    }
}

fn sig_err(id: &str, source: SignalError) -> TemplateError {
    TemplateError::Signal {
        id: id.to_string(),
        source,
    }
}

fn load_file<T: Real>(id: &str, path: &Path) -> Result<HapticSignal<T>, TemplateError> {
    let io = |message: String| TemplateError::Io {
        id: id.to_string(),
        path: path.to_path_buf(),
        message,
    };
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("wav") => {
            let reader = hound::WavReader::open(path).map_err(|e| io(e.to_string()))?;
            let spec = reader.spec();
            if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
                return Err(TemplateError::Format {
                    id: id.to_string(),
                    message: format!(
                        "expected mono 16-bit PCM, found {} channel(s) at {} bits",
                        spec.channels, spec.bits_per_sample
                    ),
                });
            }
            let samples = reader
                .into_samples::<i16>()
                .map(|s| s.map(|v| T::lit(v as f64 / i16::MAX as f64)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| io(e.to_string()))?;
            HapticSignal::new(samples, spec.sample_rate).map_err(|e| sig_err(id, e))
        }
        Some("csv") => {
            let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
            parse_csv(id, &text, crate::signal::DEFAULT_SAMPLE_RATE)
        }
        _ => Err(TemplateError::Format {
            id: id.to_string(),
            message: format!("unsupported template file {}", path.display()),
        }),
    }
}

/// One amplitude per line; blank lines and `#` comments are skipped.
pub fn parse_csv<T: Real>(id: &str, text: &str, sample_rate: u32) -> Result<HapticSignal<T>, TemplateError> {
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| TemplateError::Format {
            id: id.to_string(),
            message: format!("line {}: '{}' is not a number", lineno + 1, line),
        })?;
        samples.push(T::lit(v));
    }
    HapticSignal::new(samples, sample_rate).map_err(|e| sig_err(id, e))
}

fn envelope_at(points: &[[f64; 2]], t: f64) -> f64 {
    match points {
        [] => 1.0,
        [only] => only[1],
        _ => {
            if t <= points[0][0] {
                return points[0][1];
            }
            for w in points.windows(2) {
                let ([t0, a0], [t1, a1]) = (w[0], w[1]);
                if t <= t1 {
                    let span = t1 - t0;
                    return if span > 0.0 { a0 + (a1 - a0) * (t - t0) / span } else { a1 };
                }
            }
            points[points.len() - 1][1]
        }
    }
}

pub fn synthesize<T: Real>(id: &str, spec: &SynthSpec, sample_rate: u32) -> Result<HapticSignal<T>, TemplateError> {
    let bad = |message: &str| TemplateError::Format {
        id: id.to_string(),
        message: message.to_string(),
    };
    if sample_rate == 0 {
        return Err(sig_err(id, SignalError::ZeroSampleRate));
    }
    if !(spec.duration.is_finite() && spec.duration > 0.0) {
        return Err(bad("synth duration must be positive"));
    }
    if !(spec.frequency.is_finite() && spec.frequency >= 0.0) {
        return Err(bad("synth frequency must be non-negative"));
    }
    if spec.attack < 0.0 || spec.decay < 0.0 {
        return Err(bad("synth attack and decay must be non-negative"));
    }
    let n = (spec.duration * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rate = sample_rate as f64;
    let mut jitter = 1.0;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let phase = TAU * spec.frequency * t;
            let carrier = match spec.waveform {
                Waveform::Sine => phase.sin(),
                Waveform::Square => phase.sin().signum(),
                Waveform::Noise => rng.gen_range(-1.0..=1.0),
                Waveform::Rumble => {
                    if i % 64 == 0 {
                        jitter = rng.gen_range(0.5..=1.0);
                    }
                    jitter * phase.sin()
                }
            };
            let attack = if spec.attack > 0.0 { (t / spec.attack).min(1.0) } else { 1.0 };
            let decay = (-spec.decay * t).exp();
            T::lit(carrier * attack * decay * envelope_at(&spec.envelope, t))
        })
        .collect();
    HapticSignal::new(samples, sample_rate).map_err(|e| sig_err(id, e))
}

/// Templates keyed by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemplateRegistry<T> {
    templates: BTreeMap<String, SignalTemplate<T>>,
    order: Vec<String>,
}

impl<T: Real> TemplateRegistry<T> {
    pub fn new() -> Self {
        Self {
            templates: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    pub fn insert(&mut self, template: SignalTemplate<T>) -> Result<(), TemplateError> {
        if self.templates.contains_key(&template.id) {
            return Err(TemplateError::Duplicate(template.id));
        }
        self.order.push(template.id.clone());
        self.templates.insert(template.id.clone(), template);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&SignalTemplate<T>> {
        self.templates.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }

    /// Templates in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &SignalTemplate<T>> {
        self.order.iter().map(|id| &self.templates[id])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Copy of every template resampled to `rate`, renormalized to unit peak.
    pub fn resampled(&self, rate: u32) -> Result<Self, TemplateError> {
        let mut out = Self::new();
        for t in self.iter() {
            let signal = t.signal.resample_linear(rate).map_err(|e| sig_err(&t.id, e))?.normalized();
            out.insert(SignalTemplate {
                id: t.id.clone(),
                source: t.source.clone(),
                signal,
            })?;
        }
        Ok(out)
    }
}

impl<T: Real> TemplateRegistry<T> {
    pub fn from_iter_checked(
        templates: impl IntoIterator<Item = SignalTemplate<T>>,
    ) -> Result<Self, TemplateError> {
        let mut reg = Self::new();
        for t in templates {
            reg.insert(t)?;
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_templates_are_peak_normalized() {
        let t: SignalTemplate<f64> = SignalTemplate::load(
            "t",
            TemplateSource::Inline {
                samples: vec![0.25, -0.5, 0.1],
                sample_rate: 8000,
            },
            Path::new("."),
        )
        .unwrap();
        assert_eq!(t.signal.peak(), 1.0);
        assert_eq!(t.signal.samples(), &[0.5, -1.0, 0.2]);
    }

    #[test]
    fn csv_and_wav_files_load() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "# comment\n0.5\n-0.25\n\n1.0\n").unwrap();
        let t: SignalTemplate<f64> =
            SignalTemplate::load("a", TemplateSource::File("a.csv".into()), dir.path()).unwrap();
        assert_eq!(t.signal.samples(), &[0.5, -0.25, 1.0]);

        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 4000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(dir.path().join("b.wav"), spec).unwrap();
        for v in [0i16, 16384, -32767, 8192] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let t: SignalTemplate<f64> =
            SignalTemplate::load("b", TemplateSource::File("b.wav".into()), dir.path()).unwrap();
        assert_eq!(t.signal.sample_rate(), 4000);
        assert_eq!(t.signal.peak(), 1.0);
        assert_eq!(t.signal.samples()[2], -1.0);
        let r = TemplateRegistry::from_iter_checked([t]).unwrap().resampled(8000).unwrap();
        assert_eq!(r.get("b").unwrap().signal.len(), 8);
    }

    #[test]
    fn bad_csv_line_is_reported() {
        let err = parse_csv::<f64>("x", "0.1\nabc\n", 8000).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn synth_is_deterministic() {
        let spec = SynthSpec {
            waveform: Waveform::Noise,
            frequency: 0.0,
            duration: 0.01,
            attack: 0.0,
            decay: 5.0,
            envelope: vec![],
            seed: 3,
        };
        let a: HapticSignal<f64> = synthesize("n", &spec, 8000).unwrap();
        let b: HapticSignal<f64> = synthesize("n", &spec, 8000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 80);
    }

    #[test]
    fn envelope_interpolates() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]];
        assert_eq!(envelope_at(&pts, 0.5), 0.5);
        assert_eq!(envelope_at(&pts, 1.5), 0.75);
        assert_eq!(envelope_at(&pts, 9.0), 0.5);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mk = || SignalTemplate::<f64> {
            id: "x".into(),
            source: TemplateSource::Inline {
                samples: vec![],
                sample_rate: 8000,
            },
            signal: HapticSignal::empty(8000),
        };
        let mut reg = TemplateRegistry::new();
        reg.insert(mk()).unwrap();
        assert!(matches!(reg.insert(mk()), Err(TemplateError::Duplicate(_))));
    }
}
