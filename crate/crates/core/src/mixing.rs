//! Per-listener combination of arriving frames, capped at `s_max`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::real::Real;
use crate::signal::{HapticSignal, SignalError};

pub const DEFAULT_S_MAX: f64 = 1.0;
pub const DEFAULT_HALF_LIFE: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("invalid mixer parameter: {0}")]
    InvalidArgument(String),
}

/// One frame arriving at a listener.
#[derive(Debug, Clone)]
pub struct Contribution<T> {
    pub source: String,
    pub persistent: bool,
    /// Seconds since the source became active, at the frame's first sample.
    pub age: T,
    pub signal: HapticSignal<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixerKind<T> {
    /// Sum, then peak-normalize down to `s_max` when exceeded.
    Cumulative,
    /// Weighted sum (missing weights count as 1), then the cumulative cap.
    Weighted { weights: BTreeMap<String, T> },
    /// Persistent sources fade by `0.5^(age / half_life)` before summing.
    Decay { half_life: T },
    /// Per-sample clipping to `±s_max` instead of whole-frame scaling.
    Clip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixerConfig<T> {
    pub kind: MixerKind<T>,
    pub s_max: T,
}

impl<T: Real> Default for MixerConfig<T> {
    fn default() -> Self {
        Self {
            kind: MixerKind::Cumulative,
            s_max: T::lit(DEFAULT_S_MAX),
        }
    }
}

impl<T: Real> MixerConfig<T> {
    pub fn validate(&self) -> Result<(), MixError> {
        check_s_max(self.s_max)?;
        match &self.kind {
            MixerKind::Weighted { weights } => {
                for (id, w) in weights {
                    check_weight(id, *w)?;
                }
            }
            MixerKind::Decay { half_life } => {
                if !half_life.is_finite() || *half_life <= T::zero() {
                    return Err(MixError::InvalidArgument(format!("half_life {half_life} must be > 0")));
                }
            }
            MixerKind::Cumulative | MixerKind::Clip => {}
        }
        Ok(())
    }

    /// Mixes one listener's contributions for a frame of `frame_len` samples.
    pub fn mix(&self, sample_rate: u32, frame_len: usize, contributions: &[Contribution<T>]) -> Result<HapticSignal<T>, MixError> {
        let out = match &self.kind {
            MixerKind::Cumulative => mix_cumulative(sample_rate, contributions.iter().map(|c| &c.signal), self.s_max)?,
            MixerKind::Weighted { weights } => mix_weighted(
                sample_rate,
                contributions.iter().map(|c| (c.source.as_str(), &c.signal)),
                weights,
                self.s_max,
            )?,
            MixerKind::Decay { half_life } => mix_decay(sample_rate, contributions, *half_life, self.s_max)?,
            MixerKind::Clip => mix_clip(sample_rate, contributions.iter().map(|c| &c.signal), self.s_max)?,
        };
        Ok(if out.len() >= frame_len {
            out
        } else {
            out.frame(0, frame_len)
        })
    }
}

fn check_s_max<T: Real>(s_max: T) -> Result<(), MixError> {
    if !s_max.is_finite() || s_max <= T::zero() {
        return Err(MixError::InvalidArgument(format!("s_max {s_max} must be > 0")));
    }
    Ok(())
}

fn check_weight<T: Real>(id: &str, w: T) -> Result<(), MixError> {
    if !w.is_finite() || w < T::zero() {
        return Err(MixError::InvalidArgument(format!("weight {w} for '{id}' must be >= 0")));
    }
    Ok(())
}

fn cap<T: Real>(sum: HapticSignal<T>, s_max: T) -> HapticSignal<T> {
    let peak = sum.peak();
    if peak <= s_max {
        return sum;
    }
    let scale = s_max / peak;
    // The clamp only absorbs rounding in `x * (s_max / peak)`.
    let samples = sum.samples().iter().map(|&x| (x * scale).max(-s_max).min(s_max)).collect();
    HapticSignal::from_finite(samples, sum.sample_rate())
}

/// Sample-wise sum; returned unchanged when its peak is within `s_max`,
/// otherwise scaled by `s_max / peak`.
pub fn mix_cumulative<'a, T: Real, I>(sample_rate: u32, signals: I, s_max: T) -> Result<HapticSignal<T>, MixError>
where
    I: IntoIterator<Item = &'a HapticSignal<T>>,
{
    check_s_max(s_max)?;
    Ok(cap(HapticSignal::sum(sample_rate, signals)?, s_max))
}

/// `Σ wᵢ·sᵢ` with a default weight of 1, then the cumulative cap.
pub fn mix_weighted<'a, 'b, T: Real, I>(
    sample_rate: u32,
    signals: I,
    weights: &BTreeMap<String, T>,
    s_max: T,
) -> Result<HapticSignal<T>, MixError>
where
    I: IntoIterator<Item = (&'b str, &'a HapticSignal<T>)>,
{
    check_s_max(s_max)?;
    let mut scaled = Vec::new();
    for (id, s) in signals {
        let w = weights.get(id).copied().unwrap_or_else(T::one);
        check_weight(id, w)?;
        if w == T::one() {
            scaled.push(s.clone());
        } else if w > T::zero() {
            scaled.push(s.scaled_unchecked(w));
        } else if s.sample_rate() != sample_rate {
            return Err(SignalError::RateMismatch {
                expected: sample_rate,
                found: s.sample_rate(),
            }
            .into());
        }
    }
    Ok(cap(HapticSignal::sum(sample_rate, scaled.iter())?, s_max))
}

/// Persistent contributions are multiplied sample-wise by
/// `0.5^((age + i/sample_rate) / half_life)`; temporary ones pass through.
pub fn mix_decay<T: Real>(
    sample_rate: u32,
    contributions: &[Contribution<T>],
    half_life: T,
    s_max: T,
) -> Result<HapticSignal<T>, MixError> {
    check_s_max(s_max)?;
    if !half_life.is_finite() || half_life <= T::zero() {
        return Err(MixError::InvalidArgument(format!("half_life {half_life} must be > 0")));
    }
    let dt = T::one() / T::lit(f64::from(sample_rate.max(1)));
    let half = T::lit(0.5);
    let faded: Vec<HapticSignal<T>> = contributions
        .iter()
        .map(|c| {
            if !c.persistent {
                return c.signal.clone();
            }
            let samples = c
                .signal
                .samples()
                .iter()
                .enumerate()
                .map(|(i, &x)| x * half.powf((c.age + T::lit(i as f64) * dt) / half_life))
                .collect();
            HapticSignal::from_finite(samples, c.signal.sample_rate())
        })
        .collect();
    Ok(cap(HapticSignal::sum(sample_rate, faded.iter())?, s_max))
}

/// Sample-wise sum clipped to `±s_max`.
pub fn mix_clip<'a, T: Real, I>(sample_rate: u32, signals: I, s_max: T) -> Result<HapticSignal<T>, MixError>
where
    I: IntoIterator<Item = &'a HapticSignal<T>>,
{
    check_s_max(s_max)?;
    let sum = HapticSignal::sum(sample_rate, signals)?;
    let samples = sum.samples().iter().map(|&x| x.max(-s_max).min(s_max)).collect();
    Ok(HapticSignal::from_finite(samples, sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SR: u32 = 8000;

    fn constant(v: f64, n: usize) -> HapticSignal<f64> {
        HapticSignal::new(vec![v; n], SR).unwrap()
    }

    #[test]
    fn cumulative_examples() {
        let out = mix_cumulative(SR, [&constant(0.4, 8), &constant(0.5, 8)], 1.0).unwrap();
        assert_eq!(out.samples(), &[0.4 + 0.5; 8]);
        let out = mix_cumulative(SR, [&constant(0.8, 8), &constant(0.6, 8)], 1.0).unwrap();
        for &x in out.samples() {
            assert!((x - 1.0).abs() < 1e-15 && x <= 1.0);
        }
        let out = mix_cumulative::<f64, _>(SR, [], 1.0).unwrap();
        assert!(out.is_silent());
    }

    #[test]
    fn cumulative_rejects_rate_mismatch() {
        let other = HapticSignal::new(vec![0.1], 4000).unwrap();
        assert!(mix_cumulative(SR, [&constant(0.1, 1), &other], 1.0).is_err());
    }

    #[test]
    fn weighted_examples() {
        let a = constant(0.3, 4);
        let b = constant(0.2, 4);
        let ones = BTreeMap::new();
        let w = mix_weighted(SR, [("a", &a), ("b", &b)], &ones, 1.0).unwrap();
        let c = mix_cumulative(SR, [&a, &b], 1.0).unwrap();
        assert_eq!(w, c);

        let zero_b: BTreeMap<String, f64> = [("b".to_string(), 0.0)].into();
        let w = mix_weighted(SR, [("a", &a), ("b", &b)], &zero_b, 1.0).unwrap();
        assert_eq!(w.samples(), a.samples());

        let two: BTreeMap<String, f64> = [("a".to_string(), 2.0)].into();
        let w = mix_weighted(SR, [("a", &constant(0.5, 4))], &two, 1.0).unwrap();
        assert_eq!(w.samples(), &[1.0; 4]);

        let neg: BTreeMap<String, f64> = [("a".to_string(), -1.0)].into();
        assert!(mix_weighted(SR, [("a", &a)], &neg, 1.0).is_err());
    }

    #[test]
    fn decay_fades_persistent_only() {
        let persistent = Contribution {
            source: "wind".into(),
            persistent: true,
            age: 2.0,
            signal: constant(0.4, 1),
        };
        let temporary = Contribution {
            source: "hit".into(),
            persistent: false,
            age: 2.0,
            signal: constant(0.4, 1),
        };
        let out = mix_decay(SR, &[persistent, temporary], 2.0, 1.0).unwrap();
        assert!((out.samples()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn clip_is_per_sample() {
        let a = HapticSignal::new(vec![0.9, 0.2], SR).unwrap();
        let b = HapticSignal::new(vec![0.9, 0.2], SR).unwrap();
        assert_eq!(mix_clip(SR, [&a, &b], 1.0).unwrap().samples(), &[1.0, 0.4]);
    }

    #[test]
    fn config_pads_to_frame_length() {
        let cfg = MixerConfig::<f64>::default();
        let out = cfg.mix(SR, 80, &[]).unwrap();
        assert_eq!(out.len(), 80);
        assert!(out.is_silent());
        assert!(MixerConfig { s_max: 0.0, ..cfg }.validate().is_err());
    }

    fn signal_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 0..24), 0..6)
    }

    fn to_signals(raw: &[Vec<f64>]) -> Vec<HapticSignal<f64>> {
        raw.iter().map(|s| HapticSignal::new(s.clone(), SR).unwrap()).collect()
    }

    proptest! {
        #[test]
        fn never_exceeds_cap(raw in signal_set(), s_max in 0.05f64..3.0) {
            let sigs = to_signals(&raw);
            let out = mix_cumulative(SR, sigs.iter(), s_max).unwrap();
            prop_assert!(out.peak() <= s_max);
        }

        #[test]
        fn below_cap_is_bit_exact(raw in signal_set()) {
            let sigs = to_signals(&raw);
            let sum = HapticSignal::sum(SR, sigs.iter()).unwrap();
            let s_max = sum.peak().max(1e-3);
            let out = mix_cumulative(SR, sigs.iter(), s_max).unwrap();
            prop_assert_eq!(out, sum);
        }

        #[test]
        fn permutation_invariant(raw in signal_set(), s_max in 0.05f64..3.0) {
            let sigs = to_signals(&raw);
            let fwd = mix_cumulative(SR, sigs.iter(), s_max).unwrap();
            let rev = mix_cumulative(SR, sigs.iter().rev(), s_max).unwrap();
            for (a, b) in fwd.samples().iter().zip(rev.samples()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn linear_below_cap(raw in signal_set(), lambda in 0.01f64..1.0) {
            let sigs = to_signals(&raw);
            let s_max = HapticSignal::sum(SR, sigs.iter()).unwrap().peak() + 1.0;
            let base = mix_cumulative(SR, sigs.iter(), s_max).unwrap();
            let scaled: Vec<_> = sigs.iter().map(|s| s.scale(lambda).unwrap()).collect();
            let out = mix_cumulative(SR, scaled.iter(), s_max).unwrap();
            for (a, b) in out.samples().iter().zip(base.samples()) {
                prop_assert!((a - lambda * b).abs() <= 1e-12);
            }
        }
    }
}
