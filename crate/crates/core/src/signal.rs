//! Sampled vibrotactile waveforms.
//!
//! A [`HapticSignal`] is an immutable run of real amplitudes at a fixed
//! sample rate. Arithmetic here is linear and never clips; capping happens
//! in the mixer.

use thiserror::Error;

use crate::real::Real;

/// Engine-wide default sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 8000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("invalid gain {0}: must be finite and non-negative")]
    InvalidGain(f64),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample rate mismatch: expected {expected} Hz, found {found} Hz")]
    RateMismatch { expected: u32, found: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HapticSignal<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> HapticSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self, SignalError> {
        if sample_rate == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Internal constructor for samples already known to be finite.
    pub(crate) fn from_finite(samples: Vec<T>, sample_rate: u32) -> Self {
        debug_assert!(sample_rate > 0);
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn silent(len: usize, sample_rate: u32) -> Self {
        Self::from_finite(vec![T::zero(); len], sample_rate.max(1))
    }

    pub fn empty(sample_rate: u32) -> Self {
        Self::silent(0, sample_rate)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scale(&self, gain: T) -> Result<Self, SignalError> {
        if !gain.is_finite() || gain < T::zero() {
            return Err(SignalError::InvalidGain(gain.as_f64()));
        }
        Ok(self.scaled_unchecked(gain))
    }

    pub(crate) fn scaled_unchecked(&self, gain: T) -> Self {
        Self::from_finite(
            self.samples.iter().map(|&s| s * gain).collect(),
            self.sample_rate,
        )
    }

    /// Sample-wise sum. Shorter inputs are zero-padded at the tail, and an
    /// empty collection yields an empty signal at `sample_rate`.
    pub fn sum<'a, I>(sample_rate: u32, signals: I) -> Result<Self, SignalError>
    where
        I: IntoIterator<Item = &'a HapticSignal<T>>,
    {
        let mut out: Vec<T> = Vec::new();
        for s in signals {
            if s.sample_rate != sample_rate {
                return Err(SignalError::RateMismatch {
                    expected: sample_rate,
                    found: s.sample_rate,
                });
            }
            if s.samples.len() > out.len() {
                out.resize(s.samples.len(), T::zero());
            }
            for (acc, &x) in out.iter_mut().zip(&s.samples) {
                *acc = *acc + x;
            }
        }
        Ok(Self::from_finite(out, sample_rate.max(1)))
    }

    /// Largest absolute amplitude, `0` for an empty signal.
    pub fn peak(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |m, &s| if s.abs() > m { s.abs() } else { m })
    }

    /// Window `[start, start + length)`, zero-padded past the end.
    pub fn frame(&self, start: usize, length: usize) -> Self {
        let mut out = vec![T::zero(); length];
        if start < self.samples.len() {
            let end = (start + length).min(self.samples.len());
            out[..end - start].copy_from_slice(&self.samples[start..end]);
        }
        Self::from_finite(out, self.sample_rate)
    }

    /// Like [`frame`](Self::frame) but wraps around the end, for looping sources.
    pub fn frame_looped(&self, start: usize, length: usize) -> Self {
        if self.samples.is_empty() {
            return Self::silent(length, self.sample_rate);
        }
        let n = self.samples.len();
        let out = (0..length).map(|i| self.samples[(start + i) % n]).collect();
        Self::from_finite(out, self.sample_rate)
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> T {
        self.samples.iter().map(|&s| s * s).sum()
    }

    pub fn rms(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        (self.energy() / T::from_usize(self.samples.len()).unwrap()).sqrt()
    }

    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|s| *s == T::zero())
    }

    /// Scales to unit peak; silent signals are returned unchanged.
    pub fn normalized(&self) -> Self {
        let p = self.peak();
        if p > T::zero() {
            self.scaled_unchecked(T::one() / p)
        } else {
            self.clone()
        }
    }

    /// Linear-interpolation resampling. The output keeps the same duration
    /// (rounded to whole samples at the new rate).
    pub fn resample_linear(&self, target_rate: u32) -> Result<Self, SignalError> {
        if target_rate == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if target_rate == self.sample_rate || self.samples.is_empty() {
            return Ok(Self::from_finite(self.samples.clone(), target_rate));
        }
        let n = self.samples.len();
        let out_len = ((n as f64) * target_rate as f64 / self.sample_rate as f64).round() as usize;
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let out = (0..out_len)
            .map(|i| {
                let pos = i as f64 * ratio;
                let lo = pos.floor() as usize;
                if lo + 1 >= n {
                    return self.samples[n - 1];
                }
                let frac = T::lit(pos - lo as f64);
                self.samples[lo] + (self.samples[lo + 1] - self.samples[lo]) * frac
            })
            .collect();
        Ok(Self::from_finite(out, target_rate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> HapticSignal<f64> {
        HapticSignal::new(v.to_vec(), DEFAULT_SAMPLE_RATE).unwrap()
    }

    #[test]
    fn scale_examples() {
        assert_eq!(sig(&[1.0, -0.5]).scale(1.0).unwrap().samples(), &[1.0, -0.5]);
        assert_eq!(sig(&[1.0, -0.5]).scale(0.0).unwrap().samples(), &[0.0, -0.0]);
        assert_eq!(sig(&[1.0]).scale(0.18394).unwrap().samples(), &[0.18394]);
        assert!(sig(&[1.0]).scale(f64::NAN).is_err());
        assert!(sig(&[1.0]).scale(f64::INFINITY).is_err());
        assert!(sig(&[1.0]).scale(-1.0).is_err());
    }

    #[test]
    fn sum_examples() {
        let empty: Vec<HapticSignal<f64>> = vec![];
        assert!(HapticSignal::sum(DEFAULT_SAMPLE_RATE, &empty).unwrap().is_empty());
        let s = HapticSignal::sum(DEFAULT_SAMPLE_RATE, &[sig(&[0.4, 0.4]), sig(&[0.5, 0.5])]).unwrap();
        assert!((s.samples()[0] - 0.9).abs() < 1e-15 && (s.samples()[1] - 0.9).abs() < 1e-15);
        let s = HapticSignal::sum(DEFAULT_SAMPLE_RATE, &[sig(&[1.0]), sig(&[0.5, 0.5])]).unwrap();
        assert_eq!(s.samples(), &[1.5, 0.5]);
        let other = HapticSignal::new(vec![1.0], 4000).unwrap();
        assert_eq!(
            HapticSignal::sum(DEFAULT_SAMPLE_RATE, &[sig(&[1.0]), other]),
            Err(SignalError::RateMismatch { expected: 8000, found: 4000 })
        );
    }

    #[test]
    fn peak_examples() {
        assert_eq!(sig(&[0.2, -0.9, 0.5]).peak(), 0.9);
        assert_eq!(sig(&[]).peak(), 0.0);
        assert_eq!(sig(&[0.0, 0.0]).peak(), 0.0);
    }

    #[test]
    fn frame_examples() {
        assert_eq!(sig(&[1.0, 2.0, 3.0, 4.0]).frame(1, 2).samples(), &[2.0, 3.0]);
        assert_eq!(sig(&[1.0, 2.0]).frame(1, 3).samples(), &[2.0, 0.0, 0.0]);
        assert_eq!(sig(&[1.0, 2.0]).frame(5, 2).samples(), &[0.0, 0.0]);
        assert_eq!(sig(&[1.0, 2.0, 3.0]).frame_looped(2, 4).samples(), &[3.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_finite_samples_and_zero_rate() {
        assert_eq!(
            HapticSignal::new(vec![0.0, f64::NAN], 8000),
            Err(SignalError::NonFiniteSample { index: 1 })
        );
        assert_eq!(HapticSignal::<f64>::new(vec![], 0), Err(SignalError::ZeroSampleRate));
    }

    #[test]
    fn resample_keeps_duration_and_interpolates() {
        let s = HapticSignal::new(vec![0.0, 1.0, 0.0, -1.0], 4000).unwrap();
        let r = s.resample_linear(8000).unwrap();
        assert_eq!(r.len(), 8);
        assert_eq!(r.samples()[1], 0.5);
        assert_eq!(r.samples()[2], 1.0);
    }

    #[test]
    fn works_in_single_precision() {
        let s = HapticSignal::new(vec![0.5f32, -0.25], 8000).unwrap();
        assert_eq!(s.scale(2.0).unwrap().peak(), 1.0f32);
    }

    fn samples() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 0..64)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
    }

    proptest! {
        #[test]
        fn scale_composes(v in samples(), a in 0.0f64..4.0, b in 0.0f64..4.0) {
            let s = sig(&v);
            let once = s.scale(a * b).unwrap();
            let twice = s.scale(a).unwrap().scale(b).unwrap();
            prop_assert!(close(once.samples(), twice.samples(), 1e-12));
        }

        #[test]
        fn sum_commutes_and_associates(a in samples(), b in samples(), c in samples()) {
            let (a, b, c) = (sig(&a), sig(&b), sig(&c));
            let ab = HapticSignal::sum(8000, [&a, &b]).unwrap();
            let ba = HapticSignal::sum(8000, [&b, &a]).unwrap();
            prop_assert!(close(ab.samples(), ba.samples(), 1e-12));
            let ab_c = HapticSignal::sum(8000, [&ab, &c]).unwrap();
            let bc = HapticSignal::sum(8000, [&b, &c]).unwrap();
            let a_bc = HapticSignal::sum(8000, [&a, &bc]).unwrap();
            prop_assert!(close(ab_c.samples(), a_bc.samples(), 1e-12));
        }

        #[test]
        fn peak_is_homogeneous(v in samples(), g in 0.0f64..8.0) {
            let s = sig(&v);
            let lhs = s.scale(g).unwrap().peak();
            let rhs = g * s.peak();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn tiled_frames_preserve_energy(v in samples(), len in 1usize..17) {
            let s = sig(&v);
            let mut total = 0.0;
            let mut start = 0;
            while start < s.len() {
                let f = s.frame(start, len);
                prop_assert_eq!(f.len(), len);
                total += f.energy();
                start += len;
            }
            prop_assert!((total - s.energy()).abs() <= 1e-12 * s.energy().max(1.0));
        }
    }
}
