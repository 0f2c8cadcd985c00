//! WAV, CSV and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{ListenerOutput, RunStats};
use crate::real::Real;
use crate::signal::HapticSignal;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ExportError {
    ExportError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Wav,
    Csv,
    Both,
}

impl ExportFormat {
    pub fn wav(self) -> bool {
        matches!(self, ExportFormat::Wav | ExportFormat::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, ExportFormat::Csv | ExportFormat::Both)
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "wav" => Ok(ExportFormat::Wav),
            "csv" => Ok(ExportFormat::Csv),
            "both" => Ok(ExportFormat::Both),
            other => Err(format!("unknown format '{other}' (expected wav, csv or both)")),
        }
    }
}

/// 16-bit PCM sample; amplitudes are clipped to [-1, 1] here and nowhere else.
pub fn to_pcm16<T: Real>(x: T) -> i16 {
    let v = x.as_f64().clamp(-1.0, 1.0);
    (v * f64::from(i16::MAX)).round() as i16
}

pub fn write_wav<T: Real>(path: &Path, signal: &HapticSignal<T>) -> Result<(), ExportError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| io_err(path, e))?;
    for &x in signal.samples() {
        w.write_sample(to_pcm16(x)).map_err(|e| io_err(path, e))?;
    }
    w.finalize().map_err(|e| io_err(path, e))
}

/// `time_s,amplitude` rows; amplitudes use the shortest round-trip form.
pub fn to_csv<T: Real>(signal: &HapticSignal<T>) -> String {
    let mut out = String::with_capacity(signal.len() * 24 + 16);
    out.push_str("time_s,amplitude\n");
    let rate = f64::from(signal.sample_rate());
    for (i, &x) in signal.samples().iter().enumerate() {
        let _ = writeln!(out, "{:.6},{}", i as f64 / rate, x.as_f64());
    }
    out
}

pub fn write_csv<T: Real>(path: &Path, signal: &HapticSignal<T>) -> Result<(), ExportError> {
    fs::write(path, to_csv(signal)).map_err(|e| io_err(path, e))
}

pub fn write_stats(path: &Path, stats: &RunStats) -> Result<(), ExportError> {
    let text = serde_json::to_string_pretty(stats).expect("stats always serialize");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn read_stats(path: &Path) -> Result<RunStats, ExportError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| ExportError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `<dir>/<listener>.wav` and/or `.csv` for every listener and
/// returns the paths in listener order.
pub fn export_outputs<T: Real>(dir: &Path, output: &ListenerOutput<T>, format: ExportFormat) -> Result<Vec<PathBuf>, ExportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    for (id, signal) in &output.listeners {
        if format.wav() {
            let p = dir.join(format!("{id}.wav"));
            write_wav(&p, signal)?;
            written.push(p);
        }
        if format.csv() {
            let p = dir.join(format!("{id}.csv"));
            write_csv(&p, signal)?;
            written.push(p);
        }
    }
    Ok(written)
}
