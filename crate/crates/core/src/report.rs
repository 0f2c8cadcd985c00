//! Comparison of two runs' statistics.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::RunStats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("listener sets differ (only in a: {only_a:?}, only in b: {only_b:?})")]
    ListenerMismatch { only_a: Vec<String>, only_b: Vec<String> },
    #[error("tick counts differ: {a} vs {b}")]
    TickMismatch { a: u64, b: u64 },
}

/// Deltas are `b - a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListenerDelta {
    pub id: String,
    pub rms_a: f64,
    pub rms_b: f64,
    pub rms_delta: f64,
    pub peak_a: f64,
    pub peak_b: f64,
    pub peak_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub listeners: Vec<ListenerDelta>,
    /// Per-tick `active_b - active_a`.
    pub active_listener_delta: Vec<i64>,
}

impl DiffReport {
    pub fn is_zero(&self) -> bool {
        self.listeners.iter().all(|l| l.rms_delta == 0.0 && l.peak_delta == 0.0)
            && self.active_listener_delta.iter().all(|d| *d == 0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>12} {:>12} {:>12} {:>12}", "listener", "rms_a", "rms_b", "rms_delta", "peak_delta");
        for l in &self.listeners {
            let _ = writeln!(
                out,
                "{:<20} {:>12.6} {:>12.6} {:>+12.6} {:>+12.6}",
                l.id, l.rms_a, l.rms_b, l.rms_delta, l.peak_delta
            );
        }
        let changed = self.active_listener_delta.iter().filter(|d| **d != 0).count();
        let max = self.active_listener_delta.iter().map(|d| d.abs()).max().unwrap_or(0);
        let _ = writeln!(
            out,
            "active listeners: {changed} of {} ticks differ, max |delta| = {max}",
            self.active_listener_delta.len()
        );
        out
    }
}

/// Matches listeners by id. Both runs must cover the same listeners and
/// tick count.
pub fn diff_runs(a: &RunStats, b: &RunStats) -> Result<DiffReport, DiffError> {
    let ids_a: BTreeSet<&str> = a.listeners.iter().map(|l| l.id.as_str()).collect();
    let ids_b: BTreeSet<&str> = b.listeners.iter().map(|l| l.id.as_str()).collect();
    if ids_a != ids_b {
        return Err(DiffError::ListenerMismatch {
            only_a: ids_a.difference(&ids_b).map(|s| s.to_string()).collect(),
            only_b: ids_b.difference(&ids_a).map(|s| s.to_string()).collect(),
        });
    }
    if a.ticks != b.ticks || a.active_listeners_per_tick.len() != b.active_listeners_per_tick.len() {
        return Err(DiffError::TickMismatch { a: a.ticks, b: b.ticks });
    }
    let listeners = a
        .listeners
        .iter()
        .map(|la| {
            let lb = b.listeners.iter().find(|l| l.id == la.id).expect("same id sets");
            ListenerDelta {
                id: la.id.clone(),
                rms_a: la.rms,
                rms_b: lb.rms,
                rms_delta: lb.rms - la.rms,
                peak_a: la.peak,
                peak_b: lb.peak,
                peak_delta: lb.peak - la.peak,
            }
        })
        .collect();
    let active_listener_delta = a
        .active_listeners_per_tick
        .iter()
        .zip(&b.active_listeners_per_tick)
        .map(|(x, y)| *y as i64 - *x as i64)
        .collect();
    Ok(DiffReport {
        listeners,
        active_listener_delta,
    })
}
