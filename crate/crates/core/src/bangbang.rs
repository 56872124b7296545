//! Bang-bang verification and switching structure of piecewise-constant
//! controls.

use serde::{Deserialize, Serialize};

use crate::reduced_system::{ControlBounds, ControlTrajectory};

/// Default bound on the off-vertex time fraction.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// `|v| < ā (1 − VERTEX_GAP)` counts as off the vertex.
pub const VERTEX_GAP: f64 = 1e-9;
/// `|v| ≤ IDLE_THRESHOLD · ā` counts as exactly zero.
pub const IDLE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// 1-based channel index.
    pub channel: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BangBangReport {
    pub is_bang_bang: bool,
    pub tolerance: f64,
    /// Per channel, the fraction of `[0, T]` spent off the vertices.
    pub off_vertex_fraction: Vec<f64>,
    /// Maximal intervals on which a channel is zero.
    pub idle_intervals: Vec<Interval>,
    /// Maximal intervals on which a channel is off the vertices (idle ones
    /// included).
    pub off_vertex_intervals: Vec<Interval>,
    pub switching_counts: Vec<usize>,
}

/// Appends `[a, b]` to `list`, extending the last interval when contiguous.
fn push_merged(list: &mut Vec<Interval>, channel: usize, a: f64, b: f64) {
    match list.last_mut() {
        Some(last) if last.channel == channel && last.end == a => last.end = b,
        _ => list.push(Interval { channel, start: a, end: b }),
    }
}

/// Measures how far `traj` is from taking only the values `±ā_j`.
///
/// The trajectory is bang-bang when every channel's off-vertex fraction is at
/// most `tol_fraction` and no idle interval is longer than `tol_fraction · T`.
/// A zero-length trajectory is vacuously bang-bang.
pub fn verify_bangbang(traj: &ControlTrajectory, bounds: &ControlBounds, tol_fraction: f64) -> BangBangReport {
    let horizon = traj.horizon();
    let mut off_vertex_fraction = Vec::with_capacity(traj.channel_count());
    let mut idle_intervals = Vec::new();
    let mut off_vertex_intervals = Vec::new();
    for (j, ch) in traj.channels().iter().enumerate() {
        let bound = bounds.as_slice().get(j).copied().unwrap_or(f64::INFINITY);
        let mut off = 0.0;
        for (a, b, v) in ch.segments() {
            if v.abs() < bound * (1.0 - VERTEX_GAP) {
                off += b - a;
                push_merged(&mut off_vertex_intervals, j + 1, a, b);
                if v.abs() <= IDLE_THRESHOLD * bound {
                    push_merged(&mut idle_intervals, j + 1, a, b);
                }
            }
        }
        off_vertex_fraction.push(if horizon > 0.0 { off / horizon } else { 0.0 });
    }
    let long_idle = idle_intervals.iter().any(|iv| iv.end - iv.start > tol_fraction * horizon);
    let is_bang_bang = off_vertex_fraction.iter().all(|&f| f <= tol_fraction) && !long_idle;
    BangBangReport {
        is_bang_bang,
        tolerance: tol_fraction,
        off_vertex_fraction,
        idle_intervals,
        off_vertex_intervals,
        switching_counts: switching_count(traj),
    }
}

/// Per channel, the number of sign changes between consecutive nonzero
/// segments. Zero segments break runs without counting as switches.
pub fn switching_count(traj: &ControlTrajectory) -> Vec<usize> {
    traj.channels()
        .iter()
        .map(|ch| {
            let mut count = 0;
            let mut prev: Option<bool> = None;
            for &v in ch.values() {
                if v == 0.0 {
                    prev = None;
                    continue;
                }
                let positive = v > 0.0;
                if prev.is_some_and(|p| p != positive) {
                    count += 1;
                }
                prev = Some(positive);
            }
            count
        })
        .collect()
}
