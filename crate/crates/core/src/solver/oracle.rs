//! Exhaustive search over vertex-valued controls on a uniform partition.
//!
//! Independent of the dual machinery: it only propagates the plant exactly.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::reduced_system::Plant;

/// Largest supported channel count and segment count.
pub const MAX_CHANNELS: usize = 2;
pub const MAX_SEGMENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub horizon: f64,
    /// Smallest terminal norm over all vertex controls.
    pub best_norm: f64,
    /// Coarse tolerance the best norm is compared against.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Smallest grid horizon whose best terminal norm is within tolerance.
    pub estimate: Option<f64>,
    pub samples: Vec<OracleSample>,
    /// Largest spacing between consecutive grid horizons (the first spacing
    /// is measured from 0).
    pub grid_step: f64,
    /// Time uncertainty of the estimate from confining switches to segment
    /// boundaries: each of the `m − 1` switches may sit up to one segment
    /// either side, and the tolerance admits an overshoot of one grid step,
    /// so `2 · max(m − 1, 0) · T / q + ΔT` at the estimate.
    pub slack: f64,
}

impl OracleReport {
    /// Whether `t` lies within one grid step plus the slack of the estimate.
    pub fn brackets(&self, t: f64) -> bool {
        self.estimate
            .is_some_and(|e| (t - e).abs() <= self.grid_step + self.slack)
    }
}

/// For each horizon, every control taking values `±ā_j` on each of `q`
/// uniform segments is propagated exactly.
///
/// The tolerance at horizon `T` is
/// `Σ_j ā_j |B e_j| · (max(m − 1, 0) · T / q + ΔT)`: moving one switch to the
/// nearest segment boundary moves the endpoint by at most `ā_j |B e_j| T / q`,
/// the optimal control has at most `m − 1` switches per channel, and a grid
/// horizon overshoots the optimum by at most `ΔT`.
pub fn brute_force_min_time(plant: &Plant, q: usize, grid: &[f64]) -> Result<OracleReport> {
    let (m, k) = (plant.modes(), plant.channels());
    if k > MAX_CHANNELS || q > MAX_SEGMENTS || q == 0 {
        return Err(invalid(format!(
            "oracle budget exceeded: k = {k}, q = {q} (need k ≤ {MAX_CHANNELS}, 1 ≤ q ≤ {MAX_SEGMENTS})"
        )));
    }
    if grid.is_empty() || grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(invalid("horizon grid must be nonempty and positive"));
    }
    let mut horizons = grid.to_vec();
    horizons.sort_by(f64::total_cmp);
    horizons.dedup();
    let grid_step = horizons
        .iter()
        .scan(0.0, |prev, &t| {
            let d = t - *prev;
            *prev = t;
            Some(d)
        })
        .fold(0.0, f64::max);

    if plant.initial().iter().all(|&z| z == 0.0) {
        return Ok(OracleReport {
            estimate: Some(0.0),
            samples: Vec::new(),
            grid_step,
            slack: 0.0,
        });
    }

    let b = plant.coupling();
    let speed: f64 = (0..k).map(|j| plant.bounds().get(j) * b.column(j).norm()).sum();
    let vertices = 1usize << k;
    let mut samples = Vec::with_capacity(horizons.len());
    let mut estimate = None;
    for &t in &horizons {
        let h = t / q as f64;
        let free: Vec<f64> = (0..m).map(|i| (-plant.rates()[i] * t).exp() * plant.initial()[i]).collect();
        // contribution[s][v][i]: effect of vertex v held on segment s
        let contribution: Vec<Vec<Vec<f64>>> = (0..q)
            .map(|s| {
                (0..vertices)
                    .map(|v| {
                        (0..m)
                            .map(|i| {
                                let l = plant.rates()[i];
                                let gain = (-l * (t - (s + 1) as f64 * h)).exp() * -(-l * h).exp_m1() / l;
                                let forcing: f64 = (0..k)
                                    .map(|j| {
                                        let sign = if v >> j & 1 == 1 { 1.0 } else { -1.0 };
                                        b[(i, j)] * sign * plant.bounds().get(j)
                                    })
                                    .sum();
                                gain * forcing
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut best = f64::INFINITY;
        let mut z = vec![0.0; m];
        for code in 0..vertices.pow(q as u32) {
            z.copy_from_slice(&free);
            let mut c = code;
            for seg in &contribution {
                let v = c % vertices;
                c /= vertices;
                for (zi, di) in z.iter_mut().zip(&seg[v]) {
                    *zi += di;
                }
            }
            best = best.min(z.iter().map(|x| x * x).sum::<f64>());
        }
        let best_norm = best.sqrt();
        let tolerance = (speed * (m.saturating_sub(1) as f64 * h + grid_step)).max(1e-9);
        if estimate.is_none() && best_norm <= tolerance {
            estimate = Some(t);
        }
        samples.push(OracleSample { horizon: t, best_norm, tolerance });
    }
    let slack = estimate.map_or(0.0, |e| 2.0 * m.saturating_sub(1) as f64 * e / q as f64 + grid_step);
    Ok(OracleReport { estimate, samples, grid_step, slack })
}
