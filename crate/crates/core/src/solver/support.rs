//! Support function of the reachable set and the dual feasibility margin.
//!
//! With zero final state as target, `z(T) = 0` is reachable iff
//! `r(T) = -e^{-AT} z0` lies in the reachable set
//! `R_T = { ∫_0^T e^{-A(T-s)} B α(s) ds }`, whose support function is
//! `h_T(η) = Σ_j ā_j ∫_0^T |(Bᵀ e^{-Aτ} η)_j| dτ`.
//! The margin `min_{|η|=1} h_T(η) − ⟨r, η⟩` is nonnegative exactly when the
//! target is reachable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::exp_sum::{decay_integral, ExpSum};
use crate::reduced_system::Plant;

/// Switching function of channel `j` in time-to-go `τ = T − s`:
/// `τ ↦ Σ_i η_i B_ij e^{-λ_i τ}`.
pub(crate) fn switching_function(plant: &Plant, eta: &[f64], j: usize) -> ExpSum {
    let coefs: Vec<f64> = (0..plant.modes()).map(|i| eta[i] * plant.coupling()[(i, j)]).collect();
    ExpSum::new(&coefs, plant.rates())
}

/// `h_T(η)` and its gradient, which is the support point
/// `∫_0^T e^{-Aτ} B ā sgn(Bᵀ e^{-Aτ} η) dτ`.
pub(crate) fn support(plant: &Plant, horizon: f64, eta: &[f64]) -> (f64, Vec<f64>) {
    let m = plant.modes();
    let mut value = 0.0;
    let mut point = vec![0.0; m];
    for j in 0..plant.channels() {
        let bound = plant.bounds().get(j);
        let f = switching_function(plant, eta, j);
        for (a, b, sigma) in f.sign_pieces(0.0, horizon) {
            if sigma == 0.0 {
                continue;
            }
            value += bound * sigma * f.integral(a, b);
            for (i, p) in point.iter_mut().enumerate() {
                let bij = plant.coupling()[(i, j)];
                if bij != 0.0 {
                    *p += bound * sigma * bij * decay_integral(plant.rates()[i], a, b);
                }
            }
        }
    }
    (value, point)
}

/// `-e^{-AT} z0`.
pub(crate) fn target_offset(plant: &Plant, horizon: f64) -> Vec<f64> {
    plant
        .initial()
        .iter()
        .zip(plant.rates())
        .map(|(z, l)| -(-l * horizon).exp() * z)
        .collect()
}

/// `g_T(η) = h_T(η) − ⟨r, η⟩` together with `∇g = p(η) − r`.
pub(crate) struct MarginFunction<'a> {
    plant: &'a Plant,
    horizon: f64,
    offset: Vec<f64>,
}

impl<'a> MarginFunction<'a> {
    pub(crate) fn new(plant: &'a Plant, horizon: f64) -> Self {
        Self {
            plant,
            horizon,
            offset: target_offset(plant, horizon),
        }
    }

    pub(crate) fn eval(&self, eta: &[f64]) -> (f64, Vec<f64>) {
        let (h, mut grad) = support(self.plant, self.horizon, eta);
        let mut value = h;
        for ((g, r), e) in grad.iter_mut().zip(&self.offset).zip(eta) {
            value -= r * e;
            *g -= r;
        }
        (value, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereOptions {
    pub random_starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            random_starts: 32,
            seed: 0,
            max_iterations: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SphereMinimum {
    pub value: f64,
    pub eta: Vec<f64>,
    pub start_index: usize,
    pub restarts: usize,
}

struct Local {
    value: f64,
    eta: Vec<f64>,
    converged: bool,
    gradient_norm: f64,
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Tangential part of `grad` at the unit vector `eta`.
fn tangent(grad: &[f64], eta: &[f64]) -> Vec<f64> {
    let radial = dot(grad, eta);
    grad.iter().zip(eta).map(|(g, e)| g - radial * e).collect()
}

/// Projected gradient descent on the unit sphere with Barzilai–Borwein trial
/// steps and Armijo backtracking.
fn descend(f: &MarginFunction<'_>, start: Vec<f64>, max_iterations: usize, stop_below: Option<f64>) -> Local {
    let mut eta = start;
    let (mut value, grad) = f.eval(&eta);
    let mut tg = tangent(&grad, &eta);
    let mut gnorm = dot(&tg, &tg).sqrt();
    let scale = 1.0 + dot(&grad, &grad).sqrt();
    let mut step = if gnorm > 0.0 { 0.5 / gnorm } else { 1.0 };
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    for _ in 0..max_iterations {
        if gnorm <= 1e-11 * scale {
            return Local { value, eta, converged: true, gradient_norm: gnorm };
        }
        if stop_below.is_some_and(|s| value < s) {
            return Local { value, eta, converged: true, gradient_norm: gnorm };
        }
        if let Some((pe, pg)) = &prev {
            let s: Vec<f64> = eta.iter().zip(pe).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = tg.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                step = (dot(&s, &s) / sy).clamp(1e-12 / gnorm, 1.0 / gnorm);
            }
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let mut trial: Vec<f64> = eta.iter().zip(&tg).map(|(e, g)| e - t * g).collect();
            if normalize(&mut trial) {
                let (tv, tgrad) = f.eval(&trial);
                if tv <= value - 1e-4 * t * gnorm * gnorm {
                    accepted = Some((trial, tv, tgrad));
                    break;
                }
            }
            t *= 0.5;
            if t * gnorm < 1e-16 {
                break;
            }
        }
        let Some((next, nv, ngrad)) = accepted else {
            // no decrease possible at working precision: a kink or a minimum
            return Local { value, eta, converged: true, gradient_norm: gnorm };
        };
        prev = Some((eta, tg));
        eta = next;
        value = nv;
        tg = tangent(&ngrad, &eta);
        gnorm = dot(&tg, &tg).sqrt();
        step = t;
    }
    Local {
        value,
        eta,
        converged: gnorm <= 1e-7 * scale,
        gradient_norm: gnorm,
    }
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        // Box–Muller pairs give isotropic directions
        let mut v: Vec<f64> = (0..m)
            .map(|_| {
                let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        if normalize(&mut v) {
            return v;
        }
    }
}

/// Starting directions: optional warm start, then `±e_i`, then seeded random
/// unit vectors.
fn starts(m: usize, warm: Option<&[f64]>, opts: &SphereOptions) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * m + opts.random_starts + 1);
    if let Some(w) = warm {
        let mut w = w.to_vec();
        if normalize(&mut w) {
            out.push(w);
        }
    }
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        out.push(random_unit(&mut rng, m));
    }
    out
}

/// Multi-start minimization of `g_T` on the unit sphere.
///
/// With `stop_below = Some(s)` the search returns as soon as any start
/// reaches a value below `s`.
pub(crate) fn minimize_margin(
    f: &MarginFunction<'_>,
    warm: Option<&[f64]>,
    opts: &SphereOptions,
    stop_below: Option<f64>,
) -> Result<SphereMinimum> {
    let m = f.plant.modes();
    let starts = starts(m, warm, opts);
    let restarts = starts.len();
    let mut best: Option<SphereMinimum> = None;
    let mut any_converged = false;
    let mut best_gnorm = f64::INFINITY;
    for (index, start) in starts.into_iter().enumerate() {
        let local = descend(f, start, opts.max_iterations, stop_below);
        any_converged |= local.converged;
        best_gnorm = best_gnorm.min(local.gradient_norm);
        if !local.value.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| local.value < b.value) {
            best = Some(SphereMinimum {
                value: local.value,
                eta: local.eta,
                start_index: index,
                restarts,
            });
        }
        if let (Some(s), Some(b)) = (stop_below, &best) {
            if b.value < s {
                return Ok(best.expect("set above"));
            }
        }
    }
    match best {
        Some(b) if any_converged => Ok(b),
        _ => Err(Error::NonConvergent {
            restarts,
            gradient_norm: best_gnorm,
        }),
    }
}

/// Dual feasibility margin at horizon `T` and the minimizing unit direction.
pub fn feasibility_margin(plant: &Plant, horizon: f64, opts: &SphereOptions) -> Result<(f64, Vec<f64>)> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let f = MarginFunction::new(plant, horizon);
    let best = minimize_margin(&f, None, opts, None)?;
    Ok((best.value, best.eta))
}
