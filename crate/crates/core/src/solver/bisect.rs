//! Minimal time by bisection on the sign of the feasibility margin.
//!
//! Modes and channels that do not interact through the coupling matrix are
//! solved separately: each connected block of the mode–channel graph has its
//! own minimal time, and the overall minimal time is the largest of them.
//! Inside a block the optimal dual direction has no forced zeros, which keeps
//! the extracted control vertex-valued.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::reduced_system::{propagate_from, ChannelSchedule, ControlBounds, ControlTrajectory, Plant};

use super::extract::extract_bangbang;
use super::support::{minimize_margin, support, target_offset, MarginFunction, SphereOptions};
use super::{Method, SolveReport, SolverOptions};

/// Couplings this small relative to the largest entry are treated as zero.
const PRUNE: f64 = 1e-12;

struct Block {
    modes: Vec<usize>,
    channels: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn blocks(plant: &Plant) -> Vec<Block> {
    let (m, k) = (plant.modes(), plant.channels());
    let b = plant.coupling();
    let threshold = PRUNE * b.amax();
    let mut parent: Vec<usize> = (0..m + k).collect();
    for i in 0..m {
        for j in 0..k {
            if b[(i, j)].abs() > threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, m + j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut out: Vec<(usize, Block)> = Vec::new();
    for node in 0..m + k {
        let root = find(&mut parent, node);
        let idx = match out.iter().position(|(r, _)| *r == root) {
            Some(p) => p,
            None => {
                out.push((root, Block { modes: vec![], channels: vec![] }));
                out.len() - 1
            }
        };
        if node < m {
            out[idx].1.modes.push(node);
        } else {
            out[idx].1.channels.push(node - m);
        }
    }
    out.into_iter().map(|(_, b)| b).collect()
}

fn sub_plant(plant: &Plant, block: &Block) -> Result<Plant> {
    let threshold = PRUNE * plant.coupling().amax();
    let coupling = DMatrix::from_fn(block.modes.len(), block.channels.len(), |a, c| {
        let v = plant.coupling()[(block.modes[a], block.channels[c])];
        if v.abs() > threshold {
            v
        } else {
            0.0
        }
    });
    Plant::new(
        block.modes.iter().map(|&i| plant.rates()[i]).collect(),
        coupling,
        block.modes.iter().map(|&i| plant.initial()[i]).collect(),
        ControlBounds::new(block.channels.iter().map(|&j| plant.bounds().get(j)).collect())?,
    )
}

/// Terminal state of the extremal control generated by `(η, T)`, and the
/// normalization defect of `η`.
fn residual(plant: &Plant, x: &[f64]) -> DVector<f64> {
    let m = plant.modes();
    let (eta, horizon) = (&x[..m], x[m]);
    let (_, point) = support(plant, horizon, eta);
    let offset = target_offset(plant, horizon);
    let mut r = DVector::zeros(m + 1);
    for i in 0..m {
        r[i] = point[i] - offset[i];
    }
    r[m] = 0.5 * (eta.iter().map(|e| e * e).sum::<f64>() - 1.0);
    r
}

/// Levenberg–Marquardt on `(η, T)` with a central-difference Jacobian.
fn polish(plant: &Plant, eta: &[f64], horizon: f64, target: f64) -> Option<(Vec<f64>, f64)> {
    let m = plant.modes();
    let mut x: Vec<f64> = eta.iter().copied().chain([horizon]).collect();
    let mut r = residual(plant, &x);
    let mut mu = 1e-10;
    // stalling close to the target still beats the bisection bracket
    let finish = |x: &[f64], r: &DVector<f64>, limit: f64| {
        (r.norm() <= limit).then(|| {
            let mut e = x[..m].to_vec();
            let n = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            e.iter_mut().for_each(|v| *v /= n);
            (e, x[m])
        })
    };
    for _ in 0..60 {
        if r.norm() <= target {
            return finish(&x, &r, target);
        }
        let mut jac = DMatrix::zeros(m + 1, m + 1);
        for c in 0..=m {
            let h = 1e-7 * x[c].abs().max(if c == m { x[m] } else { 1.0 });
            let mut up = x.clone();
            let mut dn = x.clone();
            up[c] += h;
            dn[c] -= h;
            if c == m && dn[c] <= 0.0 {
                return finish(&x, &r, 1e3 * target);
            }
            let d = (residual(plant, &up) - residual(plant, &dn)) / (2.0 * h);
            jac.set_column(c, &d);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        while mu < 1e8 {
            let mut lhs = jtj.clone();
            for d in 0..=m {
                lhs[(d, d)] += mu * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = lhs.lu().solve(&(-&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if trial[m] > 0.0 {
                let tr = residual(plant, &trial);
                if tr.norm() < r.norm() {
                    x = trial;
                    r = tr;
                    mu = (mu * 0.1).max(1e-14);
                    improved = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(&x, &r, 1e3 * target)
}

struct BlockSolution {
    horizon: f64,
    eta: Vec<f64>,
    control: ControlTrajectory,
}

fn sphere_options(opts: &SolverOptions) -> SphereOptions {
    SphereOptions {
        random_starts: opts.random_starts,
        seed: opts.seed,
        ..SphereOptions::default()
    }
}

fn solve_block(plant: &Plant, opts: &SolverOptions) -> Result<BlockSolution> {
    let sphere = sphere_options(opts);
    let z_norm = plant.initial().iter().map(|v| v * v).sum::<f64>().sqrt();

    // every start is tried unless one already certifies infeasibility
    let mut warm: Option<Vec<f64>> = None;
    let margin_at = |t: f64, warm: &mut Option<Vec<f64>>| -> Result<(f64, Vec<f64>)> {
        let f = MarginFunction::new(plant, t);
        let best = minimize_margin(&f, warm.as_deref(), &sphere, Some(0.0))?;
        *warm = Some(best.eta.clone());
        Ok((best.value, best.eta))
    };

    let mut lo = 0.0;
    let mut hi = opts.t_hi;
    let mut hi_eta;
    loop {
        if hi > opts.horizon_cap {
            return Err(Error::InfeasibleWithinHorizon { cap: opts.horizon_cap });
        }
        let (value, eta) = margin_at(hi, &mut warm)?;
        if value >= 0.0 {
            hi_eta = eta;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        let (value, eta) = margin_at(mid, &mut warm)?;
        if value >= 0.0 {
            hi = mid;
            hi_eta = eta;
        } else {
            lo = mid;
        }
    }

    let target = 1e-12 * z_norm.max(1.0);
    let polished = polish(plant, &hi_eta, hi, target).filter(|(_, t)| *t >= lo - opts.tol && *t <= hi + opts.tol);
    let (horizon, eta) = match polished {
        Some((e, t)) => (t, e),
        None => (hi, hi_eta),
    };
    let control = extract_bangbang(plant, horizon, &eta)?;
    Ok(BlockSolution { horizon, eta, control })
}

/// Minimal time of `ż = -Az + Bα`, `|α_j| ≤ ā_j`, from `z0` to `0`, with
/// the time-optimal bang-bang control.
pub fn min_time_bisect(plant: &Plant, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let (m, k) = (plant.modes(), plant.channels());
    let mut solutions: Vec<(Block, BlockSolution)> = Vec::new();
    for block in blocks(plant) {
        if block.modes.iter().all(|&i| plant.initial()[i] == 0.0) {
            continue;
        }
        if block.channels.is_empty() {
            // an unactuated mode decays but never reaches zero
            return Err(Error::InfeasibleWithinHorizon { cap: opts.horizon_cap });
        }
        let sub = sub_plant(plant, &block)?;
        let sol = solve_block(&sub, opts)?;
        solutions.push((block, sol));
    }

    let horizon = solutions.iter().map(|(_, s)| s.horizon).fold(0.0, f64::max);
    if horizon == 0.0 {
        return Ok(SolveReport {
            optimal_time: 0.0,
            control: ControlTrajectory::empty(k),
            feasibility_margin: 0.0,
            dual_direction: None,
            terminal_error: 0.0,
            method: Method::Bisection,
        });
    }

    let mut channels: Vec<ChannelSchedule> = (0..k)
        .map(|_| ChannelSchedule::constant(horizon, 0.0))
        .collect::<Result<_>>()?;
    for (block, sol) in &solutions {
        for (c, &j) in block.channels.iter().enumerate() {
            let sched = &sol.control.channels()[c];
            let mut times = sched.times().to_vec();
            let mut values = sched.values().to_vec();
            if sol.horizon < horizon {
                times.push(horizon);
                values.push(0.0);
            } else {
                *times.last_mut().expect("nonempty") = horizon;
            }
            channels[j] = ChannelSchedule::new(times, values)?;
        }
    }
    let control = ControlTrajectory::new(horizon, channels)?;
    let z = propagate_from(plant.rates(), plant.coupling(), plant.initial(), &control, horizon);
    let terminal_error = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(terminal_error <= 1e-6) {
        return Err(Error::ExtractionFailed { terminal_error });
    }

    let (critical, sol) = solutions
        .iter()
        .max_by(|a, b| a.1.horizon.total_cmp(&b.1.horizon))
        .expect("horizon > 0 implies a solved block");
    let mut eta = vec![0.0; m];
    for (a, &i) in critical.modes.iter().enumerate() {
        eta[i] = sol.eta[a];
    }
    let f = MarginFunction::new(plant, horizon);
    let feasibility_margin = f.eval(&eta).0.min(
        minimize_margin(&f, Some(&eta), &sphere_options(opts), None)
            .map(|b| b.value)
            .unwrap_or(f64::INFINITY),
    );

    Ok(SolveReport {
        optimal_time: horizon,
        control,
        feasibility_margin,
        dual_direction: Some(eta),
        terminal_error,
        method: Method::Bisection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced_system::build_reduced;
    use crate::solver::diagonal::diagonal_synthesis;
    use crate::spectral_domain::{build_interval_basis, ControlRegion};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    #[test]
    fn scalar_minimal_time_is_one() {
        let p = Plant::new(vec![1.0], DMatrix::from_element(1, 1, 1.0), vec![E - 1.0], ControlBounds::uniform(1, 1.0).unwrap()).unwrap();
        let r = min_time_bisect(&p, &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(r.optimal_time, 1.0, epsilon = 1e-9);
        assert!(r.terminal_error <= 1e-9);
    }

    #[test]
    fn full_domain_matches_closed_form() {
        let basis = build_interval_basis(1.0, 2).unwrap();
        let region = ControlRegion::full(&basis.domain());
        let sys = build_reduced(&basis, &region, &[1.0, 1.0], 2, 2, ControlBounds::uniform(2, 1.0).unwrap()).unwrap();
        let exact = diagonal_synthesis(&sys).unwrap();
        let r = min_time_bisect(sys.plant(), &SolverOptions::default()).unwrap();
        assert_abs_diff_eq!(r.optimal_time, exact.optimal_time, epsilon = 1e-6);
        assert!(r.terminal_error <= 1e-6);
    }

    #[test]
    fn unactuated_mode_is_infeasible() {
        let basis = build_interval_basis(1.0, 2).unwrap();
        let region = ControlRegion::full(&basis.domain());
        let sys = build_reduced(&basis, &region, &[0.0, 1.0], 2, 1, ControlBounds::uniform(1, 1.0).unwrap()).unwrap();
        let opts = SolverOptions { horizon_cap: 50.0, ..SolverOptions::default() };
        assert_eq!(
            min_time_bisect(sys.plant(), &opts).unwrap_err(),
            Error::InfeasibleWithinHorizon { cap: 50.0 }
        );
    }

    #[test]
    fn proper_region_single_channel() {
        let basis = build_interval_basis(1.0, 2).unwrap();
        let region = ControlRegion::new(&basis.domain(), &[(0.21, 0.54)]).unwrap();
        let sys = build_reduced(&basis, &region, &[1.0, 0.0], 2, 1, ControlBounds::uniform(1, 1.0).unwrap()).unwrap();
        let r = min_time_bisect(sys.plant(), &SolverOptions::default()).unwrap();
        assert!(r.optimal_time > 0.0 && r.optimal_time.is_finite());
        assert!(r.terminal_error <= 1e-6);
        assert!(r.control.channels()[0].values().len() <= 2);
    }
}
