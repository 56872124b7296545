//! Closed-form minimal times and controls when the control acts on the
//! whole domain and the coupling is the identity block.

use crate::error::{invalid, Error, Result};
use crate::exp_sum::sign;
use crate::reduced_system::{propagate_from, ChannelSchedule, ControlTrajectory, Plant, ReducedSystem};

use super::{Method, SolveReport};

/// Time for mode `i` to reach zero under the constant control `-sgn(z0) ā`:
/// `ln(1 + λ|z0|/ā) / λ`.
pub fn diagonal_mode_time(rate: f64, bound: f64, z0: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(invalid(format!("rate must be positive, got {rate}")));
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(invalid(format!("bound must be positive, got {bound}")));
    }
    if !z0.is_finite() {
        return Err(invalid(format!("initial coefficient must be finite, got {z0}")));
    }
    Ok((rate * z0.abs() / bound).ln_1p() / rate)
}

fn is_identity_block(plant: &Plant) -> bool {
    let b = plant.coupling();
    (0..plant.modes()).all(|i| (0..plant.channels()).all(|j| b[(i, j)] == if i == j { 1.0 } else { 0.0 }))
}

/// Minimal time `max_i T_i` over the actuated modes and the control that
/// drives each of them to zero at its own `T_i`, then idles.
pub fn diagonal_synthesis(system: &ReducedSystem) -> Result<SolveReport> {
    let plant = system.plant();
    let (m, k) = (system.m(), system.k());
    if !is_identity_block(plant) {
        return Err(Error::PreconditionViolation(
            "coupling is not the identity block of a full-domain control".into(),
        ));
    }
    let z0 = plant.initial();
    if let Some(i) = (k..m).find(|&i| z0[i] != 0.0) {
        return Err(Error::PreconditionViolation(format!(
            "mode {} has no actuator and z0_{} = {} ≠ 0: the target is unreachable",
            i + 1,
            i + 1,
            z0[i]
        )));
    }
    let active = m.min(k);
    let times: Vec<f64> = (0..active)
        .map(|i| diagonal_mode_time(plant.rates()[i], plant.bounds().get(i), z0[i]))
        .collect::<Result<_>>()?;
    let horizon = times.iter().copied().fold(0.0, f64::max);
    if horizon == 0.0 {
        return Ok(SolveReport {
            optimal_time: 0.0,
            control: ControlTrajectory::empty(k),
            feasibility_margin: 0.0,
            dual_direction: None,
            terminal_error: 0.0,
            method: Method::ClosedForm,
        });
    }

    let mut channels = Vec::with_capacity(k);
    for j in 0..k {
        let schedule = if j < active && times[j] > 0.0 {
            let v = -sign(z0[j]) * plant.bounds().get(j);
            if times[j] < horizon {
                ChannelSchedule::new(vec![0.0, times[j], horizon], vec![v, 0.0])?
            } else {
                ChannelSchedule::constant(horizon, v)?
            }
        } else {
            ChannelSchedule::constant(horizon, 0.0)?
        };
        channels.push(schedule);
    }
    let control = ControlTrajectory::new(horizon, channels)?;
    let z = propagate_from(plant.rates(), plant.coupling(), z0, &control, horizon);
    let terminal_error = z.iter().map(|v| v * v).sum::<f64>().sqrt();

    // on the sphere, g(η) = Σ_i (c_i |η_i| − r_i η_i) with c_i the reach of
    // mode i; at a feasible horizon its minimum is min_i (c_i − |r_i|)
    let feasibility_margin = (0..m)
        .map(|i| {
            let l = plant.rates()[i];
            let reach = if i < active {
                plant.bounds().get(i) * -(-l * horizon).exp_m1() / l
            } else {
                0.0
            };
            reach - (-l * horizon).exp() * z0[i].abs()
        })
        .fold(f64::INFINITY, f64::min);

    Ok(SolveReport {
        optimal_time: horizon,
        control,
        feasibility_margin,
        dual_direction: None,
        terminal_error,
        method: Method::ClosedForm,
    })
}
