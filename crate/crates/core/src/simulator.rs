//! Forward simulation of the heat equation truncated to `M` modes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::reduced_system::{project_initial, step_exact, ControlTrajectory};
use crate::spectral_domain::{coupling_matrix, ControlRegion, EigenBasis};

/// Default truncation for a problem reduced to `m` modes.
pub fn default_truncation(m: usize) -> usize {
    20.max(4 * m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedTrajectory {
    pub times: Vec<f64>,
    /// `states[r]` holds the `M` mode coefficients at `times[r]`.
    pub states: Vec<Vec<f64>>,
}

impl TruncatedTrajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }
}

/// Evolves every mode of `basis` under `traj`, using the full coupling rows
/// `⟨χ_ω ξ_i, ξ_j⟩` for all `i ≤ M`.
///
/// Samples are `samples` uniform times on `[0, T]` together with every
/// switching time of the control.
pub fn simulate_truncated(
    basis: &EigenBasis,
    region: &ControlRegion,
    traj: &ControlTrajectory,
    y0_coeffs: &[f64],
    samples: usize,
) -> Result<TruncatedTrajectory> {
    let modes = basis.len();
    let k = traj.channel_count();
    if k > modes {
        return Err(invalid(format!("{k} control channels exceed the {modes} simulated modes")));
    }
    let coupling = coupling_matrix(basis, region, modes, k)?;
    let rates = basis.eigenvalues();
    let horizon = traj.horizon();

    let mut times = traj.breakpoints();
    if samples >= 2 {
        times.extend((0..samples).map(|r| horizon * r as f64 / (samples - 1) as f64));
    }
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut z = project_initial(y0_coeffs, modes);
    let mut states = Vec::with_capacity(times.len());
    states.push(z.clone());
    let mut forcing = vec![0.0; modes];
    for w in times.windows(2) {
        let v = traj.value_at(0.5 * (w[0] + w[1]));
        for (i, f) in forcing.iter_mut().enumerate() {
            *f = (0..k).map(|j| coupling[(i, j)] * v[j]).sum();
        }
        step_exact(rates, &mut z, &forcing, w[1] - w[0]);
        states.push(z.clone());
    }
    Ok(TruncatedTrajectory { times, states })
}

/// Distance to the target subspace spanned by modes `m + 1` onward.
pub fn target_distance(state: &[f64], m: usize) -> f64 {
    state.iter().take(m).map(|v| v * v).sum::<f64>().sqrt()
}
