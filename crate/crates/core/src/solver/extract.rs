//! Pontryagin extraction of a vertex-valued control from a dual direction.

use crate::error::{invalid, Error, Result};
use crate::reduced_system::{propagate_from, ChannelSchedule, ControlTrajectory, Plant};

use super::support::switching_function;

/// `ā_j sgn(s_j)` per channel, with `s_j(s) = (Bᵀ e^{-A(T-s)} η)_j`, in
/// forward time. `orientation` is `±1`.
fn oriented_control(plant: &Plant, horizon: f64, eta: &[f64], orientation: f64) -> Result<ControlTrajectory> {
    let mut channels = Vec::with_capacity(plant.channels());
    for j in 0..plant.channels() {
        let bound = plant.bounds().get(j);
        let f = switching_function(plant, eta, j);
        // pieces are in time-to-go τ = T − s; reverse them into forward time
        let pieces = f.sign_pieces(0.0, horizon);
        if pieces.len() > plant.modes().max(1) {
            return Err(Error::RootFinding(format!(
                "channel {} switching function has {} sign pieces for {} modes",
                j + 1,
                pieces.len(),
                plant.modes()
            )));
        }
        let mut times = vec![0.0];
        let mut values = Vec::with_capacity(pieces.len());
        for &(a, _, sigma) in pieces.iter().rev() {
            values.push(orientation * sigma * bound);
            times.push(horizon - a);
        }
        // the last reversed piece ends at τ = 0, i.e., exactly at T
        *times.last_mut().expect("nonempty") = horizon;
        // sign pieces never overlap, but floating reversal can collapse a
        // sliver piece onto its neighbour
        let mut t2 = vec![0.0];
        let mut v2 = Vec::with_capacity(values.len());
        for (w, &v) in times.windows(2).zip(&values) {
            if w[1] > *t2.last().expect("nonempty") {
                t2.push(w[1]);
                v2.push(v);
            }
        }
        channels.push(ChannelSchedule::new(t2, v2)?);
    }
    ControlTrajectory::new(horizon, channels)
}

pub(crate) fn terminal_norm(plant: &Plant, traj: &ControlTrajectory) -> f64 {
    let z = propagate_from(plant.rates(), plant.coupling(), plant.initial(), traj, traj.horizon());
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Vertex-valued control on `[0, T]` whose channels follow the sign of the
/// switching functions generated by `η`.
///
/// Both orientations are built; the one landing closer to zero is returned.
pub fn extract_bangbang(plant: &Plant, horizon: f64, eta: &[f64]) -> Result<ControlTrajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if eta.len() != plant.modes() {
        return Err(invalid(format!("direction has {} entries for {} modes", eta.len(), plant.modes())));
    }
    let plus = oriented_control(plant, horizon, eta, 1.0)?;
    let minus = oriented_control(plant, horizon, eta, -1.0)?;
    if terminal_norm(plant, &minus) < terminal_norm(plant, &plus) {
        Ok(minus)
    } else {
        Ok(plus)
    }
}
