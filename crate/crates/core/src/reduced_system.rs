//! The finite-dimensional reduction `ż + Az = Bα` obtained by projecting the
//! controlled heat equation onto its first `m` eigenmodes, piecewise-constant
//! control trajectories, and exact propagation of the reduced state.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral_domain::{coupling_matrix, ControlRegion, EigenBasis};

/// Per-channel amplitude bounds `ā_1..ā_k` of the box `Π [-ā_j, ā_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ControlBounds(Vec<f64>);

impl ControlBounds {
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(invalid("at least one control channel is required"));
        }
        if let Some((j, a)) = amplitudes
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.is_finite() && **a > 0.0))
        {
            return Err(invalid(format!("bound of channel {} must be positive, got {a}", j + 1)));
        }
        Ok(Self(amplitudes))
    }

    /// Same bound on every one of `k` channels.
    pub fn uniform(k: usize, amplitude: f64) -> Result<Self> {
        Self::new(vec![amplitude; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }
}

impl TryFrom<Vec<f64>> for ControlBounds {
    type Error = crate::Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ControlBounds> for Vec<f64> {
    fn from(value: ControlBounds) -> Self {
        value.0
    }
}

/// A diagonal linear plant `ż_i = -λ_i z_i + (Bα)_i` with box-bounded controls.
///
/// This is the object every solver works on. It places no lower bound on the
/// dimension, so scalar problems can be posed directly; [`ReducedSystem`]
/// adds the heat-equation specific invariants on top.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    rates: Vec<f64>,
    coupling: DMatrix<f64>,
    initial: Vec<f64>,
    bounds: ControlBounds,
}

impl Plant {
    pub fn new(rates: Vec<f64>, coupling: DMatrix<f64>, initial: Vec<f64>, bounds: ControlBounds) -> Result<Self> {
        let m = rates.len();
        if m == 0 {
            return Err(invalid("plant needs at least one mode"));
        }
        if let Some(l) = rates.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(invalid(format!("decay rates must be positive, got {l}")));
        }
        if coupling.nrows() != m || coupling.ncols() != bounds.len() {
            return Err(invalid(format!(
                "coupling is {}x{}, expected {m}x{}",
                coupling.nrows(),
                coupling.ncols(),
                bounds.len()
            )));
        }
        if coupling.iter().any(|b| !b.is_finite()) {
            return Err(invalid("coupling matrix has non-finite entries"));
        }
        if initial.len() != m {
            return Err(invalid(format!("initial state has {} entries, expected {m}", initial.len())));
        }
        if initial.iter().any(|z| !z.is_finite()) {
            return Err(invalid("initial state has non-finite entries"));
        }
        Ok(Self {
            rates,
            coupling,
            initial,
            bounds,
        })
    }

    pub fn modes(&self) -> usize {
        self.rates.len()
    }

    pub fn channels(&self) -> usize {
        self.bounds.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn bounds(&self) -> &ControlBounds {
        &self.bounds
    }

    /// The same plant started from a different state.
    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        Self::new(self.rates.clone(), self.coupling.clone(), initial, self.bounds.clone())
    }
}

/// The reduced system of the heat equation: `A = diag(λ_1..λ_m)` strictly
/// increasing, `m ≥ 2`, `B` the `m × k` coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    plant: Plant,
}

impl ReducedSystem {
    pub fn new(plant: Plant) -> Result<Self> {
        if plant.modes() < 2 {
            return Err(invalid(format!("target index m must be at least 2, got {}", plant.modes())));
        }
        if !plant.rates().windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("eigenvalues of the reduced system must be strictly increasing"));
        }
        Ok(Self { plant })
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn m(&self) -> usize {
        self.plant.modes()
    }

    pub fn k(&self) -> usize {
        self.plant.channels()
    }

    pub fn into_plant(self) -> Plant {
        self.plant
    }
}

impl AsRef<Plant> for ReducedSystem {
    fn as_ref(&self) -> &Plant {
        &self.plant
    }
}

/// First `m` eigen-coefficients of `y0`, zero-padded.
pub fn project_initial(y0_coeffs: &[f64], m: usize) -> Vec<f64> {
    (0..m).map(|i| y0_coeffs.get(i).copied().unwrap_or(0.0)).collect()
}

pub fn build_reduced(
    basis: &EigenBasis,
    region: &ControlRegion,
    y0_coeffs: &[f64],
    m: usize,
    k: usize,
    bounds: ControlBounds,
) -> Result<ReducedSystem> {
    if m < 2 {
        return Err(invalid(format!("target index m must be at least 2, got {m}")));
    }
    if k == 0 {
        return Err(invalid("at least one control channel is required"));
    }
    if bounds.len() != k {
        return Err(invalid(format!("{} bounds given for {k} channels", bounds.len())));
    }
    let coupling = coupling_matrix(basis, region, m, k)?;
    let plant = Plant::new(
        basis.eigenvalues()[..m].to_vec(),
        coupling,
        project_initial(y0_coeffs, m),
        bounds,
    )?;
    ReducedSystem::new(plant)
}

/// Piecewise-constant schedule of one control channel.
///
/// `times` holds `0 = t_0 < t_1 < ... < t_p = T`, `values[r]` is the value on
/// `(t_r, t_{r+1}]` (the value at `t = 0` is `values[0]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ChannelSchedule {
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSchedule {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawSchedule> for ChannelSchedule {
    type Error = crate::Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        Self::new(raw.times, raw.values)
    }
}

impl ChannelSchedule {
    /// Builds a schedule from breakpoints and segment values, merging
    /// neighbouring segments that carry the same value.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times[0] != 0.0 {
            return Err(invalid("schedule must start at t = 0"));
        }
        if times.len() != values.len() + 1 {
            return Err(invalid(format!(
                "{} breakpoints for {} segments",
                times.len(),
                values.len()
            )));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("switching times must be strictly increasing"));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("schedule has non-finite entries"));
        }
        let mut merged_times = vec![0.0];
        let mut merged_values: Vec<f64> = Vec::with_capacity(values.len());
        for (r, &v) in values.iter().enumerate() {
            if merged_values.last() == Some(&v) {
                *merged_times.last_mut().expect("nonempty") = times[r + 1];
            } else {
                merged_values.push(v);
                merged_times.push(times[r + 1]);
            }
        }
        Ok(Self {
            times: merged_times,
            values: merged_values,
        })
    }

    pub fn constant(horizon: f64, value: f64) -> Result<Self> {
        if horizon == 0.0 {
            return Self::new(vec![0.0], vec![]);
        }
        Self::new(vec![0.0, horizon], vec![value])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("schedule has at least one breakpoint")
    }

    /// Value on the segment containing `t`, right-closed convention.
    pub fn value_at(&self, t: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        // first breakpoint index r ≥ 1 with t ≤ times[r]
        let r = self.times[1..].partition_point(|&b| b < t);
        self.values[r.min(self.values.len() - 1)]
    }

    /// Segments as `(start, end, value)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.times
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }
}

/// A `k`-channel piecewise-constant control on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct ControlTrajectory {
    horizon: f64,
    channels: Vec<ChannelSchedule>,
}

#[derive(Deserialize)]
struct RawTrajectory {
    horizon: f64,
    channels: Vec<ChannelSchedule>,
}

impl TryFrom<RawTrajectory> for ControlTrajectory {
    type Error = crate::Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        Self::new(raw.horizon, raw.channels)
    }
}

impl ControlTrajectory {
    pub fn new(horizon: f64, channels: Vec<ChannelSchedule>) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(invalid(format!("horizon must be nonnegative, got {horizon}")));
        }
        if channels.is_empty() {
            return Err(invalid("trajectory needs at least one channel"));
        }
        if let Some(c) = channels.iter().find(|c| c.horizon() != horizon) {
            return Err(invalid(format!(
                "channel horizon {} does not match trajectory horizon {horizon}",
                c.horizon()
            )));
        }
        Ok(Self { horizon, channels })
    }

    /// Zero-length control with `k` channels.
    pub fn empty(k: usize) -> Self {
        Self {
            horizon: 0.0,
            channels: vec![ChannelSchedule::new(vec![0.0], vec![]).expect("valid"); k],
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn channels(&self) -> &[ChannelSchedule] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// All breakpoints of all channels, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.channels.iter().flat_map(|c| c.times().iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }

    /// Control vector on the segment containing `t`.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        self.channels.iter().map(|c| c.value_at(t)).collect()
    }

    /// Checks every value against the box, with a relative slack of `1e-12`.
    pub fn check_bounds(&self, bounds: &ControlBounds) -> Result<()> {
        if bounds.len() != self.channels.len() {
            return Err(invalid(format!(
                "trajectory has {} channels, bounds have {}",
                self.channels.len(),
                bounds.len()
            )));
        }
        for (j, c) in self.channels.iter().enumerate() {
            let limit = bounds.get(j) * (1.0 + 1e-12);
            if let Some(v) = c.values().iter().find(|v| v.abs() > limit) {
                return Err(invalid(format!("channel {} value {v} exceeds bound {}", j + 1, bounds.get(j))));
            }
        }
        Ok(())
    }
}

/// Advances `z` exactly across a segment of length `h` with constant forcing `f = Bv`.
pub(crate) fn step_exact(rates: &[f64], z: &mut [f64], forcing: &[f64], h: f64) {
    for ((zi, &l), &fi) in z.iter_mut().zip(rates).zip(forcing) {
        let decay = (-l * h).exp();
        let gain = -(-l * h).exp_m1() / l;
        *zi = decay * *zi + gain * fi;
    }
}

/// Runs `ż = -Az + Bα` from `z0` under `traj` on `[0, t]`, segment by segment.
pub(crate) fn propagate_from(
    rates: &[f64],
    coupling: &DMatrix<f64>,
    z0: &[f64],
    traj: &ControlTrajectory,
    t: f64,
) -> Vec<f64> {
    let mut z = z0.to_vec();
    let mut forcing = vec![0.0; rates.len()];
    let mut start = 0.0;
    for &b in traj.breakpoints().iter().skip(1) {
        let end = b.min(t);
        if end <= start {
            break;
        }
        let mid = 0.5 * (start + end);
        let v = traj.value_at(mid);
        for (i, f) in forcing.iter_mut().enumerate() {
            *f = (0..v.len()).map(|j| coupling[(i, j)] * v[j]).sum();
        }
        step_exact(rates, &mut z, &forcing, end - start);
        start = end;
    }
    z
}

/// Reduced state at time `t` under the piecewise-constant control `traj`.
pub fn propagate(plant: &Plant, traj: &ControlTrajectory, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t <= traj.horizon()) {
        return Err(invalid(format!("time {t} outside [0, {}]", traj.horizon())));
    }
    traj.check_bounds(plant.bounds())?;
    Ok(propagate_from(plant.rates(), plant.coupling(), plant.initial(), traj, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_domain::build_interval_basis;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn projection_pads_and_truncates() {
        assert_eq!(project_initial(&[1.0], 2), vec![1.0, 0.0]);
        assert_eq!(project_initial(&[0.0, 0.0, 1.0], 2), vec![0.0, 0.0]);
        assert_eq!(project_initial(&[2.0, -1.0], 2), vec![2.0, -1.0]);
    }

    #[test]
    fn full_domain_reduction() {
        let basis = build_interval_basis(1.0, 4).unwrap();
        let full = ControlRegion::full(&basis.domain());
        let sys = build_reduced(&basis, &full, &[1.0, 1.0], 2, 2, ControlBounds::uniform(2, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(sys.plant().rates()[0], PI * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.plant().rates()[1], 4.0 * PI * PI, epsilon = 1e-12);
        assert_eq!(sys.plant().coupling(), &DMatrix::identity(2, 2));
        assert_eq!(sys.plant().initial(), &[1.0, 1.0]);
    }

    #[test]
    fn half_region_reduction() {
        let basis = build_interval_basis(1.0, 4).unwrap();
        let half = ControlRegion::new(&basis.domain(), &[(0.0, 0.5)]).unwrap();
        let sys = build_reduced(&basis, &half, &[1.0], 2, 1, ControlBounds::uniform(1, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(sys.plant().coupling()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sys.plant().coupling()[(1, 0)], 4.0 / (3.0 * PI), epsilon = 1e-15);
        assert_eq!(sys.plant().initial(), &[1.0, 0.0]);
    }

    #[test]
    fn reduced_requires_two_modes() {
        let basis = build_interval_basis(1.0, 4).unwrap();
        let full = ControlRegion::full(&basis.domain());
        let err = build_reduced(&basis, &full, &[1.0], 1, 1, ControlBounds::uniform(1, 1.0).unwrap());
        assert!(matches!(err, Err(crate::Error::InvalidArgument(_))));
        assert!(build_reduced(&basis, &full, &[1.0], 2, 2, ControlBounds::uniform(1, 1.0).unwrap()).is_err());
        assert!(ControlBounds::new(vec![1.0, 0.0]).is_err());
    }

    fn scalar(z0: f64) -> Plant {
        Plant::new(vec![1.0], DMatrix::from_element(1, 1, 1.0), vec![z0], ControlBounds::uniform(1, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_control_is_pure_decay() {
        let p = Plant::new(
            vec![PI * PI, 4.0 * PI * PI],
            DMatrix::identity(2, 2),
            vec![1.0, 1.0],
            ControlBounds::uniform(2, 1.0).unwrap(),
        )
        .unwrap();
        let t = 0.3;
        let traj = ControlTrajectory::new(
            t,
            vec![ChannelSchedule::constant(t, 0.0).unwrap(); 2],
        )
        .unwrap();
        let z = propagate(&p, &traj, t).unwrap();
        assert_abs_diff_eq!(z[0], (-PI * PI * t).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], (-4.0 * PI * PI * t).exp(), epsilon = 1e-15);
        assert_eq!(propagate(&p, &traj, 0.0).unwrap(), vec![1.0, 1.0]);
        assert!(propagate(&p, &traj, 0.31).is_err());
        assert!(propagate(&p, &traj, -0.1).is_err());
    }

    #[test]
    fn scalar_mode_hits_zero_at_unit_time() {
        let p = scalar(E - 1.0);
        let traj = ControlTrajectory::new(1.0, vec![ChannelSchedule::constant(1.0, -1.0).unwrap()]).unwrap();
        let z = propagate(&p, &traj, 1.0).unwrap();
        assert_abs_diff_eq!(z[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn out_of_bounds_controls_rejected() {
        let p = scalar(1.0);
        let traj = ControlTrajectory::new(1.0, vec![ChannelSchedule::constant(1.0, -1.5).unwrap()]).unwrap();
        assert!(propagate(&p, &traj, 1.0).is_err());
    }

    #[test]
    fn schedule_merges_equal_neighbours() {
        let s = ChannelSchedule::new(vec![0.0, 0.5, 1.0, 2.0], vec![1.0, 1.0, -1.0]).unwrap();
        assert_eq!(s.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.values(), &[1.0, -1.0]);
        assert_eq!(s.value_at(0.0), 1.0);
        assert_eq!(s.value_at(1.0), 1.0);
        assert_eq!(s.value_at(1.0 + 1e-12), -1.0);
        assert_eq!(s.value_at(2.0), -1.0);
        assert!(ChannelSchedule::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(ChannelSchedule::new(vec![0.1, 1.0], vec![1.0]).is_err());
    }
}
