//! CSV forms of controls, simulated trajectories and scans.
//!
//! A control row at time `t` holds the values in force just after `t`, up to
//! the next row; the last row sits at `T` and repeats the final values.
//! Floats are written in shortest round-trip form, so reading a control back
//! reproduces it exactly.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};

use crate::genericity::ScanPoint;
use crate::reduced_system::{ChannelSchedule, ControlTrajectory};
use crate::simulator::TruncatedTrajectory;

/// Breakpoints of every channel plus `samples` uniform times on `[0, T]`.
pub fn control_sample_times(traj: &ControlTrajectory, samples: usize) -> Vec<f64> {
    let horizon = traj.horizon();
    let mut times = traj.breakpoints();
    if horizon > 0.0 && samples >= 2 {
        times.extend((0..samples).map(|r| horizon * r as f64 / (samples - 1) as f64));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

pub fn write_control_csv<W: Write>(out: W, traj: &ControlTrajectory, samples: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = traj.channel_count();
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|j| format!("alpha_{j}")));
    w.write_record(&header)?;
    if traj.horizon() > 0.0 {
        let times = control_sample_times(traj, samples);
        for (r, &t) in times.iter().enumerate() {
            // value in force on (t, next]; the last row repeats the final segment
            let probe = if r + 1 < times.len() { 0.5 * (t + times[r + 1]) } else { t };
            let mut row = vec![t.to_string()];
            row.extend(traj.value_at(probe).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_control_csv<R: Read>(input: R) -> Result<ControlTrajectory> {
    let mut r = csv::Reader::from_reader(input);
    let k = r.headers()?.len().checked_sub(1).context("control CSV has no columns")?;
    if k == 0 {
        bail!("control CSV has no channel columns");
    }
    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("row {}: not a number", line + 1))?;
        if vals.len() != k + 1 {
            bail!("row {}: expected {} fields, found {}", line + 1, k + 1, vals.len());
        }
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    if times.is_empty() {
        return Ok(ControlTrajectory::empty(k));
    }
    let horizon = *times.last().expect("nonempty");
    let channels = (0..k)
        .map(|j| {
            let values: Vec<f64> = rows[..rows.len() - 1].iter().map(|row| row[j]).collect();
            ChannelSchedule::new(times.clone(), values)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(ControlTrajectory::new(horizon, channels)?)
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &TruncatedTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let modes = traj.states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=modes).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![t.to_string()];
        row.extend(state.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(out: W, points: &[ScanPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "rho", "min_magnitude"])?;
    for p in points {
        w.write_record([p.x.to_string(), p.rho.to_string(), p.min_magnitude.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
