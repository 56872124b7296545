//! Minimal times and time-optimal controls.

mod bisect;
mod diagonal;
mod extract;
mod oracle;
mod support;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::reduced_system::ControlTrajectory;

pub use bisect::min_time_bisect;
pub use diagonal::{diagonal_mode_time, diagonal_synthesis};
pub use extract::extract_bangbang;
pub use oracle::{brute_force_min_time, OracleReport, OracleSample, MAX_CHANNELS, MAX_SEGMENTS};
pub use support::{feasibility_margin, SphereOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ClosedForm,
    Bisection,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub optimal_time: f64,
    pub control: ControlTrajectory,
    /// Feasibility margin at the optimal time; zero up to solver accuracy.
    pub feasibility_margin: f64,
    /// Unit dual direction generating the control; absent for closed forms.
    pub dual_direction: Option<Vec<f64>>,
    /// Norm of the reduced state at the optimal time.
    pub terminal_error: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Bisection stops once the bracket is this narrow.
    pub tol: f64,
    /// First horizon tried; doubled until feasible.
    pub t_hi: f64,
    /// Doubling gives up beyond this horizon.
    pub horizon_cap: f64,
    pub seed: u64,
    pub random_starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            t_hi: 1.0,
            horizon_cap: 65536.0,
            seed: 0,
            random_starts: 32,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.t_hi > 0.0 && self.t_hi.is_finite()) {
            return Err(invalid(format!("initial horizon must be positive, got {}", self.t_hi)));
        }
        if !(self.horizon_cap >= self.t_hi) {
            return Err(invalid(format!(
                "horizon cap {} is below the initial horizon {}",
                self.horizon_cap, self.t_hi
            )));
        }
        Ok(())
    }
}
