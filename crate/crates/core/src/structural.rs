//! Structural hypotheses of the time-optimal problem and the existence
//! classification built on them.
//!
//! Nonvanishing tests on couplings use an explicit threshold `delta`; exact
//! zero tests are reserved for user-supplied initial data.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::reduced_system::{ControlBounds, ReducedSystem};
use crate::spectral_domain::ControlRegion;

/// Default coupling threshold for the nonvanishing-coupling checks and
/// general position.
pub const DEFAULT_DELTA: f64 = 1e-9;

/// Relative eigenvalue gap below which spectra count as degenerate.
pub const SIMPLICITY_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExistenceTag {
    Nonexistent,
    ExistsDiagonalReduced,
    ExistsDiagonalFull,
    ExistsProperRegion,
    AlreadyInTarget,
    /// Proper region where neither all couplings nor the first column are
    /// nonvanishing: no existence result applies.
    UnknownExistence,
}

impl ExistenceTag {
    pub fn exists(self) -> bool {
        matches!(
            self,
            Self::ExistsDiagonalReduced | Self::ExistsDiagonalFull | Self::ExistsProperRegion | Self::AlreadyInTarget
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceVerdict {
    pub tag: ExistenceTag,
    pub witness: Option<String>,
}

/// `(z0_{k+1}, ..., z0_m) ≠ 0`, compared exactly. Vacuous (false) when `k ≥ m`.
pub fn check_w21(z0: &[f64], k: usize) -> bool {
    k < z0.len() && z0[k..].iter().any(|&z| z != 0.0)
}

/// Simple spectrum on the first `m` eigenvalues: strictly increasing with relative gap
/// above [`SIMPLICITY_GAP`].
pub fn check_d1(eigenvalues: &[f64], m: usize) -> bool {
    m <= eigenvalues.len()
        && eigenvalues[..m]
            .windows(2)
            .all(|w| w[1] - w[0] > SIMPLICITY_GAP * w[1].abs().max(w[0].abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2Report {
    pub holds: bool,
    /// 1-based `(i, j)` pairs with `|B_ij| ≤ δ`.
    pub failing: Vec<(usize, usize)>,
}

/// Nonvanishing couplings: every `|B_ij| > δ`.
pub fn check_d2(coupling: &DMatrix<f64>, delta: f64) -> D2Report {
    let mut failing = Vec::new();
    for i in 0..coupling.nrows() {
        for j in 0..coupling.ncols() {
            if coupling[(i, j)].abs() <= delta {
                failing.push((i + 1, j + 1));
            }
        }
    }
    D2Report {
        holds: failing.is_empty(),
        failing,
    }
}

/// Nonvanishing first column: every `|B_i1| > δ`.
pub fn check_d2_tilde(coupling: &DMatrix<f64>, delta: f64) -> bool {
    coupling.ncols() > 0 && coupling.column(0).iter().all(|b| b.abs() > delta)
}

/// `(B, AB, ..., A^{d-1}B)`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d {
        return Err(invalid(format!(
            "dimension mismatch: A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let l = b.ncols();
    let mut out = DMatrix::zeros(d, d * l);
    let mut block = b.clone();
    for p in 0..d {
        out.columns_mut(p * l, l).copy_from(&block);
        block = a * &block;
    }
    Ok(out)
}

/// Numerical rank of the controllability matrix by column-pivoted QR, with
/// threshold `d · ε · (largest column norm)`.
pub fn kalman_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<usize> {
    let c = controllability_matrix(a, b)?;
    let d = a.nrows();
    if c.ncols() == 0 {
        return Ok(0);
    }
    let max_col = c.column_iter().map(|col| col.norm()).fold(0.0, f64::max);
    if max_col == 0.0 {
        return Ok(0);
    }
    let threshold = d as f64 * f64::EPSILON * max_col;
    let r = c.col_piv_qr().r();
    let n = r.nrows().min(r.ncols());
    Ok((0..n).filter(|&i| r[(i, i)].abs() > threshold).count())
}

/// `∏ col_i · ∏_{p>q} (λ_p − λ_q)`, the determinant of
/// `(col, Λcol, ..., Λ^{m-1}col)` for `Λ = diag(λ)`.
pub fn vandermonde_determinant(eigenvalues: &[f64], col: &[f64]) -> Result<f64> {
    if eigenvalues.len() != col.len() {
        return Err(invalid("eigenvalue and column lengths differ"));
    }
    let mut det: f64 = col.iter().product();
    for p in 0..eigenvalues.len() {
        for q in 0..p {
            det *= eigenvalues[p] - eigenvalues[q];
        }
    }
    Ok(det)
}

/// Determinant of `(col, Λcol, ..., Λ^{m-1}col)` by LU factorization.
pub fn krylov_determinant(eigenvalues: &[f64], col: &[f64]) -> Result<f64> {
    let m = eigenvalues.len();
    if col.len() != m {
        return Err(invalid("eigenvalue and column lengths differ"));
    }
    let k = DMatrix::from_fn(m, m, |i, p| col[i] * eigenvalues[i].powi(p as i32));
    Ok(k.determinant())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralPosition {
    pub holds: bool,
    /// Per channel: whether `Be_j, ABe_j, ..., A^{m-1}Be_j` are independent.
    pub columns: Vec<bool>,
    /// Per channel: `|F_j|` from the product formula.
    pub determinants: Vec<f64>,
}

/// General position of the box with respect to `(A, B)`, `A` diagonal.
///
/// For a box the edge directions are the coordinate vectors, so the
/// condition splits per column and reduces to the product formula being
/// nonzero. A column passes when every coupling in it exceeds `delta` and the
/// eigenvalues are simple.
pub fn general_position(
    eigenvalues: &[f64],
    coupling: &DMatrix<f64>,
    bounds: &ControlBounds,
    delta: f64,
) -> Result<GeneralPosition> {
    let m = eigenvalues.len();
    if coupling.nrows() != m || coupling.ncols() != bounds.len() {
        return Err(invalid("coupling shape does not match eigenvalues and bounds"));
    }
    let simple = check_d1(eigenvalues, m);
    let mut columns = Vec::with_capacity(coupling.ncols());
    let mut determinants = Vec::with_capacity(coupling.ncols());
    for col in coupling.column_iter() {
        let col: Vec<f64> = col.iter().copied().collect();
        determinants.push(vandermonde_determinant(eigenvalues, &col)?);
        columns.push(simple && col.iter().all(|b| b.abs() > delta));
    }
    Ok(GeneralPosition {
        holds: columns.iter().all(|&c| c),
        columns,
        determinants,
    })
}

/// Existence of time-optimal controls for the reduced problem.
pub fn classify_existence(system: &ReducedSystem, region: &ControlRegion, delta: f64) -> ExistenceVerdict {
    let plant = system.plant();
    let z0 = plant.initial();
    let (m, k) = (system.m(), system.k());
    if z0.iter().all(|&z| z == 0.0) {
        return ExistenceVerdict {
            tag: ExistenceTag::AlreadyInTarget,
            witness: None,
        };
    }
    if region.is_full_domain() {
        if k < m {
            if check_w21(z0, k) {
                let tail: Vec<String> = z0
                    .iter()
                    .enumerate()
                    .skip(k)
                    .filter(|(_, z)| **z != 0.0)
                    .map(|(i, z)| format!("<y0, xi_{}> = {z}", i + 1))
                    .collect();
                return ExistenceVerdict {
                    tag: ExistenceTag::Nonexistent,
                    witness: Some(format!(
                        "full-domain control with k = {k} < m = {m}; uncontrolled modes carry {}",
                        tail.join(", ")
                    )),
                };
            }
            return ExistenceVerdict {
                tag: ExistenceTag::ExistsDiagonalReduced,
                witness: Some(format!("modes {}..{m} start at zero and stay there", k + 1)),
            };
        }
        return ExistenceVerdict {
            tag: ExistenceTag::ExistsDiagonalFull,
            witness: (k > m).then(|| format!("channels {}..{k} do not act on the first {m} modes", m + 1)),
        };
    }

    let d1 = check_d1(plant.rates(), m);
    let d2 = check_d2(plant.coupling(), delta);
    let d2_tilde = check_d2_tilde(plant.coupling(), delta);
    if d1 && (d2.holds || d2_tilde) {
        let which = if d2.holds { "all couplings" } else { "the first coupling column" };
        return ExistenceVerdict {
            tag: ExistenceTag::ExistsProperRegion,
            witness: Some(format!("simple spectrum and {which} above delta = {delta:e}")),
        };
    }
    let pairs: Vec<String> = d2.failing.iter().map(|(i, j)| format!("({i},{j})")).collect();
    ExistenceVerdict {
        tag: ExistenceTag::UnknownExistence,
        witness: Some(format!(
            "unknown-existence: spectrum {}, couplings vanish at {}, first column vanishes",
            if d1 { "simple" } else { "degenerate" },
            pairs.join(" ")
        )),
    }
}
