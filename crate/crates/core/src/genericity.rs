//! Ball augmentations of the control region that make every coupling
//! nonzero.
//!
//! Adding a small interval `B_ρ(x) = (x − ρ, x + ρ)` disjoint from `ω`
//! changes each coupling by `∫_{B_ρ(x)} ξ_i ξ_j`. For almost every center the
//! augmented couplings are all nonzero, so a grid scan over `(x, ρ)` finds
//! usable augmentations and measures how thin the bad set is.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral_domain::{control_coupling, ControlRegion, DomainSpec, EigenBasis};

fn in_domain(length: f64, x: f64, rho: f64) -> bool {
    rho > 0.0 && x - rho > 0.0 && x + rho < length
}

/// Average of `ξ_i ξ_j` over `B_ρ(x)` in the unit-ball parametrization:
/// `∫_{-1}^{1} ξ_i ξ_j (x + ρη) dη = (1/ρ) ∫_{x−ρ}^{x+ρ} ξ_i ξ_j`.
pub fn fij(basis: &EigenBasis, i: usize, j: usize, x: f64, rho: f64) -> Result<f64> {
    let length = basis.domain().length();
    if !in_domain(length, x, rho) {
        return Err(invalid(format!(
            "ball ({}, {}) is not compactly inside (0, {length})",
            x - rho,
            x + rho
        )));
    }
    Ok(basis.product_integral(i, j, x - rho, x + rho)? / rho)
}

/// The ball `B_ρ(x)` sits strictly inside the domain and strictly away from
/// the closure of the region.
pub fn omega_rho_membership(x: f64, rho: f64, domain: &DomainSpec, region: &ControlRegion) -> bool {
    if region.is_full_domain() || !in_domain(domain.length(), x, rho) || region.closure_contains(x) {
        return false;
    }
    region
        .intervals()
        .iter()
        .all(|&(a, b)| x + rho < a || x - rho > b)
}

/// `⟨χ_{ω ∪ B_ρ(x)} ξ_i, ξ_j⟩` for a ball disjoint from the region.
pub fn augmented_coupling(
    basis: &EigenBasis,
    region: &ControlRegion,
    x: f64,
    rho: f64,
    i: usize,
    j: usize,
) -> Result<f64> {
    if !omega_rho_membership(x, rho, &basis.domain(), region) {
        return Err(invalid(format!(
            "ball ({}, {}) is not admissible for the region",
            x - rho,
            x + rho
        )));
    }
    Ok(control_coupling(basis, region, i, j)? + basis.product_integral(i, j, x - rho, x + rho)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub delta: f64,
    pub m: usize,
    pub k: usize,
}

impl ScanGrid {
    pub fn new(x: Vec<f64>, rho: Vec<f64>, delta: f64, m: usize, k: usize) -> Result<Self> {
        if x.is_empty() || rho.is_empty() {
            return Err(invalid("scan grid needs at least one x and one ρ sample"));
        }
        if x.iter().any(|v| !v.is_finite()) || rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(invalid("scan samples must be finite with ρ > 0"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("δ must be positive, got {delta}")));
        }
        if m == 0 || k == 0 {
            return Err(invalid("mode ranges must be positive"));
        }
        Ok(Self { x, rho, delta, m, k })
    }

    /// Cell midpoints of `nx` equal cells on `x_range` and `nrho` on `rho_range`.
    pub fn uniform(
        x_range: (f64, f64),
        nx: usize,
        rho_range: (f64, f64),
        nrho: usize,
        delta: f64,
        m: usize,
        k: usize,
    ) -> Result<Self> {
        if !(x_range.0 < x_range.1) || !(rho_range.0 < rho_range.1) {
            return Err(invalid("scan ranges must be nonempty intervals"));
        }
        let mids = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            (0..n).map(|i| a + (i as f64 + 0.5) * (b - a) / n as f64).collect()
        };
        Self::new(mids(x_range, nx), mids(rho_range, nrho), delta, m, k)
    }

    /// Couplings `(i, j)` tested: `i ≤ m`, `j ≤ max(k, m)`.
    pub fn columns(&self) -> usize {
        self.k.max(self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub x: f64,
    pub rho: f64,
    /// Smallest `|augmented coupling|` over the tested pairs.
    pub min_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Admissible grid points, in grid order (`x` outer, `ρ` inner).
    pub points: Vec<ScanPoint>,
    pub grid_size: usize,
    /// Fraction of admissible points whose minimum magnitude is at most `δ`.
    pub zero_set_fraction: f64,
    /// Admissible points with every magnitude above `δ`, largest margin first.
    pub candidates: Vec<ScanPoint>,
}

pub fn scan(basis: &EigenBasis, region: &ControlRegion, grid: &ScanGrid) -> Result<ScanResult> {
    let cols = grid.columns();
    if cols > basis.len() {
        return Err(invalid(format!("scan needs {cols} modes, basis has {}", basis.len())));
    }
    let domain = basis.domain();
    let mut base = vec![0.0; grid.m * cols];
    for i in 1..=grid.m {
        for j in 1..=cols {
            base[(i - 1) * cols + j - 1] = control_coupling(basis, region, i, j)?;
        }
    }
    let mut points = Vec::new();
    for &x in &grid.x {
        for &rho in &grid.rho {
            if !omega_rho_membership(x, rho, &domain, region) {
                continue;
            }
            let mut min_magnitude = f64::INFINITY;
            for i in 1..=grid.m {
                for j in 1..=cols {
                    let v = base[(i - 1) * cols + j - 1] + basis.product_integral_unchecked(i, j, x - rho, x + rho);
                    min_magnitude = min_magnitude.min(v.abs());
                }
            }
            points.push(ScanPoint { x, rho, min_magnitude });
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyAdmissibleGrid(format!(
            "none of the {} grid points has a ball inside the domain and away from the region",
            grid.x.len() * grid.rho.len()
        )));
    }
    let below = points.iter().filter(|p| p.min_magnitude <= grid.delta).count();
    let mut candidates: Vec<ScanPoint> = points.iter().copied().filter(|p| p.min_magnitude > grid.delta).collect();
    candidates.sort_by(|a, b| b.min_magnitude.total_cmp(&a.min_magnitude));
    Ok(ScanResult {
        zero_set_fraction: below as f64 / points.len() as f64,
        grid_size: grid.x.len() * grid.rho.len(),
        points,
        candidates,
    })
}
