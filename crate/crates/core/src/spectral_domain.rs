//! The one-dimensional domain `(0, L)`, its Dirichlet eigensystem and the
//! control region, together with closed-form inner products of eigenmodes
//! restricted to subintervals.
//!
//! Modes are indexed from 1 in every public function, matching the usual
//! numbering of the Dirichlet spectrum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    length: f64,
}

impl DomainSpec {
    pub fn new(length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!("domain length must be positive, got {length}")));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

/// Truncated Dirichlet eigensystem of `-d²/dx²` on `(0, L)`:
/// `λ_i = (iπ/L)²`, `ξ_i(x) = sqrt(2/L) sin(iπx/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    domain: DomainSpec,
    eigenvalues: Vec<f64>,
}

impl EigenBasis {
    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `λ_i`, 1-based.
    pub fn eigenvalue(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.eigenvalues[i - 1])
    }

    /// Spatial frequency `iπ/L` of mode `i` (no bounds check).
    fn wavenumber(&self, i: usize) -> f64 {
        i as f64 * PI / self.domain.length
    }

    /// Evaluates `ξ_i(x)`.
    pub fn mode(&self, i: usize, x: f64) -> Result<f64> {
        self.check_index(i)?;
        Ok((2.0 / self.domain.length).sqrt() * (self.wavenumber(i) * x).sin())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.len() {
            return Err(invalid(format!("mode index {i} outside 1..={}", self.len())));
        }
        Ok(())
    }

    /// `∫_a^b ξ_i ξ_j dx` in closed form (product-to-sum of sines).
    ///
    /// Differences of sines are rewritten as `2 cos(·) sin(·)` so that short
    /// intervals do not lose digits to cancellation.
    pub fn product_integral(&self, i: usize, j: usize, a: f64, b: f64) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.product_integral_unchecked(i, j, a, b))
    }

    pub(crate) fn product_integral_unchecked(&self, i: usize, j: usize, a: f64, b: f64) -> f64 {
        let length = self.domain.length;
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        // ∫_a^b cos(w x) dx
        let cos_integral = |w: f64| {
            if w == 0.0 {
                b - a
            } else {
                2.0 * (w * mid).cos() * (w * half).sin() / w
            }
        };
        let diff = (i as f64 - j as f64) * PI / length;
        let sum = (i + j) as f64 * PI / length;
        (cos_integral(diff) - cos_integral(sum)) / length
    }
}

/// Builds the first `truncation` Dirichlet eigenpairs on `(0, length)`.
pub fn build_interval_basis(length: f64, truncation: usize) -> Result<EigenBasis> {
    let domain = DomainSpec::new(length)?;
    if truncation == 0 {
        return Err(invalid("truncation must be at least 1"));
    }
    let eigenvalues = (1..=truncation)
        .map(|i| (i as f64 * PI / length).powi(2))
        .collect();
    Ok(EigenBasis { domain, eigenvalues })
}

/// A finite union of disjoint open subintervals of the domain, kept sorted
/// and merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlRegion {
    intervals: Vec<(f64, f64)>,
    is_full_domain: bool,
}

impl ControlRegion {
    /// The whole domain, `ω = Ω`.
    pub fn full(domain: &DomainSpec) -> Self {
        Self {
            intervals: vec![(0.0, domain.length())],
            is_full_domain: true,
        }
    }

    /// Normalizes the given intervals: sorts them, merges overlapping or
    /// touching ones and rejects empty or out-of-domain intervals.
    pub fn new(domain: &DomainSpec, intervals: &[(f64, f64)]) -> Result<Self> {
        if intervals.is_empty() {
            return Err(invalid("control region needs at least one interval"));
        }
        let length = domain.length();
        let mut sorted = Vec::with_capacity(intervals.len());
        for &(a, b) in intervals {
            if !(a.is_finite() && b.is_finite()) {
                return Err(invalid(format!("non-finite interval ({a}, {b})")));
            }
            if a >= b {
                return Err(invalid(format!("empty interval ({a}, {b})")));
            }
            if a < 0.0 || b > length {
                return Err(invalid(format!("interval ({a}, {b}) leaves (0, {length})")));
            }
            sorted.push((a, b));
        }
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (a, b) in sorted {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let is_full_domain = merged.len() == 1 && merged[0].0 == 0.0 && merged[0].1 == length;
        Ok(Self {
            intervals: merged,
            is_full_domain,
        })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_full_domain(&self) -> bool {
        self.is_full_domain
    }

    /// `x` lies in the closure of the region.
    pub fn closure_contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Union with one more open interval.
    pub fn with_interval(&self, domain: &DomainSpec, a: f64, b: f64) -> Result<Self> {
        let mut all = self.intervals.clone();
        all.push((a, b));
        Self::new(domain, &all)
    }

    /// Total length of the region.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

/// `⟨χ_ω ξ_i, ξ_j⟩`, summed over the region's intervals.
///
/// On the full domain this is exactly `δ_ij`.
pub fn control_coupling(basis: &EigenBasis, region: &ControlRegion, i: usize, j: usize) -> Result<f64> {
    basis.check_index(i)?;
    basis.check_index(j)?;
    Ok(coupling_unchecked(basis, region, i, j))
}

fn coupling_unchecked(basis: &EigenBasis, region: &ControlRegion, i: usize, j: usize) -> f64 {
    if region.is_full_domain() {
        return if i == j { 1.0 } else { 0.0 };
    }
    region
        .intervals()
        .iter()
        .map(|&(a, b)| basis.product_integral_unchecked(i, j, a, b))
        .sum()
}

/// The `rows × cols` matrix of couplings, entry `(i, j)` (0-based) holding
/// `⟨χ_ω ξ_{i+1}, ξ_{j+1}⟩`.
pub fn coupling_matrix(
    basis: &EigenBasis,
    region: &ControlRegion,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>> {
    if rows == 0 || cols == 0 {
        return Err(invalid("coupling matrix needs at least one row and one column"));
    }
    if rows > basis.len() || cols > basis.len() {
        return Err(invalid(format!(
            "coupling matrix {rows}x{cols} exceeds truncation {}",
            basis.len()
        )));
    }
    Ok(DMatrix::from_fn(rows, cols, |i, j| {
        coupling_unchecked(basis, region, i + 1, j + 1)
    }))
}
