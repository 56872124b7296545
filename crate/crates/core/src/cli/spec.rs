//! Problem specification documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::reduced_system::{build_reduced, ControlBounds, ReducedSystem};
use crate::simulator::default_truncation;
use crate::spectral_domain::{build_interval_basis, ControlRegion, EigenBasis};
use crate::structural::DEFAULT_DELTA;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub domain: DomainSection,
    pub omega: OmegaSection,
    pub modes: ModesSection,
    pub bounds: Vec<f64>,
    pub y0: InitialSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSection {
    Full(FullTag),
    Intervals(IntervalList),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FullTag {
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalList {
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    pub m: usize,
    pub k: usize,
    /// Modes kept by the forward simulation.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(rename = "T_hi", default = "default_t_hi")]
    pub t_hi: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<f64>,
    /// Uniform samples added to the switching times in CSV output.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_t_hi() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_samples() -> usize {
    101
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            t_hi: default_t_hi(),
            seed: 0,
            delta: default_delta(),
            horizon_cap: None,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub x_range: (f64, f64),
    pub rho_range: (f64, f64),
    /// Cell counts along `x` and `ρ`.
    pub grid: (usize, usize),
    #[serde(default = "default_scan_delta")]
    pub delta: f64,
}

fn default_scan_delta() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_segments")]
    pub q: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Largest grid horizon; defaults to twice the solver's optimal time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

fn default_segments() -> usize {
    6
}

fn default_points() -> usize {
    40
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            q: default_segments(),
            points: default_points(),
            t_max: None,
        }
    }
}

/// A problem or schema error, reported with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError(pub String);

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecError {}

/// Everything the commands need, built and checked from one spec.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub basis: EigenBasis,
    pub region: ControlRegion,
    pub system: ReducedSystem,
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SpecError(format!("schema error at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn truncation(&self) -> usize {
        self.modes.truncation.unwrap_or_else(|| default_truncation(self.modes.m))
    }

    /// Builds the basis, region and reduced system, re-checking every
    /// numeric constraint. The region can be overridden (used by `compare`).
    pub fn build_with(&self, omega: &OmegaSection) -> Result<Problem, SpecError> {
        let field = |name: &str, e: crate::Error| SpecError(format!("invalid `{name}`: {e}"));
        let (m, k) = (self.modes.m, self.modes.k);
        let truncation = self.truncation();
        if truncation < m.max(k) {
            return Err(SpecError(format!("invalid `modes.M`: {truncation} < max(m, k) = {}", m.max(k))));
        }
        let basis = build_interval_basis(self.domain.length, truncation).map_err(|e| field("domain.length", e))?;
        let region = match omega {
            OmegaSection::Full(_) => ControlRegion::full(&basis.domain()),
            OmegaSection::Intervals(list) => {
                ControlRegion::new(&basis.domain(), &list.intervals).map_err(|e| field("omega.intervals", e))?
            }
        };
        let bounds = ControlBounds::new(self.bounds.clone()).map_err(|e| field("bounds", e))?;
        if self.y0.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(SpecError("invalid `y0.coefficients`: entries must be finite".into()));
        }
        let system =
            build_reduced(&basis, &region, &self.y0.coefficients, m, k, bounds).map_err(|e| field("modes", e))?;
        let s = &self.solver;
        if !(s.tol > 0.0 && s.t_hi > 0.0 && s.delta > 0.0) || s.horizon_cap.is_some_and(|c| !(c >= s.t_hi)) {
            return Err(SpecError(
                "invalid `solver`: tol, T_hi and delta must be positive and horizon_cap ≥ T_hi".into(),
            ));
        }
        Ok(Problem {
            spec: self.clone(),
            basis,
            region,
            system,
        })
    }

    pub fn build(&self) -> Result<Problem, SpecError> {
        self.build_with(&self.omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"{
        "domain": {"length": 1.0},
        "omega": {"intervals": [[0.21, 0.54]]},
        "modes": {"m": 2, "k": 1},
        "bounds": [1.0],
        "y0": {"coefficients": [1.0, 1.0]}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let spec = ProblemSpec::parse(DEMO).unwrap();
        assert_eq!(spec.solver, SolverSection::default());
        assert_eq!(spec.truncation(), 20);
        let p = spec.build().unwrap();
        assert!(!p.region.is_full_domain());
    }

    #[test]
    fn full_keyword() {
        let text = DEMO.replace(r#"{"intervals": [[0.21, 0.54]]}"#, r#""full""#);
        let p = ProblemSpec::parse(&text).unwrap().build().unwrap();
        assert!(p.region.is_full_domain());
    }

    #[test]
    fn unknown_field_reports_path() {
        let text = DEMO.replace(r#""k": 1"#, r#""k": 1, "extra": 3"#);
        let err = ProblemSpec::parse(&text).unwrap_err();
        assert!(err.0.contains("modes"), "{err}");
    }

    #[test]
    fn constraint_violations() {
        let text = DEMO.replace("[1.0]", "[-1.0]");
        assert!(ProblemSpec::parse(&text).unwrap().build().unwrap_err().0.contains("bounds"));
        let text = DEMO.replace(r#""m": 2"#, r#""m": 1"#);
        assert!(ProblemSpec::parse(&text).unwrap().build().is_err());
    }
}
