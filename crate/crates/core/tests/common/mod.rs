//! Shared instance generators and golden-file helpers for the integration
//! tests.
#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use thermoctl::reduced_system::{build_reduced, ControlBounds, ReducedSystem};
use thermoctl::spectral_domain::{build_interval_basis, ControlRegion};
use thermoctl::structural::{check_d1, check_d2, DEFAULT_DELTA};

/// Horizon range covered by the oracle grids.
pub const ORACLE_T_MAX: f64 = 1.5;

/// A single-interval region with every coupling nonvanishing and an initial
/// state with components of magnitude in `[0.2, 1]` and random signs.
pub fn random_proper_instance(rng: &mut ChaCha8Rng, m: usize, k: usize) -> (ReducedSystem, ControlRegion) {
    let basis = build_interval_basis(1.0, m.max(k)).unwrap();
    loop {
        let a = rng.random_range(0.05..0.6);
        let w = rng.random_range(0.15..0.35f64).min(0.95 - a);
        let region = ControlRegion::new(&basis.domain(), &[(a, a + w)]).unwrap();
        let y0: Vec<f64> = (0..m)
            .map(|_| {
                let v: f64 = rng.random_range(0.2..=1.0);
                if rng.random::<bool>() { v } else { -v }
            })
            .collect();
        let sys = build_reduced(&basis, &region, &y0, m, k, ControlBounds::uniform(k, 1.0).unwrap()).unwrap();
        let p = sys.plant();
        if check_d1(p.rates(), m) && check_d2(p.coupling(), 1e-3_f64.max(DEFAULT_DELTA)).holds {
            return (sys, region);
        }
    }
}

pub const GOLDEN_TOLERANCE: f64 = 1e-6;

/// Structural equality with `GOLDEN_TOLERANCE` on numbers; returns the path
/// of the first difference.
pub fn json_close(a: &Value, b: &Value, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            if (x - y).abs() <= GOLDEN_TOLERANCE {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => x
            .iter()
            .zip(y)
            .enumerate()
            .try_for_each(|(i, (u, v))| json_close(u, v, &format!("{path}[{i}]"))),
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x.iter().try_for_each(|(key, u)| match y.get(key) {
            Some(v) => json_close(u, v, &format!("{path}.{key}")),
            None => Err(format!("{path}.{key}: missing")),
        }),
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}

/// Runs `thermoctl compare` on the contrast demo and checks it against the
/// golden summary and the expected verdicts.
pub fn compare_golden() -> (bool, String) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = match Command::new(env!("CARGO_BIN_EXE_thermoctl"))
        .arg("compare")
        .arg(root.join("examples/contrast.json"))
        .output()
    {
        Ok(o) => o,
        Err(e) => return (false, format!("cannot run thermoctl: {e}")),
    };
    if !out.status.success() {
        return (false, format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let got: Value = match serde_json::from_slice(&out.stdout) {
        Ok(v) => v,
        Err(e) => return (false, format!("output is not JSON: {e}")),
    };
    let golden: Value = match std::fs::read(root.join("tests/golden/compare_contrast.json"))
        .map_err(|e| e.to_string())
        .and_then(|b| serde_json::from_slice(&b).map_err(|e| e.to_string()))
    {
        Ok(v) => v,
        Err(e) => return (false, format!("cannot load golden file: {e}")),
    };
    let full_tag = got["full"]["tag"].as_str().unwrap_or("");
    let proper_tag = got["proper"]["tag"].as_str().unwrap_or("");
    let bang_bang = got["proper"]["is_bang_bang"].as_bool() == Some(true);
    let residual = got["proper"]["terminal_error"].as_f64().unwrap_or(f64::INFINITY);
    let verdicts = full_tag == "NONEXISTENT" && proper_tag == "EXISTS_PROPER_REGION" && bang_bang && residual <= 1e-6;
    let detail = format!(
        "full {full_tag}, proper {proper_tag} T* = {}, bang-bang {bang_bang}, terminal error {residual:.1e}",
        got["proper"]["optimal_time"]
    );
    match json_close(&got, &golden, "$") {
        Ok(()) => (verdicts, detail),
        Err(diff) => (false, format!("{detail}; golden mismatch at {diff}")),
    }
}
