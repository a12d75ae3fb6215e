//! CSV and JSON artifacts of a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::ScenarioConfig;
use crate::error::Result;
use crate::geometry::{contains, hausdorff_distance, region_area, RateRegion};
use crate::profile::InnerBound;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Containment tolerance used in comparison reports (bps/Hz).
pub const COMPARISON_TOL: f64 = 1e-6;

/// First line of every CSV: `# irsmac <version> key=value ...`.
pub fn provenance_line(fields: &[(&str, String)]) -> String {
    let mut line = format!("# irsmac {VERSION}");
    for (k, v) in fields {
        let _ = write!(line, " {k}={v}");
    }
    line
}

/// Boundary CSV, traced from `(0, max r2)` to `(max r1, 0)`.
pub fn region_csv(region: &RateRegion, provenance: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{provenance}");
    let _ = writeln!(out, "r1_bps_hz,r2_bps_hz");
    for (r1, r2) in region.to_csv_rows() {
        let _ = writeln!(out, "{r1},{r2}");
    }
    out
}

/// Per-profile table `alpha,order,r1,r2,sweeps,beta` of an inner bound.
pub fn samples_csv(inner: &InnerBound, provenance: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{provenance}");
    let _ = writeln!(out, "alpha,order,r1_bps_hz,r2_bps_hz,sweeps,beta");
    for s in &inner.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.alpha,
            s.order.name(),
            s.pair.r1,
            s.pair.r2,
            s.trace.outer_iterations,
            s.trace.final_beta
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub outer: String,
    pub inner: String,
    pub contained: bool,
    pub hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub version: String,
    pub tolerance: f64,
    pub areas: BTreeMap<String, f64>,
    /// Every ordered pair of distinct methods.
    pub containment: Vec<Containment>,
}

impl Comparison {
    pub fn is_contained(&self, inner: &str, outer: &str) -> Option<bool> {
        self.containment
            .iter()
            .find(|c| c.inner == inner && c.outer == outer)
            .map(|c| c.contained)
    }
}

pub fn compare_regions(regions: &[(String, RateRegion)], tol: f64) -> Result<Comparison> {
    let mut containment = Vec::new();
    for (outer_name, outer) in regions {
        for (inner_name, inner) in regions {
            if inner_name != outer_name {
                containment.push(Containment {
                    outer: outer_name.clone(),
                    inner: inner_name.clone(),
                    contained: contains(outer, inner, tol)?,
                    hausdorff: hausdorff_distance(outer, inner),
                });
            }
        }
    }
    Ok(Comparison {
        version: VERSION.to_string(),
        tolerance: tol,
        areas: regions.iter().map(|(n, r)| (n.clone(), region_area(r))).collect(),
        containment,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ScenarioConfig,
    pub rng_seed: u64,
    pub draws: u64,
    pub methods: Vec<String>,
    /// Wall-clock seconds per method.
    pub runtime_s: BTreeMap<String, f64>,
    /// Methods that were requested but skipped, with the reason.
    pub skipped: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pentagon;

    #[test]
    fn csv_layout() {
        let r = Pentagon::new(1.0, 1.0, 1.5).region();
        let text = region_csv(&r, &provenance_line(&[("method", "x".into())]));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# irsmac {VERSION} method=x"));
        assert_eq!(lines[1], "r1_bps_hz,r2_bps_hz");
        assert_eq!(lines[2], "0,1");
        assert_eq!(*lines.last().unwrap(), "1,0");
    }

    #[test]
    fn comparison_pairs() {
        let small = Pentagon::new(1.0, 1.0, 1.5).region();
        let big = Pentagon::new(2.0, 2.0, 3.0).region();
        let c = compare_regions(&[("small".into(), small), ("big".into(), big)], COMPARISON_TOL).unwrap();
        assert_eq!(c.is_contained("small", "big"), Some(true));
        assert_eq!(c.is_contained("big", "small"), Some(false));
        assert_eq!(c.containment.len(), 2);
        assert!((c.areas["small"] - 0.875).abs() < 1e-12);
    }
}
