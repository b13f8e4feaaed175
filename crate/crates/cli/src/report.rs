//! Self-contained JSON run reports and the conversions of core results into
//! JSON.

use microset_core::cubes::{CloudDimEstimate, ValidationReport};
use microset_core::measures::{EllReport, PackingEstimate, TangentReport};
use microset_core::moran::CoveringReport;
use microset_core::pigeonhole::{GoodCylinder, PigeonholeResult};
use microset_core::symtree::DimEstimate;
use microset_core::Rational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::rational::ratio_to_f64;

pub const TOOL: &str = "microset";

/// What every command prints and optionally writes with `--report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub passed: bool,
    pub failures: Vec<String>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            passed: true,
            failures: Vec::new(),
            result: Value::Null,
        }
    }

    /// Records an inequality; a false `holds` marks the run as failed.
    pub fn require(&mut self, holds: bool, failure: impl FnOnce() -> String) {
        if !holds {
            self.passed = false;
            self.failures.push(failure());
        }
    }

    /// The `(columns, rows)` of a plot series stored under `result.series`.
    pub fn series(&self, kind: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
        let s = self.result.get("series")?.get(kind)?;
        let columns = s
            .get("columns")?
            .as_array()?
            .iter()
            .map(|c| c.as_str().map(String::from))
            .collect::<Option<_>>()?;
        let rows = s
            .get("rows")?
            .as_array()?
            .iter()
            .map(|r| r.as_array()?.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .collect::<Option<_>>()?;
        Some((columns, rows))
    }
}

pub fn series(columns: &[&str], rows: Vec<Vec<f64>>) -> Value {
    json!({ "columns": columns, "rows": rows })
}

pub fn rational(r: Rational) -> Value {
    json!({ "exact": r.to_string(), "value": ratio_to_f64(r) })
}

/// Replaces non-finite floats (which JSON cannot hold) with strings.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn dim_estimate(e: &DimEstimate) -> Value {
    json!({
        "value": real(e.value),
        "witness": { "level": e.witness.0, "descendant_level": e.witness.1, "index": e.witness.2 },
        "profile": e.profile.iter().map(|&(g, v)| json!([g, real(v)])).collect::<Vec<_>>(),
    })
}

pub fn cloud_dim(e: &CloudDimEstimate) -> Value {
    json!({
        "value": real(e.value),
        "lower_bracket": real(e.lower_bracket),
        "witness": { "centre": e.witness.0, "R": e.witness.1, "r": e.witness.2 },
        "centres": e.centres,
        "scale_pairs": e.scale_pairs,
    })
}

pub fn covering(r: &CoveringReport) -> Value {
    json!({
        "m": r.m,
        "window": r.window,
        "zero_run_start": r.zero_run_start,
        "radius": r.radius,
        "cover_level": r.cover_level,
        "samples": r.samples,
        "exhaustive": r.exhaustive,
        "max_count": r.max_count,
        "bound": r.bound,
        "holds": r.holds,
        "worst": r.worst,
    })
}

pub fn validation(v: &ValidationReport) -> Value {
    json!({
        "properties": v.properties.iter().map(|p| json!({ "name": p.name, "holds": p.holds })).collect::<Vec<_>>(),
        "first_violation": v.first_violation.as_ref().map(|x| json!({
            "level": x.level, "cube": x.cube, "property": x.property,
        })),
        "c_meas": v.c_meas,
        "C_meas": v.big_c_meas,
        "M_meas": v.m_meas,
        "branching_bound": v.branching_bound,
    })
}

pub fn pigeonhole(r: &PigeonholeResult) -> Value {
    json!({
        "code": r.code,
        "n": r.n,
        "k": r.k,
        "s": r.s,
        "t": r.t,
        "ell": r.ell,
        "rho": r.rho,
        "ratio_profile": r.ratio_profile,
        "thresholds": (0..r.ratio_profile.len()).map(|j| r.threshold(j)).collect::<Vec<_>>(),
        "descent": r.descent.iter().map(|s| json!({
            "level": s.level,
            "code": s.code,
            "failed_at": s.failed_at,
            "count": s.count,
            "bound": real(s.bound),
        })).collect::<Vec<_>>(),
        "ordering_used": r.ordering_used,
        "ordering_swapped": r.ordering_swapped,
    })
}

pub fn ratio_rows(r: &PigeonholeResult) -> Vec<Vec<f64>> {
    r.ratio_profile
        .iter()
        .enumerate()
        .map(|(j, &p)| vec![j as f64, p, r.threshold(j)])
        .collect()
}

pub fn good_cylinder(g: &GoodCylinder) -> Value {
    json!({
        "cylinder": pigeonhole(&g.result),
        "estimate": real(g.estimate),
        "k0": g.k0,
        "delta": real(g.delta),
        "witness": {
            "n0": g.witness.n0,
            "m": g.witness.m,
            "p0": g.witness.p0,
            "count": g.witness.count,
        },
    })
}

pub fn packing(p: &PackingEstimate) -> Value {
    json!({
        "s": p.s,
        "delta": p.delta,
        "count": p.count,
        "lower_sum": p.lower_sum,
        "upper_bound": p.upper_bound.map(real),
    })
}

fn ell_block(e: &EllReport) -> Value {
    json!({
        "ell": e.ell,
        "t": e.t,
        "route": format!("{:?}", e.route),
        "Q": e.cylinder.code,
        "n": e.n,
        "k": e.k,
        "m": e.m,
        "n_shortfall": e.n_shortfall,
        "ell_eff": e.ell_eff,
        "centres": e.centres,
        "scale": e.scale,
        "r_range": [e.r_range.0, e.r_range.1],
        "starved": e.starved,
        "samples": e.samples.len(),
        "frostman_constant": real(e.frostman_constant),
        "worst_ratio": real(e.worst_ratio),
        "support_radius": e.support_radius,
        "support_ok": e.support_ok,
        "mass_law_ok": e.mass_law_ok,
        "chain_ok": e.chain_ok,
        "frostman_ok": e.frostman_ok,
        "packing": e.packing.iter().map(packing).collect::<Vec<_>>(),
        "packing_ok": e.packing_ok,
        "ratio_profile": e.cylinder.ratio_profile,
    })
}

pub fn tangent(r: &TangentReport) -> Value {
    let scatter = r
        .ells
        .iter()
        .flat_map(|e| e.samples.iter().map(move |s| vec![e.ell as f64, s.r, s.mass_ratio]))
        .collect();
    let ratio = r
        .ells
        .iter()
        .flat_map(|e| {
            ratio_rows(&e.cylinder).into_iter().map(move |mut row| {
                row.insert(0, e.ell as f64);
                row
            })
        })
        .collect();
    json!({
        "beta": r.beta,
        "beta_auto": r.beta_auto,
        "min_gap": r.min_gap,
        "rho": r.rho,
        "k_max": r.k_max,
        "c": r.c,
        "C": r.big_c,
        "M_meas": r.m_meas,
        "packing_bound": real(r.packing_bound),
        "symbolic": {
            "base": r.symbolic.base.to_string(),
            "reference": r.symbolic.reference.to_string(),
            "holds": r.symbolic.holds,
        },
        "ells": r.ells.iter().map(ell_block).collect::<Vec<_>>(),
        "gaps": r.gaps.iter().map(|(ell, why)| json!({ "ell": ell, "reason": why })).collect::<Vec<_>>(),
        "series": {
            "scatter": series(&["ell", "r", "mass_ratio"], scatter),
            "ratio": series(&["ell", "j", "min_ratio", "threshold"], ratio),
        },
    })
}
