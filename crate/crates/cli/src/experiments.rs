//! The two end-to-end verification runs.

use std::path::Path;

use microset_core::cubes::{build_partition, validate_partition, PointCloud};
use microset_core::measures::{tangent_pipeline, Beta, TangentConfig, DEFAULT_MAX_LEVEL};
use microset_core::moran::{assouad_from_formula, calibrate_rho, check_small_microset, CoveringReport, MoranSpec};
use microset_core::seqgen::{build_sequence, window_length};
use microset_core::{Error, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::report::{self, Report};

/// Bisection tolerance for the calibrated contraction ratio.
pub const CALIBRATION_TOL: f64 = 1e-9;
/// Window length for the Assouad formula when none is given.
pub const DEFAULT_N_MAX: usize = 1000;

#[derive(Debug, Clone)]
pub struct TheoremA {
    pub gamma: Rational,
    pub d: usize,
    pub alpha: f64,
    pub depth: usize,
    pub m_max: u64,
    pub samples: usize,
    pub n_max: Option<usize>,
}

/// Sampled microset prefix: the level it hangs from and its covering reports.
struct Trial {
    level: usize,
    reports: Vec<CoveringReport>,
}

/// Sequence, calibrated `rho_0`, the Moran tree, sampled dyadic microsets and
/// the small-covering check for `m = 1..=m_max`. Trials are spread over
/// `jobs` threads; each trial has its own seed, so the result does not depend
/// on `jobs`.
pub fn run_theorem_a(p: &TheoremA, seed: u64, jobs: usize, mut report: Report) -> Result<Report> {
    if p.alpha == 0.0 {
        // a single point already has every dimension equal to zero
        report.result = json!({ "trivial": true, "reason": "alpha = 0 is attained by a single point" });
        return Ok(report);
    }
    if !(p.alpha > 0.0) || p.alpha >= p.d as f64 {
        return Err(Error::InfeasibleTarget {
            alpha: p.alpha,
            max: p.d as f64,
        }
        .into());
    }
    if p.m_max == 0 || p.samples == 0 {
        return Err(CliError::Parameter("m-max and samples must be positive".into()));
    }
    let window = window_length(p.gamma, p.m_max) as usize;
    if window > p.depth {
        return Err(Error::InsufficientData {
            what: "tree depth for the largest zero window",
            needed: window,
            available: p.depth,
        }
        .into());
    }
    let seq = build_sequence(p.gamma, p.depth)?;
    let n_max = p.n_max.unwrap_or(p.depth.min(DEFAULT_N_MAX));
    let rho = calibrate_rho(&seq, p.d, p.alpha, n_max, CALIBRATION_TOL)?;
    let formula = assouad_from_formula(&seq, rho, p.d, n_max)?.value;
    let spec = MoranSpec::new(p.d, rho, seq)?;
    let tree = spec.tree(p.depth)?;

    let run = |i: usize| -> Result<Trial> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let level = rng.gen_range(0..=p.depth - window);
        let code = tree.random_code(level, &mut rng);
        let micro = tree.microset_prefix(&code, window)?;
        let reports = (1..=p.m_max)
            .map(|m| check_small_microset(&spec, &micro, m, rng.gen()))
            .collect::<microset_core::Result<_>>()?;
        Ok(Trial { level, reports })
    };
    let jobs = jobs.clamp(1, p.samples);
    let mut trials: Vec<Option<Result<Trial>>> = (0..p.samples).map(|_| None).collect();
    std::thread::scope(|scope| {
        let run = &run;
        let handles: Vec<_> = (0..jobs)
            .map(|w| scope.spawn(move || (w..p.samples).step_by(jobs).map(|i| (i, run(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, t) in h.join().expect("trial thread panicked") {
                trials[i] = Some(t);
            }
        }
    });
    let trials = trials
        .into_iter()
        .map(|t| t.expect("every trial ran"))
        .collect::<Result<Vec<_>>>()?;

    let bound = 9usize.pow(p.d as u32);
    let mut per_m = vec![0usize; p.m_max as usize];
    for (i, trial) in trials.iter().enumerate() {
        for r in &trial.reports {
            per_m[r.m as usize - 1] = per_m[r.m as usize - 1].max(r.max_count);
            report.require(r.holds && r.max_count <= bound, || {
                format!(
                    "sample {i} (level {}), m = {}: {} cubes > {bound}",
                    trial.level, r.m, r.max_count
                )
            });
        }
    }
    report.result = json!({
        "rho_0": rho,
        "assouad_formula": formula,
        "n_max": n_max,
        "microset_depth": window,
        "bound": bound,
        "max_count_per_m": per_m.iter().enumerate().map(|(m, c)| json!({ "m": m + 1, "max_count": c })).collect::<Vec<_>>(),
        "trials": trials.iter().map(|t| json!({
            "level": t.level,
            "checks": t.reports.iter().map(report::covering).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok(report)
}

/// Partition, its tree and the tangent pipeline with `ell = 1..=ell_max`.
pub fn run_theorem_b(
    cloud: &PointCloud,
    cloud_path: &Path,
    ell_max: usize,
    k_max: Option<usize>,
    seed: u64,
    mut report: Report,
) -> Result<Report> {
    if ell_max == 0 {
        return Err(CliError::Parameter("ell-max must be positive".into()));
    }
    let mut config = TangentConfig::new((1..=ell_max).collect(), Beta::Auto);
    config.k_max = k_max;
    config.seed = seed;
    let tangent = tangent_pipeline(cloud, &config)?;
    // the same partition the pipeline used, for its axioms
    let normalized = if cloud.diameter() > 1.0 {
        cloud.normalized()
    } else {
        cloud.clone()
    };
    let partition = build_partition(&normalized, config.rho, tangent.k_max)?;
    let validation = validate_partition(&partition);
    report.require(validation.all_pass(), || {
        let v = validation.first_violation.as_ref();
        format!("partition axioms fail: {:?}", v.map(|v| &v.property))
    });
    for f in tangent.failures() {
        report.require(false, || f);
    }
    report.result = json!({
        "cloud": cloud_path,
        "points": cloud.len(),
        "partition": report::validation(&validation),
        "tangent": report::tangent(&tangent),
        "final_bound": report::real(tangent.packing_bound),
        "default_max_level": DEFAULT_MAX_LEVEL,
    });
    Ok(report)
}

/// Moves the plot series of a nested result block to the top level.
pub fn hoist_series(result: &mut Value, from: &str) {
    if let Some(series) = result
        .get_mut(from)
        .and_then(|v| v.as_object_mut())
        .and_then(|o| o.remove("series"))
    {
        result["series"] = series;
    }
}
