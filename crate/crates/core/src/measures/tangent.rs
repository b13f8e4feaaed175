//! Blow-ups of heavy cylinders and the Frostman and packing checks on them.
//!
//! For each `ell`, a cylinder `Q` at level `n` that is heavy up to `ell` for
//! `t = beta + 1/ell` carries the uniform measure `mu` on the centres of its
//! level-`k` sub-cubes. The homothety `f` with ratio `2 / (c rho^n)` sends
//! `B(x_Q, c rho^n / 2)` to the unit ball; `nu = mu o f^-1` then satisfies
//! `nu(B(x, r)) >= r^t (c rho / 4C)^t` for `x` in `F = f(K) n B(0, 1)` and every
//! `r` whose cylinder level `j` stays within the verified part of the
//! profile. The packing bound `(8C / (c rho))^beta` follows.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::measure::{counting_measure, packing_upper_bound, pushforward, Homothety};
use super::packing::{greedy_packing_sum, PackingEstimate};
use crate::cubes::{build_partition, max_resolved_level, partition_to_tree, InnerPartition, PointCloud};
use crate::error::{invalid, Error, Result};
use crate::grid::dist;
use crate::pigeonhole::{direct_cylinder_search, full_profile, good_cylinder, PigeonholeResult};
use crate::symtree::SymbolTree;
use crate::{Rational, RELATIVE_SLACK};

/// Deepest partition level used when the cloud has no finite resolution.
pub const DEFAULT_MAX_LEVEL: usize = 10;
/// Sampled `(x, r)` pairs per `ell`.
pub const SAMPLES_PER_ELL: usize = 100;
/// Allowed excess of a greedy packing sum over the predicted bound.
pub const PACKING_SLACK: f64 = 0.10;
/// Gap for the automatic exponent; lowered to `depth / 2` on shallow trees.
pub const AUTO_MIN_GAP: usize = 4;

/// How the exponent `beta` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    /// Lower-dimension estimate of the partition tree.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentConfig {
    pub rho: f64,
    /// Partition depth; `None` takes the deepest resolved level (capped at
    /// [`DEFAULT_MAX_LEVEL`] for clouds without resolution).
    pub k_max: Option<usize>,
    pub ell_schedule: Vec<usize>,
    pub beta: Beta,
    pub samples: usize,
    pub seed: u64,
}

impl TangentConfig {
    pub fn new(ell_schedule: Vec<usize>, beta: Beta) -> Self {
        Self {
            rho: 0.25,
            k_max: None,
            ell_schedule,
            beta,
            samples: SAMPLES_PER_ELL,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Which search produced the cylinder for one `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderRoute {
    /// The witness scan followed by the descent.
    GoodCylinder,
    /// The witness scan found nothing within the available depth; the
    /// cylinder comes from the exhaustive direct search instead.
    DirectSearch,
}

/// One sampled `(x, r)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSample {
    /// Cloud index of `f^-1(x)`.
    pub point: usize,
    pub r: f64,
    /// Cylinder offset `j` below `Q`.
    pub j: usize,
    pub mass: f64,
    pub lower_bound: f64,
    /// `nu(B(x, r)) / r^beta`, for plotting.
    pub mass_ratio: f64,
}

/// Everything computed for one `ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllReport {
    pub ell: usize,
    pub t: f64,
    pub route: CylinderRoute,
    pub cylinder: PigeonholeResult,
    pub n: usize,
    pub k: usize,
    /// `k - n`.
    pub m: usize,
    /// `ell - n` when the cylinder sits above level `ell`.
    pub n_shortfall: usize,
    /// Largest `J` with the profile above `rho^(t j)` for all `j <= J`.
    pub ell_eff: usize,
    pub centres: usize,
    pub scale: f64,
    pub r_range: (f64, f64),
    pub starved: bool,
    pub samples: Vec<ScaleSample>,
    /// `min nu(B(x, r)) / r^t` over the samples.
    pub frostman_constant: f64,
    /// `min nu(B(x, r)) / (r^t (c rho / 4C)^t)`; at least one when the bound holds.
    pub worst_ratio: f64,
    pub support_radius: f64,
    pub support_ok: bool,
    pub mass_law_ok: bool,
    pub chain_ok: bool,
    pub frostman_ok: bool,
    pub packing: Vec<PackingEstimate>,
    pub packing_ok: bool,
}

impl EllReport {
    pub fn passed(&self) -> bool {
        self.support_ok && self.mass_law_ok && self.chain_ok && self.frostman_ok && self.packing_ok
    }
}

/// The closing bound with exact constants `c = 1/6`, `C = 4/3`, `rho = 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolicBound {
    /// `8C / (c rho)`.
    pub base: Rational,
    pub reference: Rational,
    pub holds: bool,
}

/// `8C / (c rho)` in exact arithmetic, compared with 257.
pub fn symbolic_bound() -> SymbolicBound {
    let (c, big_c, rho) = (Rational::new(1, 6), Rational::new(4, 3), Rational::new(1, 4));
    let base = Rational::from_integer(8) * big_c / (c * rho);
    let reference = Rational::from_integer(257);
    SymbolicBound {
        base,
        reference,
        holds: base <= reference,
    }
}

/// Outcome of [`tangent_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentReport {
    pub beta: f64,
    pub beta_auto: bool,
    pub min_gap: usize,
    pub rho: f64,
    pub k_max: usize,
    /// Measured inner and outer constants used throughout.
    pub c: f64,
    pub big_c: f64,
    pub m_meas: usize,
    /// `(8C / (c rho))^beta`.
    pub packing_bound: f64,
    pub symbolic: SymbolicBound,
    pub ells: Vec<EllReport>,
    /// `(ell, reason)` for every `ell` without a usable cylinder.
    pub gaps: Vec<(usize, String)>,
}

impl TangentReport {
    pub fn passed(&self) -> bool {
        self.gaps.is_empty() && self.symbolic.holds && self.ells.iter().all(EllReport::passed)
    }

    /// Human-readable list of every failed check.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .gaps
            .iter()
            .map(|(ell, why)| format!("ell = {ell}: no cylinder ({why})"))
            .collect();
        for e in &self.ells {
            for (ok, what) in [
                (e.support_ok, "support outside B(0, 2C/c)"),
                (e.mass_law_ok, "cylinder masses disagree with branch counts"),
                (e.chain_ok, "cylinder chain for some sample broke"),
                (e.frostman_ok, "Frostman lower bound failed"),
                (e.packing_ok, "packing sum above the bound"),
            ] {
                if !ok {
                    out.push(format!("ell = {}: {what}", e.ell));
                }
            }
        }
        if !self.symbolic.holds {
            out.push("symbolic bound above 257".into());
        }
        out
    }
}

struct Context<'a> {
    partition: &'a InnerPartition,
    tree: &'a SymbolTree,
    owner: Vec<Vec<u32>>,
    beta: f64,
    c: f64,
    big_c: f64,
    min_gap: usize,
}

/// Runs the partition, the cylinder search and all checks for every `ell`.
pub fn tangent_pipeline(cloud: &PointCloud, config: &TangentConfig) -> Result<TangentReport> {
    if config.ell_schedule.is_empty() || config.ell_schedule.contains(&0) {
        return Err(invalid("ell schedule must be non-empty and positive"));
    }
    let cloud = if cloud.diameter() > 1.0 {
        cloud.normalized()
    } else {
        cloud.clone()
    };
    let resolved = max_resolved_level(config.rho, cloud.delta());
    let k_max = match config.k_max {
        Some(k) => k,
        None if cloud.delta() > 0.0 => resolved,
        None => DEFAULT_MAX_LEVEL,
    };
    let partition = build_partition(&cloud, config.rho, k_max)?;
    let tree = partition_to_tree(&partition)?;
    let depth = tree.depth();
    let min_gap = AUTO_MIN_GAP.min(depth / 2).max(1);
    let (beta, beta_auto) = match config.beta {
        Beta::Auto => (tree.lower_dim_estimate(min_gap)?.value, true),
        Beta::Fixed(b) if b >= 0.0 && b.is_finite() => (b, false),
        Beta::Fixed(b) => return Err(invalid(format!("beta must be non-negative, got {b}"))),
    };
    let c = partition.c_meas;
    let big_c = partition.big_c_meas.max(c);
    let mut owner = Vec::with_capacity(partition.levels.len());
    for level in &partition.levels {
        let mut o = vec![0u32; cloud.len()];
        for (j, cube) in level.iter().enumerate() {
            for &i in &cube.members {
                o[i as usize] = j as u32;
            }
        }
        owner.push(o);
    }
    let ctx = Context {
        partition: &partition,
        tree: &tree,
        owner,
        beta,
        c,
        big_c,
        min_gap,
    };
    let packing_bound = libm::pow(8.0 * big_c / (c * config.rho), beta);

    let mut ells = Vec::new();
    let mut gaps = Vec::new();
    for &ell in &config.ell_schedule {
        match run_ell(&ctx, config, ell, packing_bound) {
            Ok(r) => ells.push(r),
            Err(e @ (Error::WitnessNotFound { .. } | Error::InsufficientData { .. })) => {
                gaps.push((ell, format!("{e}")))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TangentReport {
        beta,
        beta_auto,
        min_gap,
        rho: config.rho,
        k_max,
        c,
        big_c,
        m_meas: partition.m_meas,
        packing_bound,
        symbolic: symbolic_bound(),
        ells,
        gaps,
    })
}

fn run_ell(ctx: &Context<'_>, config: &TangentConfig, ell: usize, packing_bound: f64) -> Result<EllReport> {
    let tree = ctx.tree;
    let rho = config.rho;
    let t = ctx.beta + 1.0 / ell as f64;
    let (route, cylinder) = match good_cylinder(tree, t, ell, ctx.min_gap) {
        Ok(g) => (CylinderRoute::GoodCylinder, g.result),
        Err(Error::WitnessNotFound { .. }) => (CylinderRoute::DirectSearch, direct_cylinder_search(tree, t, ell)?),
        Err(e) => return Err(e),
    };
    let (n, k) = (cylinder.n, cylinder.k);
    let q_idx = tree
        .find(&cylinder.code)
        .ok_or_else(|| Error::InternalConsistency("cylinder code missing from the tree".into()))?;
    let profile = full_profile(tree, &cylinder.code, k)?;
    let ell_eff = profile
        .iter()
        .enumerate()
        .take_while(|&(j, &p)| p >= libm::pow(rho, t * j as f64) * (1.0 - RELATIVE_SLACK))
        .last()
        .map_or(0, |(j, _)| j);

    // centres of the level-k sub-cubes of Q
    let labels = tree
        .labels()
        .ok_or_else(|| Error::InternalConsistency("partition tree lost its labels".into()))?;
    let q_cube = labels[n][q_idx] as usize;
    let centre_ids: Vec<u32> = tree
        .descendant_range(n, q_idx, k)
        .map(|i| ctx.partition.levels[k][labels[k][i] as usize].center)
        .collect();
    let cloud = &ctx.partition.cloud;
    let d = cloud.d();
    let mu = counting_measure(
        d,
        centre_ids
            .iter()
            .flat_map(|&i| cloud.point(i as usize).iter().copied())
            .collect(),
    )?;

    // mass of every cylinder below Q equals its share of level-k descendants
    let total = centre_ids.len();
    let mut mass_law_ok = true;
    for level in n..=k {
        for node in tree.descendant_range(n, q_idx, level) {
            let cube = labels[level][node];
            let inside = centre_ids
                .iter()
                .filter(|&&p| ctx.owner[level][p as usize] == cube)
                .count();
            let expect = tree.descendant_range(level, node, k).len();
            mass_law_ok &= Rational::new(inside as u64, total as u64)
                == mu.mass_of(|i| ctx.owner[level][centre_ids[i] as usize] == cube)
                && inside == expect;
        }
    }

    let x_q = cloud.point(ctx.partition.levels[n][q_cube].center as usize).to_vec();
    let scale = 2.0 / (ctx.c * libm::pow(rho, n as f64));
    let f = Homothety::new(scale, x_q.iter().map(|&x| -scale * x).collect())?;
    let nu = pushforward(&mu, &f)?;
    let origin = vec![0.0; d];
    let support_radius = nu.support_radius(&origin);
    let support_ok = support_radius <= 2.0 * ctx.big_c / ctx.c * (1.0 + 1e-9);

    // F = f(cloud) n B(0, 1), as cloud indices
    let f_points: Vec<usize> = (0..cloud.len())
        .filter(|&i| dist(&f.apply(cloud.point(i)), &origin) <= 1.0)
        .collect();

    let const_base = ctx.c * rho / (4.0 * ctx.big_c);
    let r_lo = 4.0 * ctx.big_c * libm::pow(rho, ell_eff as f64) / ctx.c * (1.0 + 1e-9);
    let starved = r_lo >= 1.0;
    let mut samples = Vec::new();
    let mut chain_ok = true;
    let mut frostman_ok = true;
    let mut frostman_constant = f64::INFINITY;
    let mut worst_ratio = f64::INFINITY;
    if !starved && !f_points.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (ell as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (ln_lo, ln_hi) = (libm::log(r_lo), 0.0f64);
        for _ in 0..config.samples {
            let z = f_points[rng.gen_range(0..f_points.len())];
            let r = libm::exp(rng.gen_range(ln_lo..ln_hi));
            let x = f.apply(cloud.point(z));
            // minimal j with C rho^(n+j) <= r c rho^n / 4
            let mut j = 0usize;
            while ctx.big_c * libm::pow(rho, j as f64) > r * ctx.c / 4.0 {
                j += 1;
            }
            let mut ok = j <= ell_eff && n + j <= k;
            if ok {
                let cube = ctx.owner[n + j][z];
                let mut anc = cube;
                for l in (n + 1..=n + j).rev() {
                    anc = ctx.partition.levels[l][anc as usize].parent.unwrap_or(u32::MAX);
                }
                let inside_q = anc as usize == q_cube;
                let mass_q = mu.mass_of(|i| ctx.owner[n + j][centre_ids[i] as usize] == cube);
                let mass_q = *mass_q.numer() as f64 / *mass_q.denom() as f64;
                let heavy = mass_q >= libm::pow(rho, t * j as f64) * (1.0 - RELATIVE_SLACK);
                let within = centre_ids
                    .iter()
                    .filter(|&&p| ctx.owner[n + j][p as usize] == cube)
                    .all(|&p| dist(&f.apply(cloud.point(p as usize)), &x) <= r);
                let small = scale * 2.0 * ctx.big_c * libm::pow(rho, (n + j) as f64) <= r * (1.0 + 1e-9);
                ok = inside_q && heavy && within && small;
            }
            chain_ok &= ok;
            let mass = nu.ball_mass_f64(&x, r);
            let lower_bound = libm::pow(r, t) * libm::pow(const_base, t);
            frostman_constant = frostman_constant.min(mass / libm::pow(r, t));
            worst_ratio = worst_ratio.min(mass / lower_bound);
            frostman_ok &= mass >= lower_bound * (1.0 - RELATIVE_SLACK);
            samples.push(ScaleSample {
                point: z,
                r,
                j,
                mass,
                lower_bound,
                mass_ratio: mass / libm::pow(r, ctx.beta),
            });
        }
    }

    // greedy packing sums on F over a dyadic sweep
    let f_coords: Vec<f64> = f_points.iter().flat_map(|&i| f.apply(cloud.point(i))).collect();
    let mut packing = Vec::new();
    let mut packing_ok = true;
    if !f_coords.is_empty() {
        let f_cloud = PointCloud::new(d, f_coords, cloud.delta() * scale)?;
        for i in 1..=20 {
            let delta = libm::ldexp(1.0, -i);
            if delta < 2.0 * f_cloud.delta() {
                break;
            }
            let mut e = greedy_packing_sum(&f_cloud, ctx.beta, delta)?;
            e.upper_bound = Some(packing_bound);
            packing_ok &= e.lower_sum <= packing_bound * (1.0 + PACKING_SLACK);
            packing.push(e);
        }
    }
    let _ = packing_upper_bound(libm::pow(const_base, ctx.beta), ctx.beta)?;

    Ok(EllReport {
        ell,
        t,
        route,
        n,
        k,
        m: k - n,
        n_shortfall: ell.saturating_sub(n),
        ell_eff,
        centres: total,
        scale,
        r_range: (r_lo.min(1.0), 1.0),
        starved,
        samples,
        frostman_constant,
        worst_ratio,
        support_radius,
        support_ok,
        mass_law_ok,
        chain_ok,
        frostman_ok,
        packing,
        packing_ok,
        cylinder,
    })
}
