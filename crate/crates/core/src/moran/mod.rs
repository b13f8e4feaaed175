//! Uniformly branching (homogeneous Moran) sets `K_rho(a)` in `[0,1]^d`.
//!
//! At level `n` every cube of side `rho^n` is replaced either by its `2^d`
//! corner sub-cubes of side `rho^(n+1)` (when `a_(n+1) = 1`) or by the single
//! sub-cube at its origin corner (when `a_(n+1) = 0`). Child symbol `s`
//! encodes the corner: bit `i` of `s - 1` selects the far side on axis `i`.
//!
//! Because the construction is homogeneous in space, a [`MoranTree`] stores
//! only its branching pattern; [`CubeTree`] is the materialized form.

mod covering;
mod hausdorff;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::seqgen::{window_sup_profile, BranchingSeq};
use crate::symtree::{DimEstimate, SymbolTree};
use crate::Rational;

pub use covering::{check_small_microset, CoveringReport, SAMPLE_CAP};
pub use hausdorff::hausdorff_distance;

/// Largest ambient dimension accepted; keeps `2^d` inside the alphabet type.
pub const MAX_DIM: usize = 16;

/// Parameters of `K_rho(a)`. The kept child on non-branching levels is
/// always the origin corner (symbol 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MoranSpec {
    pub d: usize,
    pub rho: f64,
    pub seq: BranchingSeq,
}

impl MoranSpec {
    pub fn new(d: usize, rho: f64, seq: BranchingSeq) -> Result<Self> {
        check_dim(d)?;
        check_moran_rho(rho)?;
        Ok(Self { d, rho, seq })
    }

    /// The implicit tree of the first `depth` levels.
    pub fn tree(&self, depth: usize) -> Result<MoranTree> {
        if depth > self.seq.len() {
            return Err(Error::InsufficientData {
                what: "branching sequence for the requested depth",
                needed: depth,
                available: self.seq.len(),
            });
        }
        Ok(MoranTree {
            d: self.d,
            rho: self.rho,
            branching: self.seq.bits()[..depth].iter().map(|&b| b == 1).collect(),
        })
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(invalid(format!("dimension must lie in 1..={MAX_DIM}, got {d}")));
    }
    Ok(())
}

fn check_moran_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(invalid(format!("rho must lie in (0, 1/2], got {rho}")));
    }
    Ok(())
}

/// Builds the materialized cube tree of `K_rho(a)` to `depth`, refusing to
/// allocate more than `node_cap` nodes.
pub fn build_moran(spec: &MoranSpec, depth: usize, node_cap: usize) -> Result<CubeTree> {
    spec.tree(depth)?.materialize(node_cap)
}

/// An axis-aligned closed cube `origin + [0, side]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub origin: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn unit(d: usize) -> Self {
        Self {
            origin: vec![0.0; d],
            side: 1.0,
        }
    }

    /// Corner child with symbol `s` at contraction `rho`.
    pub fn child(&self, s: u32, rho: f64) -> Self {
        let mut c = self.clone();
        c.descend(s, rho);
        c
    }

    fn descend(&mut self, s: u32, rho: f64) {
        let step = (1.0 - rho) * self.side;
        let e = s - 1;
        for (i, x) in self.origin.iter_mut().enumerate() {
            if e >> i & 1 == 1 {
                *x += step;
            }
        }
        self.side *= rho;
    }

    /// Euclidean distance from `p` to the cube (0 inside).
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        let s2: f64 = self
            .origin
            .iter()
            .zip(p)
            .map(|(&o, &x)| {
                let gap = if x < o {
                    o - x
                } else if x > o + self.side {
                    x - o - self.side
                } else {
                    0.0
                };
                gap * gap
            })
            .sum();
        libm::sqrt(s2)
    }
}

/// Implicit `K_rho(a)` tree: `branching[n]` is `a_(n+1) == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoranTree {
    d: usize,
    rho: f64,
    branching: Vec<bool>,
}

impl MoranTree {
    pub fn new(d: usize, rho: f64, branching: Vec<bool>) -> Result<Self> {
        check_dim(d)?;
        check_moran_rho(rho)?;
        Ok(Self { d, rho, branching })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn depth(&self) -> usize {
        self.branching.len()
    }

    pub fn branching(&self) -> &[bool] {
        &self.branching
    }

    pub fn alphabet(&self) -> u32 {
        1 << self.d
    }

    /// Number of children of every node at level `n`.
    pub fn children_at(&self, n: usize) -> u32 {
        if self.branching[n] {
            self.alphabet()
        } else {
            1
        }
    }

    /// `log2 #T_n = d * (a_1 + ... + a_n)`.
    pub fn level_count_log2(&self, n: usize) -> usize {
        self.d * self.branching[..n].iter().filter(|&&b| b).count()
    }

    /// `#T_n` when it fits in `u128`.
    pub fn level_count(&self, n: usize) -> Option<u128> {
        let e = self.level_count_log2(n);
        (e < 128).then(|| 1u128 << e)
    }

    pub fn contains(&self, code: &[u32]) -> bool {
        code.len() <= self.depth()
            && code
                .iter()
                .enumerate()
                .all(|(n, &s)| s >= 1 && s <= self.children_at(n))
    }

    fn require(&self, code: &[u32]) -> Result<()> {
        if self.contains(code) {
            Ok(())
        } else {
            Err(Error::NotFound { code: code.to_vec() })
        }
    }

    /// The cube coded by `code`.
    pub fn cube(&self, code: &[u32]) -> Result<Cube> {
        self.require(code)?;
        let mut c = Cube::unit(self.d);
        for &s in code {
            c.descend(s, self.rho);
        }
        Ok(c)
    }

    /// The magnified tree at `code`: `T_Q` maps the cube of `code` onto the
    /// unit cube and the image is `K_rho` of the shifted sequence.
    pub fn microset(&self, code: &[u32]) -> Result<MoranTree> {
        self.require(code)?;
        Ok(Self {
            d: self.d,
            rho: self.rho,
            branching: self.branching[code.len()..].to_vec(),
        })
    }

    /// Like [`MoranTree::microset`] but truncated to `depth` levels.
    pub fn microset_prefix(&self, code: &[u32], depth: usize) -> Result<MoranTree> {
        let mut t = self.microset(code)?;
        if depth > t.depth() {
            return Err(Error::InsufficientData {
                what: "tree depth below the microset root",
                needed: depth,
                available: t.depth(),
            });
        }
        t.branching.truncate(depth);
        Ok(t)
    }

    /// A uniformly random word of length `level`.
    pub fn random_code<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> Vec<u32> {
        (0..level).map(|n| rng.gen_range(1..=self.children_at(n))).collect()
    }

    /// Materializes every node and cube.
    pub fn materialize(&self, node_cap: usize) -> Result<CubeTree> {
        let mut total = 0usize;
        for n in 0..=self.depth() {
            let c = self.level_count(n).unwrap_or(u128::MAX);
            total = total.saturating_add(usize::try_from(c).unwrap_or(usize::MAX));
            if total > node_cap {
                return Err(invalid(format!(
                    "materializing {} levels needs more than {node_cap} nodes",
                    self.depth()
                )));
            }
        }
        let mut links = Vec::with_capacity(self.depth());
        let mut geometry = vec![CubeLevel {
            side: 1.0,
            origins: vec![0.0; self.d],
        }];
        for n in 0..self.depth() {
            let k = self.children_at(n);
            let above = geometry.last().unwrap();
            let width = above.len(self.d);
            let mut level = Vec::with_capacity(width * k as usize);
            let mut next = CubeLevel {
                side: above.side * self.rho,
                origins: Vec::with_capacity(width * k as usize * self.d),
            };
            for p in 0..width {
                let parent = above.cube(self.d, p);
                for s in 1..=k {
                    level.push((p as u32, s));
                    next.origins.extend(parent.child(s, self.rho).origin);
                }
            }
            links.push(level);
            geometry.push(next);
        }
        let tree = SymbolTree::from_parent_links(self.alphabet(), self.rho, links)?;
        Ok(CubeTree {
            d: self.d,
            tree,
            geometry: Some(geometry),
        })
    }
}

/// Cube geometry of one level: common side length and flat origins.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeLevel {
    pub side: f64,
    pub origins: Vec<f64>,
}

impl CubeLevel {
    pub fn len(&self, d: usize) -> usize {
        self.origins.len() / d
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn cube(&self, d: usize, i: usize) -> Cube {
        Cube {
            origin: self.origins[i * d..(i + 1) * d].to_vec(),
            side: self.side,
        }
    }
}

/// A symbol tree with optional per-node cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeTree {
    pub d: usize,
    pub tree: SymbolTree,
    pub geometry: Option<Vec<CubeLevel>>,
}

impl CubeTree {
    /// Validates the geometry against the tree: one cube per node, children
    /// inside their parents with side `rho` times the parent side.
    pub fn new(d: usize, tree: SymbolTree, geometry: Option<Vec<CubeLevel>>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if let Some(g) = &geometry {
            if g.len() != tree.depth() + 1 {
                return Err(invalid("geometry must have one entry per level"));
            }
            for (n, level) in g.iter().enumerate() {
                if level.origins.len() != tree.level_len(n) * d {
                    return Err(invalid(format!("geometry of level {n} has the wrong size")));
                }
                if n == 0 {
                    continue;
                }
                let ratio = level.side / g[n - 1].side;
                if (ratio - tree.rho()).abs() > 1e-9 * tree.rho() {
                    return Err(invalid(format!("side ratio at level {n} is {ratio}")));
                }
                let tol = 1e-9 * g[n - 1].side;
                for i in 0..tree.level_len(n) {
                    let p = g[n - 1].cube(d, tree.parent(n, i));
                    let c = level.cube(d, i);
                    let inside = c
                        .origin
                        .iter()
                        .zip(&p.origin)
                        .all(|(&x, &o)| x >= o - tol && x + c.side <= o + p.side + tol);
                    if !inside {
                        return Err(invalid(format!("cube {i} at level {n} leaves its parent")));
                    }
                }
            }
        }
        Ok(Self { d, tree, geometry })
    }

    pub fn depth(&self) -> usize {
        self.tree.depth()
    }

    /// Cube of node `i` at `level`, when geometry is present.
    pub fn cube(&self, level: usize, i: usize) -> Option<Cube> {
        self.geometry.as_ref().map(|g| g[level].cube(self.d, i))
    }

    /// The dyadic microset prefix at `code`: the subtree rooted there, cut
    /// to `depth` levels, with geometry mapped by the homothety taking the
    /// root cube onto the unit cube.
    pub fn microset(&self, code: &[u32], depth: usize) -> Result<CubeTree> {
        let idx = self
            .tree
            .find(code)
            .ok_or_else(|| Error::NotFound { code: code.to_vec() })?;
        let level = code.len();
        if level + depth > self.depth() {
            return Err(Error::InsufficientData {
                what: "tree depth below the microset root",
                needed: level + depth,
                available: self.depth(),
            });
        }
        let tree = self.tree.subtree_at(level, idx, level + depth);
        let geometry = self.geometry.as_ref().map(|g| {
            let root = g[level].cube(self.d, idx);
            let mut out = Vec::with_capacity(depth + 1);
            let (mut lo, mut hi) = (idx, idx + 1);
            for l in level..=level + depth {
                let src = &g[l];
                let origins = src.origins[lo * self.d..hi * self.d]
                    .chunks(self.d)
                    .flat_map(|o| o.iter().zip(&root.origin).map(|(&x, &r)| (x - r) / root.side))
                    .collect();
                out.push(CubeLevel {
                    side: src.side / root.side,
                    origins,
                });
                if l < level + depth {
                    let r = self.tree.descendant_range(l, lo, l + 1);
                    let r_hi = self.tree.descendant_range(l, hi - 1, l + 1);
                    lo = r.start;
                    hi = r_hi.end;
                }
            }
            out
        });
        Ok(CubeTree {
            d: self.d,
            tree,
            geometry,
        })
    }
}

/// The closed-form Assouad dimension at a finite window length.
#[derive(Debug, Clone, PartialEq)]
pub struct AssouadFormula {
    pub value: f64,
    /// Largest window mean for every window length `1..=n_max`.
    pub sup_means: Vec<Rational>,
}

fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn formula_scale(d: usize, rho: f64) -> f64 {
    d as f64 * core::f64::consts::LN_2 / libm::log(1.0 / rho)
}

/// `d ln 2 / ln(1/rho)` times the largest mean of `n_max` consecutive terms.
pub fn assouad_from_formula(seq: &BranchingSeq, rho: f64, d: usize, n_max: usize) -> Result<AssouadFormula> {
    check_dim(d)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    let sup_means = window_sup_profile(seq, n_max)?;
    let value = formula_scale(d, rho) * ratio_to_f64(sup_means[n_max - 1]);
    Ok(AssouadFormula { value, sup_means })
}

/// Solves `assouad_from_formula(seq, rho, d, n_max) = alpha` for `rho` in
/// `(0, 1/2]` by bisection, then checks the residual against `tol`.
pub fn calibrate_rho(seq: &BranchingSeq, d: usize, alpha: f64, n_max: usize, tol: f64) -> Result<f64> {
    check_dim(d)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let sup = ratio_to_f64(crate::seqgen::window_sup_mean(seq, n_max)?);
    let f = |rho: f64| formula_scale(d, rho) * sup;
    let max = f(0.5);
    if alpha > max + tol {
        return Err(Error::InfeasibleTarget { alpha, max });
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let err = |r: f64| if r > 0.0 { (f(r) - alpha).abs() } else { f64::INFINITY };
    let rho = if err(hi) <= err(lo) { hi } else { lo };
    if err(rho) > tol {
        return Err(Error::InternalConsistency(format!(
            "bisection residual {} exceeds tolerance {tol}",
            err(rho)
        )));
    }
    Ok(rho)
}

/// Dyadic Assouad estimator on an implicit tree: maximum over levels `k` and
/// gaps `g >= min_gap` of `ln #(descendants g levels below) / (g ln(1/rho))`.
pub fn dyadic_assouad_estimate(tree: &MoranTree, min_gap: usize) -> Result<DimEstimate> {
    if min_gap == 0 {
        return Err(invalid("min_gap must be at least 1"));
    }
    let depth = tree.depth();
    if depth < 2 * min_gap {
        return Err(Error::InsufficientData {
            what: "tree depth for a dimension estimate",
            needed: 2 * min_gap,
            available: depth,
        });
    }
    let mut sums = Vec::with_capacity(depth + 1);
    sums.push(0usize);
    for &b in tree.branching() {
        sums.push(sums.last().unwrap() + usize::from(b));
    }
    let scale = formula_scale(tree.d, tree.rho);
    let mut best = (f64::NEG_INFINITY, (0, 0, 0));
    let mut profile = Vec::with_capacity(depth - min_gap + 1);
    for g in min_gap..=depth {
        let (k, ones) = (0..=depth - g)
            .map(|k| (k, sums[k + g] - sums[k]))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let v = scale * ones as f64 / g as f64;
        profile.push((g, v));
        if v > best.0 {
            best = (v, (k, k + g, 0));
        }
    }
    Ok(DimEstimate {
        value: best.0,
        witness: best.1,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::build_sequence;
    use approx::assert_abs_diff_eq;

    fn seq(bits: &[u8]) -> BranchingSeq {
        BranchingSeq::from_bits(bits.to_vec()).unwrap()
    }

    #[test]
    fn one_branching_level_in_one_dimension() {
        let spec = MoranSpec::new(1, 0.5, seq(&[1])).unwrap();
        let t = build_moran(&spec, 1, 100).unwrap();
        assert_eq!(t.tree.level_sizes(), [1, 2]);
        assert_eq!(
            t.cube(1, 0).unwrap(),
            Cube {
                origin: vec![0.0],
                side: 0.5
            }
        );
        assert_eq!(
            t.cube(1, 1).unwrap(),
            Cube {
                origin: vec![0.5],
                side: 0.5
            }
        );
    }

    #[test]
    fn node_counts_follow_branching() {
        let spec = MoranSpec::new(1, 0.5, seq(&[0, 1])).unwrap();
        assert_eq!(build_moran(&spec, 2, 100).unwrap().tree.level_len(2), 2);
        let spec = MoranSpec::new(2, 0.5, seq(&[1, 1])).unwrap();
        let t = build_moran(&spec, 2, 100).unwrap();
        assert_eq!(t.tree.level_sizes(), [1, 4, 16]);
        let implicit = spec.tree(2).unwrap();
        assert_eq!(implicit.level_count(2), Some(16));
        assert!(spec.tree(3).is_err());
    }

    #[test]
    fn counts_of_one_zero_one() {
        let spec = MoranSpec::new(1, 0.5, seq(&[1, 0, 1])).unwrap();
        let t = build_moran(&spec, 3, 100).unwrap();
        assert_eq!(t.tree.branch_count(&[], 3).unwrap(), 4);
    }

    #[test]
    fn kept_child_is_origin_corner() {
        let spec = MoranSpec::new(2, 0.25, seq(&[0, 1])).unwrap();
        let t = spec.tree(2).unwrap();
        assert_eq!(
            t.cube(&[1]).unwrap(),
            Cube {
                origin: vec![0.0, 0.0],
                side: 0.25
            }
        );
        assert!(t.cube(&[2]).is_err());
        let c = t.cube(&[1, 4]).unwrap();
        assert_abs_diff_eq!(c.origin[0], 0.75 * 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.origin[1], 0.75 * 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.side, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn materialized_geometry_validates() {
        let s = build_sequence(Rational::new(1, 3), 12).unwrap();
        let spec = MoranSpec::new(2, 0.4, s).unwrap();
        let t = build_moran(&spec, 8, 1 << 20).unwrap();
        let again = CubeTree::new(t.d, t.tree.clone(), t.geometry.clone()).unwrap();
        assert_eq!(again, t);
        assert!(build_moran(&spec, 8, 10).is_err());
    }

    #[test]
    fn microset_at_root_is_the_tree() {
        let s = build_sequence(Rational::new(1, 2), 10).unwrap();
        let spec = MoranSpec::new(1, 0.5, s).unwrap();
        let t = build_moran(&spec, 10, 1 << 16).unwrap();
        assert_eq!(t.microset(&[], 10).unwrap(), t);
        assert!(matches!(t.microset(&[3], 2), Err(Error::NotFound { .. })));
        assert!(matches!(t.microset(&[2], 10), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn microset_matches_shifted_construction() {
        let s = build_sequence(Rational::new(1, 4), 10).unwrap();
        let spec = MoranSpec::new(2, 0.5, s.clone()).unwrap();
        let t = build_moran(&spec, 10, 1 << 22).unwrap();
        let code = [3, 1, 4, 2];
        let implicit = spec.tree(10).unwrap();
        let code: Vec<u32> = code
            .iter()
            .enumerate()
            .map(|(n, &c)| c.min(implicit.children_at(n)))
            .collect();
        let micro = t.microset(&code, 6).unwrap();
        let shifted = MoranSpec::new(2, 0.5, s.shifted(code.len()).unwrap()).unwrap();
        let direct = build_moran(&shifted, 6, 1 << 20).unwrap();
        assert_eq!(micro.tree, direct.tree);
        assert_eq!(hausdorff_distance(&micro, &direct, 6).unwrap(), 0.0);
        let via_implicit = implicit
            .microset_prefix(&code, 6)
            .unwrap()
            .materialize(1 << 20)
            .unwrap();
        assert_eq!(via_implicit.tree, direct.tree);
    }

    #[test]
    fn formula_examples() {
        let ones = BranchingSeq::ones(100).unwrap();
        assert_abs_diff_eq!(
            assouad_from_formula(&ones, 0.5, 1, 50).unwrap().value,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            assouad_from_formula(&ones, 0.25, 1, 50).unwrap().value,
            0.5,
            epsilon = 1e-15
        );
        let p = BranchingSeq::periodic(&[1, 1, 0], 3000).unwrap();
        let f = assouad_from_formula(&p, 0.5, 1, 3000).unwrap();
        assert_abs_diff_eq!(f.value, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(f.sup_means[1], Rational::new(1, 1));
        assert!(assouad_from_formula(&p, 0.5, 1, 3001).is_err());
    }

    #[test]
    fn calibration_examples() {
        let ones = BranchingSeq::ones(100).unwrap();
        assert_eq!(calibrate_rho(&ones, 1, 1.0, 100, 1e-12).unwrap(), 0.5);
        assert_abs_diff_eq!(calibrate_rho(&ones, 1, 0.5, 100, 1e-12).unwrap(), 0.25, epsilon = 1e-12);
        let p = BranchingSeq::periodic(&[1, 1, 0], 3000).unwrap();
        let rho = calibrate_rho(&p, 1, 0.5, 3000, 1e-12).unwrap();
        assert_abs_diff_eq!(rho, libm::pow(2.0, -4.0 / 3.0), epsilon = 1e-12);
        assert!(matches!(
            calibrate_rho(&p, 1, 0.9, 3000, 1e-12),
            Err(Error::InfeasibleTarget { .. })
        ));
        assert!(calibrate_rho(&p, 1, 0.0, 3000, 1e-12).is_err());
    }

    #[test]
    fn dyadic_estimator_on_periodic_pattern() {
        let p = BranchingSeq::periodic(&[1, 1, 0], 600).unwrap();
        let t = MoranSpec::new(1, 0.5, p).unwrap().tree(600).unwrap();
        let est = dyadic_assouad_estimate(&t, 50).unwrap();
        assert!(est.value >= 2.0 / 3.0 && est.value <= 2.0 / 3.0 + 0.02);
        assert_abs_diff_eq!(dyadic_assouad_estimate(&t, 1).unwrap().value, 1.0);
    }
}
