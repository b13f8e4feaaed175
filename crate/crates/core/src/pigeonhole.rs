//! Finding cylinders whose mass spreads out no faster than `rho^(t j)`.
//!
//! For a cylinder `Q` at level `n` and a reference level `k`, the ratio at
//! relative level `j` is the smallest share of the level-`k` descendants of
//! `Q` that a single level-`(n + j)` descendant `Q'` holds. A cylinder is
//! *heavy* up to `ell` when that share is at least `rho^(t j)` for every
//! `j = 0..=ell`.
//!
//! [`reverse_furstenberg`] finds such a cylinder by descending into failing
//! sub-cylinders. It needs `0 < s < t`, `#T_k <= rho^(-k s)` and
//! `k >= ell t / (t - s)`. With the roles of `s` and `t` exchanged
//! (`0 < t < s`, `k >= ell t / (s - t)`) the final counting step yields no
//! contradiction, so the search uses `s < t`; both orderings are recorded in
//! its output.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::symtree::SymbolTree;
use crate::RELATIVE_SLACK;

/// Parameter ordering the search implements.
pub const ORDERING_USED: &str = "0 < s < t, k >= ell * t / (t - s)";
/// The swapped ordering, kept for reference.
pub const ORDERING_SWAPPED: &str = "0 < t < s, k >= ell * t / (s - t)";

/// Tolerance on the precondition `k >= ell t / (t - s)`.
const K_TOLERANCE: f64 = 1e-9;

/// One failure step of the descent.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentStep {
    /// Absolute level of the cylinder tested at this step.
    pub level: usize,
    pub code: Vec<u32>,
    /// Relative level at which the test failed.
    pub failed_at: usize,
    /// `#T^Q_(k - level)` of the tested cylinder.
    pub count: usize,
    /// Running bound `rho^(-k s) rho^(level t)` the count stays below.
    pub bound: f64,
}

/// A heavy cylinder together with the evidence for it.
#[derive(Debug, Clone, PartialEq)]
pub struct PigeonholeResult {
    pub n: usize,
    pub code: Vec<u32>,
    pub k: usize,
    /// `None` when the cylinder came from the direct search.
    pub s: Option<f64>,
    pub t: f64,
    pub ell: usize,
    pub rho: f64,
    /// `ratio_profile[j]`: smallest share held by a level-`(n + j)` descendant.
    pub ratio_profile: Vec<f64>,
    pub descent: Vec<DescentStep>,
    pub ordering_used: &'static str,
    pub ordering_swapped: &'static str,
}

impl PigeonholeResult {
    pub fn threshold(&self, j: usize) -> f64 {
        libm::pow(self.rho, self.t * j as f64)
    }
}

/// `counts[l][i]`: number of level-`k` descendants of node `i` at level `l`.
fn descendant_counts(tree: &SymbolTree, k: usize) -> Vec<Vec<usize>> {
    let mut counts: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    counts[k] = vec![1; tree.level_len(k)];
    for l in (0..k).rev() {
        let below = &counts[l + 1];
        counts[l] = (0..tree.level_len(l))
            .map(|i| tree.children(l, i).map(|c| below[c]).sum())
            .collect();
    }
    counts
}

fn passes(count: usize, total: usize, threshold: f64) -> bool {
    count as f64 >= threshold * total as f64 * (1.0 - RELATIVE_SLACK)
}

/// Smallest relative level `j <= ell` (and first cylinder there, in
/// lexicographic order) where the share drops below `rho^(t j)`.
fn first_failure(
    tree: &SymbolTree,
    counts: &[Vec<usize>],
    level: usize,
    idx: usize,
    ell: usize,
    t: f64,
) -> Option<(usize, usize)> {
    let total = counts[level][idx];
    (1..=ell).find_map(|j| {
        let threshold = libm::pow(tree.rho(), t * j as f64);
        tree.descendant_range(level, idx, level + j)
            .find(|&q| !passes(counts[level + j][q], total, threshold))
            .map(|q| (j, q))
    })
}

fn profile(tree: &SymbolTree, counts: &[Vec<usize>], level: usize, idx: usize, depth: usize) -> Vec<f64> {
    let total = counts[level][idx] as f64;
    (0..=depth)
        .map(|j| {
            tree.descendant_range(level, idx, level + j)
                .map(|q| counts[level + j][q])
                .min()
                .map_or(0.0, |c| c as f64 / total)
        })
        .collect()
}

fn check_params(tree: &SymbolTree, s: f64, t: f64, ell: usize, k: usize) -> Result<()> {
    if !(s > 0.0 && s < t && t.is_finite()) {
        return Err(invalid(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    if k > tree.depth() {
        return Err(Error::InsufficientData {
            what: "tree depth for the reference level",
            needed: k,
            available: tree.depth(),
        });
    }
    let k_min = ell as f64 * t / (t - s);
    if (k as f64) < k_min - K_TOLERANCE {
        return Err(invalid(format!("k = {k} is below ell t / (t - s) = {k_min}")));
    }
    let top = tree.level_len(k) as f64;
    let cap = libm::pow(tree.rho(), -(k as f64) * s);
    if top > cap * (1.0 + RELATIVE_SLACK) {
        return Err(invalid(format!("#T_k = {top} exceeds rho^(-k s) = {cap}")));
    }
    Ok(())
}

/// The descent: test the current cylinder, and on failure at relative level
/// `j` move to the first failing level-`j` descendant.
pub fn reverse_furstenberg(tree: &SymbolTree, s: f64, t: f64, ell: usize, k: usize) -> Result<PigeonholeResult> {
    check_params(tree, s, t, ell, k)?;
    let counts = descendant_counts(tree, k);
    let rho = tree.rho();
    let (mut level, mut idx) = (0usize, 0usize);
    let mut descent = Vec::new();
    let mut bound = libm::pow(rho, -(k as f64) * s);
    loop {
        if level + ell > k {
            return Err(Error::InternalConsistency(format!(
                "descent reached level {level}, beyond k - ell = {}",
                k as i64 - ell as i64
            )));
        }
        let count = counts[level][idx];
        // the count seen from this cylinder agrees with a direct range count
        if count != tree.descendant_range(level, idx, k).len() {
            return Err(Error::InternalConsistency(format!(
                "count bookkeeping broke at level {level}"
            )));
        }
        if count as f64 > bound * (1.0 + RELATIVE_SLACK) {
            return Err(Error::InternalConsistency(format!(
                "count {count} exceeds the running bound {bound} at level {level}"
            )));
        }
        match first_failure(tree, &counts, level, idx, ell, t) {
            None => {
                return Ok(PigeonholeResult {
                    n: level,
                    code: tree.node_code(level, idx),
                    k,
                    s: Some(s),
                    t,
                    ell,
                    rho,
                    ratio_profile: profile(tree, &counts, level, idx, ell),
                    descent,
                    ordering_used: ORDERING_USED,
                    ordering_swapped: ORDERING_SWAPPED,
                })
            }
            Some((j, q)) => {
                descent.push(DescentStep {
                    level,
                    code: tree.node_code(level, idx),
                    failed_at: j,
                    count,
                    bound,
                });
                level += j;
                idx = q;
                bound *= libm::pow(rho, j as f64 * t);
            }
        }
    }
}

/// Recounts every ratio of `result` from scratch by walking the tree and
/// reports whether all of them clear their thresholds.
pub fn verify_antifrostman(tree: &SymbolTree, result: &PigeonholeResult) -> bool {
    recount_profile(tree, &result.code, result.k, result.ell).is_some_and(|p| {
        p.iter()
            .enumerate()
            .all(|(j, &r)| r >= result.threshold(j) * (1.0 - RELATIVE_SLACK))
    })
}

/// Smallest share per relative level, recomputed by depth-first counting.
pub fn recount_profile(tree: &SymbolTree, code: &[u32], k: usize, ell: usize) -> Option<Vec<f64>> {
    let n = code.len();
    if n + ell > k || k > tree.depth() {
        return None;
    }
    let idx = tree.find(code)?;
    fn leaves(tree: &SymbolTree, level: usize, idx: usize, k: usize) -> usize {
        if level == k {
            return 1;
        }
        tree.children(level, idx).map(|c| leaves(tree, level + 1, c, k)).sum()
    }
    let total = leaves(tree, n, idx, k) as f64;
    let mut frontier = vec![idx];
    let mut out = Vec::with_capacity(ell + 1);
    for j in 0..=ell {
        let min = frontier.iter().map(|&q| leaves(tree, n + j, q, k)).min().unwrap_or(0);
        out.push(min as f64 / total);
        frontier = frontier.iter().flat_map(|&q| tree.children(n + j, q)).collect();
    }
    Some(out)
}

/// The witness found by [`good_cylinder`] before the descent.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderWitness {
    pub n0: usize,
    pub m: usize,
    pub p0: Vec<u32>,
    pub count: usize,
}

/// Outcome of [`good_cylinder`].
#[derive(Debug, Clone, PartialEq)]
pub struct GoodCylinder {
    pub result: PigeonholeResult,
    pub estimate: f64,
    pub k0: usize,
    pub delta: f64,
    pub witness: CylinderWitness,
}

/// A heavy cylinder at level `n >= ell` with `k >= n + ell`.
///
/// `s` is the midpoint between the tree's lower-dimension estimate (at
/// `min_gap`) and `t`, `k0 = ceil(ell t / (t - s))` and
/// `delta = rho^((k0 + ell) s)`. Levels are scanned by increasing `m`, then
/// increasing `n0`, then lexicographically for `P0` at level `n0` with
/// `#T^P0_(m - n0) < delta rho^((n0 - m) s)`. The search then steps `ell`
/// levels down to the first descendant `P` and runs the descent on `T^P`
/// cut at level `m`.
pub fn good_cylinder(tree: &SymbolTree, t: f64, ell: usize, min_gap: usize) -> Result<GoodCylinder> {
    let estimate = tree.lower_dim_estimate(min_gap)?.value;
    if !(t > estimate) {
        return Err(Error::Precondition(format!(
            "t = {t} does not exceed the lower-dimension estimate {estimate}"
        )));
    }
    let rho = tree.rho();
    let s = 0.5 * (estimate + t);
    if !(s > 0.0) {
        return Err(invalid("s must be positive; raise t"));
    }
    let k0 = libm::ceil(ell as f64 * t / (t - s) - K_TOLERANCE).max(0.0) as usize;
    let delta = libm::pow(rho, (k0 + ell) as f64 * s);
    let depth = tree.depth();
    for m in 0..=depth {
        let counts = descendant_counts(tree, m);
        for n0 in 0..=m {
            let g = m - n0;
            // the count is at least one, so shorter gaps cannot qualify
            if g <= k0 + ell {
                continue;
            }
            let cap = delta * libm::pow(rho, -(g as f64) * s);
            let Some(p0) = (0..tree.level_len(n0)).find(|&i| (counts[n0][i] as f64) < cap) else {
                continue;
            };
            let mut p = p0;
            for l in n0..n0 + ell {
                p = tree.children(l, p).start;
            }
            let n1 = n0 + ell;
            let sub = tree.subtree_at(n1, p, m);
            let inner = reverse_furstenberg(&sub, s, t, ell, m - n1)?;
            let mut code = tree.node_code(n1, p);
            code.extend_from_slice(&inner.code);
            let q = tree
                .find(&code)
                .ok_or_else(|| Error::InternalConsistency("composed code is missing".into()))?;
            let result = PigeonholeResult {
                n: code.len(),
                ratio_profile: profile(tree, &counts, code.len(), q, ell),
                code,
                k: m,
                descent: inner.descent,
                ..inner
            };
            if result.n < ell || result.k < result.n + ell {
                return Err(Error::InternalConsistency(format!(
                    "good cylinder at n = {} with k = {} violates n >= ell, k >= n + ell",
                    result.n, result.k
                )));
            }
            return Ok(GoodCylinder {
                result,
                estimate,
                k0,
                delta,
                witness: CylinderWitness {
                    n0,
                    m,
                    p0: tree.node_code(n0, p0),
                    count: counts[n0][p0],
                },
            });
        }
    }
    Err(Error::WitnessNotFound { deepest_scan: depth })
}

/// Exhaustive search for a heavy cylinder with reference level `depth`,
/// trying levels `n` from `min(ell, depth - ell)` down to 0 and cylinders in
/// lexicographic order. Used when the tree is too shallow for
/// [`good_cylinder`]; callers must report `ell - n` when it is positive.
pub fn direct_cylinder_search(tree: &SymbolTree, t: f64, ell: usize) -> Result<PigeonholeResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let k = tree.depth();
    if k < ell {
        return Err(Error::InsufficientData {
            what: "tree depth for the requested profile length",
            needed: ell,
            available: k,
        });
    }
    let counts = descendant_counts(tree, k);
    for n in (0..=ell.min(k - ell)).rev() {
        for q in 0..tree.level_len(n) {
            if first_failure(tree, &counts, n, q, ell, t).is_none() {
                return Ok(PigeonholeResult {
                    n,
                    code: tree.node_code(n, q),
                    k,
                    s: None,
                    t,
                    ell,
                    rho: tree.rho(),
                    ratio_profile: profile(tree, &counts, n, q, ell),
                    descent: Vec::new(),
                    ordering_used: ORDERING_USED,
                    ordering_swapped: ORDERING_SWAPPED,
                });
            }
        }
    }
    Err(Error::WitnessNotFound { deepest_scan: k })
}

/// Full ratio profile `j = 0..=k - n` of the cylinder `code`, using the
/// reference level `k`.
pub fn full_profile(tree: &SymbolTree, code: &[u32], k: usize) -> Result<Vec<f64>> {
    if k > tree.depth() || code.len() > k {
        return Err(invalid("reference level out of range"));
    }
    let idx = tree.find(code).ok_or_else(|| Error::NotFound { code: code.to_vec() })?;
    let counts = descendant_counts(tree, k);
    Ok(profile(tree, &counts, code.len(), idx, k - code.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full binary to `split`, single-branch below, down to `depth`.
    pub(crate) fn half_branching(split: usize, depth: usize) -> SymbolTree {
        let mut links: Vec<Vec<(u32, u32)>> = Vec::new();
        for k in 0..depth {
            let w = 1u32 << k.min(split);
            links.push(if k < split {
                (0..w).flat_map(|p| [(p, 1), (p, 2)]).collect()
            } else {
                (0..w).map(|p| (p, 1)).collect()
            });
        }
        SymbolTree::from_parent_links(2, 0.5, links).unwrap()
    }

    #[test]
    fn single_branch_root_is_heavy() {
        let t = SymbolTree::single_branch(2, 0.5, 12).unwrap();
        let r = reverse_furstenberg(&t, 0.5, 1.0, 3, 10).unwrap();
        assert_eq!(r.n, 0);
        assert!(r.ratio_profile.iter().all(|&x| x == 1.0));
        assert!(verify_antifrostman(&t, &r));
    }

    #[test]
    fn full_binary_root_is_heavy() {
        let t = SymbolTree::full(2, 0.5, 22).unwrap();
        let r = reverse_furstenberg(&t, 1.0, 1.1, 2, 22).unwrap();
        assert_eq!(r.n, 0);
        assert_eq!(r.ratio_profile, [1.0, 0.5, 0.25]);
        assert!(verify_antifrostman(&t, &r));
    }

    #[test]
    fn half_branching_descends_into_sparse_part() {
        let k = 24;
        let t = half_branching(k / 2, k);
        let ell = k / 6;
        let r = reverse_furstenberg(&t, 0.5, 0.6, ell, k).unwrap();
        assert!(r.n >= k / 2 - ell && r.n <= k - ell, "{r:?}");
        assert!(verify_antifrostman(&t, &r));
        assert!(!r.descent.is_empty());
        // a cylinder high in the full region fails the same test
        let mut sibling = r.clone();
        sibling.code = alloc::vec![1];
        sibling.n = 1;
        assert!(!verify_antifrostman(&t, &sibling));
    }

    #[test]
    fn zero_ell_is_trivially_heavy() {
        let t = SymbolTree::full(3, 0.25, 5).unwrap();
        let r = reverse_furstenberg(&t, 0.8, 0.9, 0, 5).unwrap();
        assert_eq!(r.ratio_profile, [1.0]);
        assert!(verify_antifrostman(&t, &r));
    }

    #[test]
    fn preconditions_are_enforced() {
        let t = SymbolTree::full(2, 0.5, 10).unwrap();
        // s >= t
        assert!(reverse_furstenberg(&t, 1.0, 0.9, 2, 10).is_err());
        // k too small for ell
        assert!(reverse_furstenberg(&t, 1.0, 1.1, 2, 5).is_err());
        // too many nodes at level k
        assert!(reverse_furstenberg(&t, 0.5, 0.6, 1, 10).is_err());
        assert!(matches!(
            reverse_furstenberg(&t, 1.0, 1.1, 1, 11),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn good_cylinder_on_single_branch() {
        let t = SymbolTree::single_branch(2, 0.5, 12).unwrap();
        let g = good_cylinder(&t, 0.5, 2, 2).unwrap();
        assert!(g.result.n >= 2 && g.result.k >= g.result.n + 2);
        assert!(g.result.ratio_profile.iter().all(|&x| x == 1.0));
        assert!(verify_antifrostman(&t, &g.result));
    }

    #[test]
    fn good_cylinder_on_half_branching() {
        let t = half_branching(10, 40);
        let g = good_cylinder(&t, 0.3, 2, 2).unwrap();
        assert!(g.result.n >= 10);
        assert!(verify_antifrostman(&t, &g.result));
    }

    #[test]
    fn good_cylinder_reports_missing_witness() {
        let t = SymbolTree::single_branch(2, 0.5, 6).unwrap();
        assert!(matches!(
            good_cylinder(&t, 0.5, 2, 2),
            Err(Error::WitnessNotFound { deepest_scan: 6 })
        ));
        let full = SymbolTree::full(2, 0.5, 8).unwrap();
        assert!(matches!(good_cylinder(&full, 0.9, 1, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn direct_search_prefers_level_ell() {
        let t = SymbolTree::full(2, 0.5, 8).unwrap();
        let r = direct_cylinder_search(&t, 1.0, 3).unwrap();
        assert_eq!(r.n, 3);
        assert!(verify_antifrostman(&t, &r));
        assert_eq!(full_profile(&t, &r.code, 8).unwrap().len(), 6);
    }
}
