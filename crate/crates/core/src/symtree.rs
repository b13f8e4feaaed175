//! Prefix-closed code trees over a finite alphabet with a contraction ratio.
//!
//! Nodes at level `n` are words in `{1..M}^n`. Every level is stored in
//! lexicographic order, so the descendants of a node at any deeper level form
//! a contiguous index range. That makes cylinder counts `O(depth)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    symbols: Vec<u32>,
    parents: Vec<u32>,
    /// `first_child[i]..first_child[i + 1]` are the children of node `i`;
    /// empty on the deepest level.
    first_child: Vec<u32>,
}

/// A finite-depth `(rho, M)`-tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTree {
    alphabet: u32,
    rho: f64,
    levels: Vec<Level>,
    labels: Option<Vec<Vec<u32>>>,
}

/// Result of a gap-restricted log-ratio scan over a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DimEstimate {
    pub value: f64,
    /// `(ancestor level, descendant level, ancestor index)` attaining `value`.
    pub witness: (usize, usize, usize),
    /// `(gap, extremal log-ratio over all pairs with that gap)`.
    pub profile: Vec<(usize, f64)>,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

impl SymbolTree {
    /// Builds a tree from parent links. `links[k - 1]` lists the nodes of
    /// level `k` as `(parent index at level k - 1, symbol)`, sorted by parent
    /// and then by symbol.
    pub fn from_parent_links(alphabet: u32, rho: f64, links: Vec<Vec<(u32, u32)>>) -> Result<Self> {
        if alphabet == 0 {
            return Err(invalid("alphabet size must be positive"));
        }
        check_rho(rho)?;
        let mut levels = vec![Level {
            symbols: vec![0],
            parents: vec![u32::MAX],
            first_child: Vec::new(),
        }];
        for (k, level) in links.into_iter().enumerate() {
            let above = levels.last_mut().unwrap();
            let n_above = above.symbols.len();
            let mut first_child = vec![0u32; n_above + 1];
            let mut prev: Option<(u32, u32)> = None;
            for (i, &(p, s)) in level.iter().enumerate() {
                if s == 0 || s > alphabet {
                    return Err(invalid(format!(
                        "symbol {s} at level {} lies outside 1..={alphabet}",
                        k + 1
                    )));
                }
                if p as usize >= n_above {
                    return Err(invalid(format!("parent {p} at level {} does not exist", k + 1)));
                }
                if prev.is_some_and(|q| q >= (p, s)) {
                    return Err(invalid(format!("level {} is not strictly sorted at node {i}", k + 1)));
                }
                prev = Some((p, s));
                first_child[p as usize + 1] += 1;
            }
            for i in 0..n_above {
                if first_child[i + 1] == 0 {
                    return Err(invalid(format!("node {i} at level {k} has no children")));
                }
                first_child[i + 1] += first_child[i];
            }
            above.first_child = first_child;
            let (parents, symbols) = level.into_iter().unzip();
            levels.push(Level {
                symbols,
                parents,
                first_child: Vec::new(),
            });
        }
        Ok(Self {
            alphabet,
            rho,
            levels,
            labels: None,
        })
    }

    /// Builds a tree from its code sets, `levels[n]` holding the words of
    /// length `n`. Order within a level is irrelevant; duplicates are merged.
    pub fn from_codes(alphabet: u32, rho: f64, levels: &[Vec<Vec<u32>>]) -> Result<Self> {
        match levels.first() {
            Some(root) if root.iter().all(|c| c.is_empty()) && !root.is_empty() => {}
            _ => return Err(invalid("level 0 must contain exactly the empty word")),
        }
        let mut links = Vec::with_capacity(levels.len().saturating_sub(1));
        let mut above: Vec<&[u32]> = vec![&[]];
        for (n, codes) in levels.iter().enumerate().skip(1) {
            let mut sorted: Vec<&[u32]> = codes.iter().map(Vec::as_slice).collect();
            sorted.sort_unstable();
            sorted.dedup();
            let mut level = Vec::with_capacity(sorted.len());
            for code in &sorted {
                if code.len() != n {
                    return Err(invalid(format!("word {code:?} listed at level {n}")));
                }
                let parent = above
                    .binary_search(&&code[..n - 1])
                    .map_err(|_| invalid(format!("word {code:?} has no parent at level {}", n - 1)))?;
                level.push((parent as u32, code[n - 1]));
            }
            links.push(level);
            above = sorted;
        }
        Self::from_parent_links(alphabet, rho, links)
    }

    /// Full `branching`-ary tree of the given depth over alphabet `branching`.
    pub fn full(branching: u32, rho: f64, depth: usize) -> Result<Self> {
        if branching == 0 {
            return Err(invalid("branching must be positive"));
        }
        let mut links = Vec::with_capacity(depth);
        let mut width = 1u64;
        for _ in 0..depth {
            let level: Vec<(u32, u32)> = (0..width as u32)
                .flat_map(|p| (1..=branching).map(move |s| (p, s)))
                .collect();
            width *= branching as u64;
            if width > u32::MAX as u64 {
                return Err(invalid("full tree is too large"));
            }
            links.push(level);
        }
        Self::from_parent_links(branching, rho, links)
    }

    /// Tree with exactly one node per level.
    pub fn single_branch(alphabet: u32, rho: f64, depth: usize) -> Result<Self> {
        Self::from_parent_links(alphabet, rho, vec![vec![(0, 1)]; depth])
    }

    /// Attaches one label per node, `labels[n][i]` for node `i` of level `n`.
    pub fn with_labels(mut self, labels: Vec<Vec<u32>>) -> Result<Self> {
        if labels.len() != self.levels.len()
            || labels
                .iter()
                .zip(&self.levels)
                .any(|(l, lv)| l.len() != lv.symbols.len())
        {
            return Err(invalid("label shape does not match the tree"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_len(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, |l| l.symbols.len())
    }

    /// Node counts `#T_0, #T_1, ..., #T_depth`.
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.symbols.len()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(|l| l.symbols.len()).sum()
    }

    pub fn labels(&self) -> Option<&[Vec<u32>]> {
        self.labels.as_deref()
    }

    pub fn label(&self, level: usize, index: usize) -> Option<u32> {
        self.labels.as_ref().map(|l| l[level][index])
    }

    /// Last symbol of node `index` at `level` (0 for the root).
    pub fn symbol(&self, level: usize, index: usize) -> u32 {
        self.levels[level].symbols[index]
    }

    /// Parent index of a node at `level >= 1`.
    pub fn parent(&self, level: usize, index: usize) -> usize {
        self.levels[level].parents[index] as usize
    }

    /// Indices of the children of node `index` at `level`.
    pub fn children(&self, level: usize, index: usize) -> Range<usize> {
        let fc = &self.levels[level].first_child;
        if fc.is_empty() {
            return 0..0;
        }
        fc[index] as usize..fc[index + 1] as usize
    }

    /// Indices of the level-`target` descendants of node `index` at `level`.
    pub fn descendant_range(&self, level: usize, index: usize, target: usize) -> Range<usize> {
        debug_assert!(level <= target && target <= self.depth());
        let (mut lo, mut hi) = (index, index + 1);
        for l in level..target {
            let fc = &self.levels[l].first_child;
            lo = fc[lo] as usize;
            hi = fc[hi] as usize;
        }
        lo..hi
    }

    /// Index of `code` within its level.
    pub fn find(&self, code: &[u32]) -> Option<usize> {
        if code.len() > self.depth() {
            return None;
        }
        let mut idx = 0usize;
        for (l, &s) in code.iter().enumerate() {
            let range = self.children(l, idx);
            let syms = &self.levels[l + 1].symbols[range.clone()];
            idx = range.start + syms.binary_search(&s).ok()?;
        }
        Some(idx)
    }

    pub fn contains(&self, code: &[u32]) -> bool {
        self.find(code).is_some()
    }

    /// The word of node `index` at `level`.
    pub fn node_code(&self, level: usize, index: usize) -> Vec<u32> {
        let mut code = vec![0; level];
        let mut idx = index;
        for l in (1..=level).rev() {
            code[l - 1] = self.levels[l].symbols[idx];
            idx = self.levels[l].parents[idx] as usize;
        }
        code
    }

    /// All words of a level in lexicographic order.
    pub fn codes(&self, level: usize) -> Vec<Vec<u32>> {
        (0..self.level_len(level)).map(|i| self.node_code(level, i)).collect()
    }

    /// `#{b in T_k : b extends ancestor}`.
    pub fn branch_count(&self, ancestor: &[u32], k: usize) -> Result<usize> {
        if k < ancestor.len() || k > self.depth() {
            return Err(invalid(format!(
                "level {k} must lie in [{}, {}]",
                ancestor.len(),
                self.depth()
            )));
        }
        let idx = self.find(ancestor).ok_or_else(|| Error::NotFound {
            code: ancestor.to_vec(),
        })?;
        Ok(self.descendant_range(ancestor.len(), idx, k).len())
    }

    /// The magnified subtree `T^Q` at `code`: descendants with the prefix
    /// stripped, depth reduced by `code.len()`.
    pub fn subtree(&self, code: &[u32]) -> Result<Self> {
        let idx = self.find(code).ok_or_else(|| Error::NotFound { code: code.to_vec() })?;
        Ok(self.subtree_at(code.len(), idx, self.depth()))
    }

    /// Subtree rooted at node `index` of `level`, cut at absolute level `last`.
    pub fn subtree_at(&self, level: usize, index: usize, last: usize) -> Self {
        let mut levels = Vec::with_capacity(last - level + 1);
        let mut labels = self.labels.as_ref().map(|_| Vec::with_capacity(last - level + 1));
        let (mut lo, mut hi) = (index, index + 1);
        for l in level..=last {
            let src = &self.levels[l];
            let (symbols, parents) = if l == level {
                (vec![0], vec![u32::MAX])
            } else {
                // the first node's parent is the first node of the range above
                (
                    src.symbols[lo..hi].to_vec(),
                    src.parents[lo..hi].iter().map(|&p| p - src.parents[lo]).collect(),
                )
            };
            if let (Some(out), Some(all)) = (labels.as_mut(), self.labels.as_ref()) {
                out.push(all[l][lo..hi].to_vec());
            }
            let first_child = if l < last {
                let fc = &src.first_child[lo..=hi];
                fc.iter().map(|&c| c - fc[0]).collect()
            } else {
                Vec::new()
            };
            levels.push(Level {
                symbols,
                parents,
                first_child,
            });
            if l < last {
                lo = src.first_child[lo] as usize;
                hi = src.first_child[hi] as usize;
            }
        }
        Self {
            alphabet: self.alphabet,
            rho: self.rho,
            levels,
            labels,
        }
    }

    /// The first `depth + 1` levels.
    pub fn truncate(&self, depth: usize) -> Result<Self> {
        if depth > self.depth() {
            return Err(Error::InsufficientData {
                what: "truncation depth",
                needed: depth,
                available: self.depth(),
            });
        }
        Ok(self.subtree_at(0, 0, depth))
    }

    fn log_ratio_scan(&self, min_gap: usize, take_min: bool) -> Result<DimEstimate> {
        if min_gap == 0 {
            return Err(invalid("min_gap must be at least 1"));
        }
        let depth = self.depth();
        if depth < 2 * min_gap {
            return Err(Error::InsufficientData {
                what: "tree depth for a dimension estimate",
                needed: 2 * min_gap,
                available: depth,
            });
        }
        let scale = libm::log(1.0 / self.rho);
        let worst = if take_min { f64::INFINITY } else { f64::NEG_INFINITY };
        let better = |a: f64, b: f64| if take_min { a < b } else { a > b };
        let mut profile: Vec<(usize, f64)> = (min_gap..=depth).map(|g| (g, worst)).collect();
        let mut best = (worst, (0, 0, 0));
        for m in 0..=depth - min_gap {
            for i in 0..self.level_len(m) {
                let (mut lo, mut hi) = (i, i + 1);
                for k in m + 1..=depth {
                    let fc = &self.levels[k - 1].first_child;
                    lo = fc[lo] as usize;
                    hi = fc[hi] as usize;
                    let gap = k - m;
                    if gap < min_gap {
                        continue;
                    }
                    let v = libm::log((hi - lo) as f64) / (gap as f64 * scale);
                    let slot = &mut profile[gap - min_gap].1;
                    if better(v, *slot) {
                        *slot = v;
                    }
                    if better(v, best.0) {
                        best = (v, (m, k, i));
                    }
                }
            }
        }
        Ok(DimEstimate {
            value: best.0,
            witness: best.1,
            profile,
        })
    }

    /// Minimum over ancestors at level `m` and levels `k` with
    /// `k - m >= min_gap` of `ln #descendants / ((k - m) ln(1/rho))`.
    pub fn lower_dim_estimate(&self, min_gap: usize) -> Result<DimEstimate> {
        self.log_ratio_scan(min_gap, true)
    }

    /// The same scan with a maximum instead of a minimum.
    pub fn assouad_dim_estimate(&self, min_gap: usize) -> Result<DimEstimate> {
        self.log_ratio_scan(min_gap, false)
    }
}
