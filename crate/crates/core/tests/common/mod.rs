//! Generators and brute-force oracles shared by the integration tests and the
//! acceptance runner. Nothing here calls the routine it is checking.
#![allow(dead_code)]

use microset_core::cubes::PointCloud;
use microset_core::symtree::SymbolTree;
use rand::Rng;

/// Random Cantor dust in `[0, 1]^d`: every cube of side `4^-k` keeps a random
/// non-empty set of its `4^d` sub-cubes (at most four of them), down to
/// `depth`. Points are the lower corners of the surviving leaves. The first
/// split always keeps two opposite corners so the diameter stays above 3/4.
/// In the plane coordinates are divided by `sqrt 2` so the diameter is at
/// most one.
pub fn random_dust<R: Rng>(rng: &mut R, d: usize, depth: usize) -> PointCloud {
    let per_axis = 4usize;
    let subcubes = per_axis.pow(d as u32);
    let mut corners: Vec<Vec<usize>> = vec![vec![0; d]];
    let density: f64 = rng.gen_range(0.2..0.9);
    for level in 0..depth {
        let mut next = Vec::new();
        for c in &corners {
            let mut keep: Vec<usize> = if level == 0 {
                vec![0, subcubes - 1]
            } else {
                let want = 1 + (0..3).filter(|_| rng.gen_bool(density)).count();
                rand::seq::index::sample(rng, subcubes, want).into_vec()
            };
            keep.sort_unstable();
            for s in keep {
                let mut child = c.clone();
                let mut rest = s;
                for x in child.iter_mut() {
                    *x = *x * per_axis + rest % per_axis;
                    rest /= per_axis;
                }
                next.push(child);
            }
        }
        corners = next;
    }
    let side = (per_axis as f64).powi(-(depth as i32));
    let shrink = if d == 1 { 1.0 } else { 1.0 / (d as f64).sqrt() };
    let coords = corners
        .iter()
        .flat_map(|c| c.iter().map(move |&x| x as f64 * side * shrink))
        .collect();
    PointCloud::new(d, coords, side).unwrap()
}

/// Random tree with up to `alphabet` children per node. A node branches with
/// probability `p_split`; level sizes are capped at `level_cap`, past which
/// every node keeps one child.
pub fn random_tree<R: Rng>(
    rng: &mut R,
    alphabet: u32,
    rho: f64,
    depth: usize,
    p_split: f64,
    level_cap: usize,
) -> SymbolTree {
    let mut links = Vec::with_capacity(depth);
    let mut width = 1usize;
    for _ in 0..depth {
        let mut level = Vec::new();
        for parent in 0..width {
            let n = if level.len() < level_cap && rng.gen_bool(p_split) {
                rng.gen_range(2..=alphabet)
            } else {
                1
            };
            let mut symbols: Vec<u32> = rand::seq::index::sample(rng, alphabet as usize, n as usize)
                .into_iter()
                .map(|s| s as u32 + 1)
                .collect();
            symbols.sort_unstable();
            level.extend(symbols.into_iter().map(|s| (parent as u32, s)));
        }
        width = level.len();
        links.push(level);
    }
    SymbolTree::from_parent_links(alphabet, rho, links).unwrap()
}

/// For `j = 0..=ell`: the smallest share of level-`k` descendants of `code`
/// held by one level-`(n + j)` descendant, from the full list of level-`k`
/// words.
pub fn brute_ratio_profile(tree: &SymbolTree, code: &[u32], k: usize, ell: usize) -> Vec<f64> {
    let n = code.len();
    let words: Vec<Vec<u32>> = tree.codes(k).into_iter().filter(|w| w.starts_with(code)).collect();
    let total = words.len() as f64;
    (0..=ell)
        .map(|j| {
            let mut counts = std::collections::BTreeMap::new();
            for w in &words {
                *counts.entry(&w[..n + j]).or_insert(0usize) += 1;
            }
            counts.values().map(|&c| c as f64 / total).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Largest `sum (2 r_i)^s` over packings of closed balls `B(x_i, r_i)`,
/// `r_i` drawn from `radii` or absent, pairwise disjoint. Exhaustive
/// branch-and-bound; meant for a dozen points.
pub fn best_mixed_packing(d: usize, points: &[f64], radii: &[f64], s: f64) -> f64 {
    let n = points.len() / d;
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let weight: Vec<f64> = sorted.iter().map(|r| (2.0 * r).powf(s)).collect();
    let dist = |i: usize, j: usize| {
        let (a, b) = (&points[i * d..(i + 1) * d], &points[j * d..(j + 1) * d]);
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    struct Search<'a> {
        n: usize,
        radii: &'a [f64],
        weight: &'a [f64],
        dist: &'a dyn Fn(usize, usize) -> f64,
        chosen: Vec<Option<usize>>,
        best: f64,
    }
    impl Search<'_> {
        fn fits(&self, i: usize, r: usize) -> bool {
            (0..i).all(|j| match self.chosen[j] {
                Some(q) => (self.dist)(i, j) > self.radii[r] + self.radii[q],
                None => true,
            })
        }
        fn optimistic(&self, from: usize) -> f64 {
            (from..self.n)
                .map(|i| {
                    (0..self.radii.len())
                        .find(|&r| self.fits_placed(i, r))
                        .map_or(0.0, |r| self.weight[r])
                })
                .sum()
        }
        fn fits_placed(&self, i: usize, r: usize) -> bool {
            self.chosen.iter().enumerate().all(|(j, c)| match c {
                Some(q) if j != i => (self.dist)(i, j) > self.radii[r] + self.radii[*q],
                _ => true,
            })
        }
        fn run(&mut self, i: usize, sum: f64) {
            if i == self.n {
                self.best = self.best.max(sum);
                return;
            }
            if sum + self.optimistic(i) <= self.best {
                return;
            }
            for r in 0..self.radii.len() {
                if self.fits(i, r) {
                    self.chosen[i] = Some(r);
                    self.run(i + 1, sum + self.weight[r]);
                    self.chosen[i] = None;
                }
            }
            self.run(i + 1, sum);
        }
    }
    let mut search = Search {
        n,
        radii: &sorted,
        weight: &weight,
        dist: &dist,
        chosen: vec![None; n],
        best: 0.0,
    };
    search.run(0, 0.0);
    search.best
}

/// Start positions (0-based) of windows of length `window` in `bits` that
/// contain no run of `m` consecutive zeros. Sliding count, no shared code.
pub fn windows_without_zero_run(bits: &[u8], m: usize, window: usize) -> Vec<usize> {
    if window > bits.len() || m > window {
        return Vec::new();
    }
    // run_end[i]: a run of m zeros ends exactly at i
    let mut run = 0usize;
    let mut ends = vec![0u32; bits.len() + 1];
    for (i, &b) in bits.iter().enumerate() {
        run = if b == 0 { run + 1 } else { 0 };
        ends[i + 1] = ends[i] + u32::from(run >= m);
    }
    (0..=bits.len() - window)
        .filter(|&p| ends[p + window] - ends[p + m - 1] == 0)
        .collect()
}
