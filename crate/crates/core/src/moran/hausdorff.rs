//! Hausdorff distance between finite unions of axis-aligned cubes.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{Cube, CubeTree};
use crate::error::{invalid, Result};

/// Absolute accuracy of the branch-and-bound search.
const TOLERANCE: f64 = 1e-12;
const MAX_BOXES: usize = 1 << 20;

/// Hausdorff distance between the unions of the level-`level` cubes of `a`
/// and `b`. Both trees must carry geometry in the same dimension.
pub fn hausdorff_distance(a: &CubeTree, b: &CubeTree, level: usize) -> Result<f64> {
    if a.d != b.d {
        return Err(invalid("trees live in different dimensions"));
    }
    let cubes = |t: &CubeTree| -> Result<Vec<Cube>> {
        let g = t.geometry.as_ref().ok_or_else(|| invalid("tree has no geometry"))?;
        let lv = g.get(level).ok_or_else(|| invalid("level exceeds the tree depth"))?;
        Ok((0..lv.len(t.d)).map(|i| lv.cube(t.d, i)).collect())
    };
    let (ca, cb) = (cubes(a)?, cubes(b)?);
    Ok(union_hausdorff(&ca, &cb))
}

/// `max(sup_{x in A} d(x, B), sup_{y in B} d(y, A))` for cube unions.
pub(crate) fn union_hausdorff(a: &[Cube], b: &[Cube]) -> f64 {
    directed(a, b).max(directed(b, a))
}

#[derive(Clone)]
struct Box_ {
    lo: Vec<f64>,
    hi: Vec<f64>,
    upper: f64,
}

impl PartialEq for Box_ {
    fn eq(&self, other: &Self) -> bool {
        self.upper == other.upper
    }
}
impl Eq for Box_ {}
impl PartialOrd for Box_ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Box_ {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

fn point_to_box(p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| {
            let g = (l - x).max(x - h).max(0.0);
            g * g
        })
        .sum();
    libm::sqrt(s)
}

fn to_union(p: &[f64], b: &[Cube]) -> f64 {
    b.iter().map(|c| c.distance_to(p)).fold(f64::INFINITY, f64::min)
}

fn vertices<'a>(lo: &'a [f64], hi: &'a [f64]) -> impl Iterator<Item = Vec<f64>> + 'a {
    (0u32..1 << lo.len()).map(move |mask| {
        (0..lo.len())
            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
            .collect()
    })
}

/// Distance from a point of the box to `b` is bounded above by the distance
/// to the nearest cube maximised over the box, which a convex function
/// attains at a vertex. Points of the box give lower bounds.
fn directed(a: &[Cube], b: &[Cube]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if b.is_empty() {
        return f64::INFINITY;
    }
    let bounds = |lo: &[f64], hi: &[f64]| -> (f64, f64) {
        let mut lower: f64 = 0.0;
        for v in vertices(lo, hi) {
            lower = lower.max(to_union(&v, b));
        }
        let centre: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
        lower = lower.max(to_union(&centre, b));
        let upper = b
            .iter()
            .map(|c| {
                let (clo, chi): (Vec<f64>, Vec<f64>) = c.origin.iter().map(|&o| (o, o + c.side)).unzip();
                vertices(lo, hi)
                    .map(|v| point_to_box(&v, &clo, &chi))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        (lower, upper)
    };
    let mut best = 0.0f64;
    let mut heap = BinaryHeap::new();
    for c in a {
        let lo = c.origin.clone();
        let hi: Vec<f64> = c.origin.iter().map(|&o| o + c.side).collect();
        let (l, u) = bounds(&lo, &hi);
        best = best.max(l);
        heap.push(Box_ { lo, hi, upper: u });
    }
    let mut processed = 0;
    while let Some(bx) = heap.pop() {
        if bx.upper <= best + TOLERANCE || processed > MAX_BOXES {
            break;
        }
        processed += 1;
        // split along the longest axis
        let axis = (0..bx.lo.len())
            .max_by(|&i, &j| (bx.hi[i] - bx.lo[i]).total_cmp(&(bx.hi[j] - bx.lo[j])))
            .unwrap();
        let mid = 0.5 * (bx.lo[axis] + bx.hi[axis]);
        for half in 0..2 {
            let (mut lo, mut hi) = (bx.lo.clone(), bx.hi.clone());
            if half == 0 {
                hi[axis] = mid;
            } else {
                lo[axis] = mid;
            }
            let (l, u) = bounds(&lo, &hi);
            best = best.max(l);
            if u > best + TOLERANCE {
                heap.push(Box_ { lo, hi, upper: u });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn interval(o: f64, s: f64) -> Cube {
        Cube {
            origin: vec![o],
            side: s,
        }
    }

    #[test]
    fn identical_sets_are_at_distance_zero() {
        let a = [interval(0.0, 0.25), interval(0.5, 0.25)];
        assert_eq!(union_hausdorff(&a, &a), 0.0);
    }

    #[test]
    fn separated_intervals() {
        let a = [interval(0.0, 0.25)];
        let b = [interval(0.75, 0.25)];
        assert!((union_hausdorff(&a, &b) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn half_versus_whole() {
        let full = [interval(0.0, 0.5), interval(0.5, 0.5)];
        let left = [interval(0.0, 0.5)];
        assert!((union_hausdorff(&full, &left) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interior_maximum_is_found() {
        // the farthest point of [0,1] from {-1} u {2} sits at the middle
        let a = [interval(0.0, 1.0)];
        let b = [interval(-1.0, 0.0), interval(2.0, 0.0)];
        assert!((directed(&a, &b) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn squares_in_the_plane() {
        let a = [Cube {
            origin: vec![0.0, 0.0],
            side: 1.0,
        }];
        let b = [Cube {
            origin: vec![3.0, 4.0],
            side: 1.0,
        }];
        // farthest corner (0,0) to the square [3,4]x[4,5]
        assert!((union_hausdorff(&a, &b) - 5.0).abs() < 1e-12);
    }
}
