use alloc::format;
use alloc::vec::Vec;

use crate::cubes::PointCloud;
use crate::error::{invalid, Result};
use crate::grid::{dist, GridIndex};

/// A lower estimate of the packing pre-measure at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingEstimate {
    pub s: f64,
    pub delta: f64,
    /// Number of disjoint balls of radius `delta` in the packing.
    pub count: usize,
    /// `count * (2 delta)^s`.
    pub lower_sum: f64,
    pub upper_bound: Option<f64>,
}

/// Greedy maximal packing by closed balls of radius `delta` centred at
/// cloud points: points are taken in index order and kept when farther than
/// `2 delta` from every kept centre. Returns the kept indices.
pub fn greedy_packing_centres(cloud: &PointCloud, delta: f64) -> Vec<u32> {
    let sep = 2.0 * delta;
    let mut grid = GridIndex::new(cloud.d(), sep);
    let mut kept = Vec::new();
    for (i, p) in cloud.points().enumerate() {
        let mut blocked = false;
        grid.for_each_candidate(p, sep, |j| blocked |= dist(cloud.point(j as usize), p) <= sep);
        if !blocked {
            grid.insert(i as u32, p);
            kept.push(i as u32);
        }
    }
    kept
}

/// `sum (2 delta)^s` over a greedy maximal packing at radius `delta`.
pub fn greedy_packing_sum(cloud: &PointCloud, s: f64, delta: f64) -> Result<PackingEstimate> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    if delta < 2.0 * cloud.delta() {
        return Err(invalid(format!(
            "delta = {delta} is below twice the cloud resolution {}",
            cloud.delta()
        )));
    }
    if !(s >= 0.0) {
        return Err(invalid("s must be non-negative"));
    }
    let count = greedy_packing_centres(cloud, delta).len();
    Ok(PackingEstimate {
        s,
        delta,
        count,
        lower_sum: count as f64 * libm::pow(2.0 * delta, s),
        upper_bound: None,
    })
}

/// Whether closed balls `B(x_i, r_i)` (flat centres) are pairwise disjoint.
pub fn is_packing(d: usize, centres: &[f64], radii: &[f64]) -> bool {
    let pts: Vec<&[f64]> = centres.chunks(d).collect();
    (0..pts.len()).all(|i| (i + 1..pts.len()).all(|j| dist(pts[i], pts[j]) > radii[i] + radii[j]))
}

/// `sum (2 r_i)^s`.
pub fn packing_sum(radii: &[f64], s: f64) -> f64 {
    radii.iter().map(|&r| libm::pow(2.0 * r, s)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_sum_is_near_one() {
        let g = PointCloud::unit_grid(1e-3).unwrap();
        let e = greedy_packing_sum(&g, 1.0, 1e-2).unwrap();
        assert!(e.lower_sum >= 0.9 && e.lower_sum <= 1.1, "{e:?}");
    }

    #[test]
    fn single_point_sum_vanishes_with_delta() {
        let p = PointCloud::new(1, alloc::vec![0.0], 0.0).unwrap();
        let a = greedy_packing_sum(&p, 0.5, 1e-2).unwrap();
        let b = greedy_packing_sum(&p, 0.5, 1e-4).unwrap();
        assert_eq!(a.count, 1);
        assert!(b.lower_sum < a.lower_sum);
    }

    #[test]
    fn cantor_sums_stay_bounded() {
        let c = PointCloud::cantor(10).unwrap();
        let s = libm::log(2.0) / libm::log(3.0);
        for k in 1..=8 {
            let delta = libm::pow(3.0, -(k as f64)) / 2.0 * 0.99;
            let e = greedy_packing_sum(&c, s, delta).unwrap();
            assert!(e.lower_sum <= 4.0, "{e:?}");
        }
    }

    #[test]
    fn resolution_is_enforced() {
        let g = PointCloud::unit_grid(1e-2).unwrap();
        assert!(greedy_packing_sum(&g, 1.0, 5e-3).is_err());
        assert!(greedy_packing_sum(&g, 1.0, 0.0).is_err());
    }

    #[test]
    fn packing_predicate() {
        assert!(is_packing(1, &[0.0, 1.0], &[0.4, 0.5]));
        assert!(!is_packing(1, &[0.0, 1.0], &[0.5, 0.5]));
    }
}
