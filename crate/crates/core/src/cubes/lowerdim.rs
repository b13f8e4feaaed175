use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::grid::{dist, GridIndex};

/// Centres examined by [`cloud_lower_dim_estimate`]: every point of small
/// clouds, otherwise this many seeded picks.
pub const CENTRE_SAMPLE: usize = 256;

/// Finest dyadic exponent used when the cloud carries no resolution.
const FINEST_EXPONENT: usize = 48;

/// Outcome of [`cloud_lower_dim_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CloudDimEstimate {
    /// Minimum of `ln N_r / ln(R/r)` with `N_r` the size of a greedy maximal
    /// `r`-separated subset of the ball, an upper bound on the covering number.
    pub value: f64,
    /// The same minimum with greedy `2r`-separated subsets, which bound the
    /// covering number from below.
    pub lower_bracket: f64,
    /// `(centre index, R, r)` attaining `value`.
    pub witness: (usize, f64, f64),
    pub centres: usize,
    pub scale_pairs: usize,
}

/// Greedy maximal subset of `idx` with pairwise distances above `r`.
pub fn greedy_net_size(cloud: &PointCloud, idx: &[u32], r: f64) -> usize {
    let mut grid = GridIndex::new(cloud.d(), r);
    let mut count = 0;
    for &i in idx {
        let p = cloud.point(i as usize);
        let mut near = false;
        grid.for_each_candidate(p, r, |j| near |= dist(cloud.point(j as usize), p) <= r);
        if !near {
            grid.insert(i, p);
            count += 1;
        }
    }
    count
}

/// Minimum over centres `x`, radii `R = 2^-i` (`i >= 1`) and `r = 2^-j` with
/// `j - i >= scale_gap` and `r >= 2 delta` of `ln N_r(B(x, R)) / ln(R / r)`.
pub fn cloud_lower_dim_estimate(cloud: &PointCloud, scale_gap: usize, seed: u64) -> Result<CloudDimEstimate> {
    if scale_gap == 0 {
        return Err(invalid("scale_gap must be at least 1"));
    }
    let j_max = if cloud.delta() > 0.0 {
        libm::floor(-libm::log2(2.0 * cloud.delta())).max(0.0) as usize
    } else {
        FINEST_EXPONENT
    }
    .min(FINEST_EXPONENT);
    if j_max < 1 + scale_gap {
        return Err(Error::InsufficientData {
            what: "dyadic octaves above the cloud resolution",
            needed: 1 + scale_gap,
            available: j_max,
        });
    }
    let n = cloud.len();
    let centres: Vec<usize> = if n <= CENTRE_SAMPLE {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, n, CENTRE_SAMPLE).into_vec();
        v.sort_unstable();
        v
    };
    let mut best = (f64::INFINITY, (0, 0.0, 0.0));
    let mut lower = f64::INFINITY;
    let mut pairs = 0;
    let mut members = Vec::new();
    for i in 1..=j_max - scale_gap {
        let big_r = libm::ldexp(1.0, -(i as i32));
        let mut grid = GridIndex::new(cloud.d(), big_r);
        for (k, p) in cloud.points().enumerate() {
            grid.insert(k as u32, p);
        }
        for &x in &centres {
            let px = cloud.point(x);
            members.clear();
            grid.for_each_candidate(px, big_r, |k| {
                if dist(cloud.point(k as usize), px) <= big_r {
                    members.push(k);
                }
            });
            members.sort_unstable();
            members.dedup();
            for j in i + scale_gap..=j_max {
                let r = libm::ldexp(1.0, -(j as i32));
                let octaves = (j - i) as f64 * core::f64::consts::LN_2;
                let up = libm::log(greedy_net_size(cloud, &members, r) as f64) / octaves;
                let low = libm::log(greedy_net_size(cloud, &members, 2.0 * r) as f64) / octaves;
                pairs += 1;
                if up < best.0 {
                    best = (up, (x, big_r, r));
                }
                lower = lower.min(low);
            }
        }
    }
    Ok(CloudDimEstimate {
        value: best.0,
        lower_bracket: lower,
        witness: best.1,
        centres: centres.len(),
        scale_pairs: pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_is_one_dimensional() {
        let g = PointCloud::unit_grid(1e-3).unwrap();
        let e = cloud_lower_dim_estimate(&g, 4, 1).unwrap();
        assert!(e.value >= 0.9 && e.value <= 1.0, "{e:?}");
        assert!(e.lower_bracket <= e.value);
    }

    #[test]
    fn single_point_is_zero_dimensional() {
        let p = PointCloud::new(1, alloc::vec![0.5], 1e-6).unwrap();
        assert_eq!(cloud_lower_dim_estimate(&p, 3, 1).unwrap().value, 0.0);
    }

    #[test]
    fn cantor_cloud() {
        let c = PointCloud::cantor(8).unwrap();
        let e = cloud_lower_dim_estimate(&c, 8, 1).unwrap();
        let target = libm::log(2.0) / libm::log(3.0);
        assert!((e.value - target).abs() <= 0.08, "{e:?}");
    }

    #[test]
    fn too_coarse_cloud_is_rejected() {
        let g = PointCloud::unit_grid(1e-2).unwrap();
        assert!(matches!(
            cloud_lower_dim_estimate(&g, 6, 1),
            Err(Error::InsufficientData { .. })
        ));
    }
}
