//! Uniform hash grid for fixed-radius neighbour queries, plus Euclidean helpers.

use alloc::vec::Vec;
use hashbrown::HashMap;

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(dist2(a, b))
}

/// Buckets point ids by the grid cell containing them. Cell keys are hashed
/// into a `u64`; a collision only adds candidates, callers always test the
/// true distance.
pub(crate) struct GridIndex {
    d: usize,
    cell: f64,
    buckets: HashMap<u64, Vec<u32>>,
}

fn mix(h: u64, v: i64) -> u64 {
    let mut z = h ^ (v as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl GridIndex {
    pub(crate) fn new(d: usize, cell: f64) -> Self {
        debug_assert!(cell > 0.0);
        Self {
            d,
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key_of(&self, p: &[f64]) -> u64 {
        p.iter().fold(0, |h, &x| mix(h, libm::floor(x / self.cell) as i64))
    }

    pub(crate) fn insert(&mut self, id: u32, p: &[f64]) {
        let key = self.key_of(p);
        self.buckets.entry(key).or_default().push(id);
    }

    /// Calls `f` for every stored id whose cell meets the box `[p - r, p + r]^d`.
    /// An id can be reported twice on a key collision, so use this for
    /// existence and nearest queries, not for counting.
    pub(crate) fn for_each_candidate(&self, p: &[f64], r: f64, mut f: impl FnMut(u32)) {
        let lo: Vec<i64> = p.iter().map(|&x| libm::floor((x - r) / self.cell) as i64).collect();
        let hi: Vec<i64> = p.iter().map(|&x| libm::floor((x + r) / self.cell) as i64).collect();
        let mut cur = lo.clone();
        loop {
            let key = cur.iter().fold(0, |h, &c| mix(h, c));
            if let Some(ids) = self.buckets.get(&key) {
                ids.iter().for_each(|&id| f(id));
            }
            // odometer over the cell box
            let mut axis = 0;
            loop {
                if axis == self.d {
                    return;
                }
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
                axis += 1;
            }
        }
    }
}
