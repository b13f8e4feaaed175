use alloc::format;
use alloc::vec::Vec;

use hashbrown::HashSet;

use crate::error::{invalid, Result};
use crate::grid::dist;

/// A finite `delta`-net of a compact set in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    d: usize,
    coords: Vec<f64>,
    delta: f64,
    diameter: f64,
}

impl PointCloud {
    /// Builds a cloud from flat coordinates. Exact duplicates are dropped,
    /// keeping the first occurrence.
    pub fn new(d: usize, coords: Vec<f64>, delta: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if coords.is_empty() || coords.len() % d != 0 {
            return Err(invalid(format!(
                "expected a non-empty multiple of {d} coordinates, got {}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("point {} has a non-finite coordinate", i / d)));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(invalid(format!(
                "resolution must be finite and non-negative, got {delta}"
            )));
        }
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(coords.len());
        for p in coords.chunks(d) {
            // -0.0 and 0.0 are the same point
            let key: Vec<u64> = p.iter().map(|&x| (x + 0.0).to_bits()).collect();
            if seen.insert(key) {
                kept.extend_from_slice(p);
            }
        }
        let diameter = diameter(d, &kept);
        Ok(Self {
            d,
            coords: kept,
            delta,
            diameter,
        })
    }

    /// Grid `0, h, 2h, ..., 1` on the unit interval.
    pub fn unit_grid(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(invalid("grid spacing must lie in (0, 1]"));
        }
        let n = libm::round(1.0 / h) as usize;
        let coords = (0..=n).map(|i| (i as f64 * h).min(1.0)).collect();
        Self::new(1, coords, h / 2.0)
    }

    /// Left endpoints of the `2^depth` intervals of generation `depth` of the
    /// middle-thirds Cantor set.
    pub fn cantor(depth: usize) -> Result<Self> {
        let mut pts = alloc::vec![0.0f64];
        let mut side = 1.0;
        for _ in 0..depth {
            side /= 3.0;
            pts = pts.iter().flat_map(|&x| [x, x + 2.0 * side]).collect();
        }
        Self::new(1, pts, side)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Translates the bounding box to the origin and scales so the diameter
    /// is at most one. The resolution scales along.
    pub fn normalized(&self) -> Self {
        let mut lo = alloc::vec![f64::INFINITY; self.d];
        for p in self.points() {
            for (l, &x) in lo.iter_mut().zip(p) {
                *l = l.min(x);
            }
        }
        let s = if self.diameter > 1.0 { 1.0 / self.diameter } else { 1.0 };
        let coords: Vec<f64> = self
            .coords
            .chunks(self.d)
            .flat_map(|p| p.iter().zip(&lo).map(|(&x, &l)| (x - l) * s).collect::<Vec<_>>())
            .collect();
        let diameter = diameter(self.d, &coords);
        Self {
            d: self.d,
            coords,
            delta: self.delta * s,
            diameter,
        }
    }
}

fn diameter(d: usize, coords: &[f64]) -> f64 {
    if d == 1 {
        let (lo, hi) = coords
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        return hi - lo;
    }
    let pts: Vec<&[f64]> = coords.chunks(d).collect();
    let mut best = 0.0f64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(dist(p, q));
        }
    }
    best
}
