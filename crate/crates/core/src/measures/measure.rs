use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::grid::dist;
use crate::Rational;

/// A finitely supported probability measure. Weights are integers over a
/// common denominator equal to their sum, so the total mass is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    d: usize,
    points: Vec<f64>,
    weights: Vec<u64>,
    denom: u64,
}

impl DiscreteMeasure {
    /// Atoms at `points` (flat, `d` coordinates each) with masses
    /// proportional to `weights`.
    pub fn new(d: usize, points: Vec<f64>, weights: Vec<u64>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if weights.is_empty() || points.len() != weights.len() * d {
            return Err(invalid(format!(
                "{} weights do not match {} coordinates in dimension {d}",
                weights.len(),
                points.len()
            )));
        }
        if weights.contains(&0) {
            return Err(invalid("weights must be positive"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(invalid("atoms must have finite coordinates"));
        }
        let denom = weights
            .iter()
            .try_fold(0u64, |a, &w| a.checked_add(w))
            .ok_or_else(|| invalid("total weight overflows"))?;
        Ok(Self {
            d,
            points,
            weights,
            denom,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks(self.d)
    }

    pub fn weight(&self, i: usize) -> Rational {
        Rational::new(self.weights[i], self.denom)
    }

    pub fn raw_weights(&self) -> (&[u64], u64) {
        (&self.weights, self.denom)
    }

    pub fn total(&self) -> Rational {
        Rational::new(self.weights.iter().sum(), self.denom)
    }

    /// Mass of the closed ball `B(x, r)`.
    pub fn ball_mass(&self, x: &[f64], r: f64) -> Rational {
        let w = self
            .atoms()
            .zip(&self.weights)
            .filter(|(p, _)| dist(p, x) <= r)
            .map(|(_, &w)| w)
            .sum();
        Rational::new(w, self.denom)
    }

    pub fn ball_mass_f64(&self, x: &[f64], r: f64) -> f64 {
        let m = self.ball_mass(x, r);
        *m.numer() as f64 / *m.denom() as f64
    }

    /// Mass of the atoms selected by `keep(index)`.
    pub fn mass_of(&self, mut keep: impl FnMut(usize) -> bool) -> Rational {
        let w = (0..self.len()).filter(|&i| keep(i)).map(|i| self.weights[i]).sum();
        Rational::new(w, self.denom)
    }

    /// Largest distance from `x` to an atom.
    pub fn support_radius(&self, x: &[f64]) -> f64 {
        self.atoms().map(|p| dist(p, x)).fold(0.0, f64::max)
    }
}

/// Uniform measure on `centers` (flat coordinates).
pub fn counting_measure(d: usize, centers: Vec<f64>) -> Result<DiscreteMeasure> {
    if d == 0 || centers.is_empty() {
        return Err(invalid("counting measure needs at least one centre"));
    }
    let n = centers.len() / d;
    DiscreteMeasure::new(d, centers, alloc::vec![1; n])
}

/// `x -> scale * x + translation` with `scale > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Homothety {
    pub scale: f64,
    pub translation: Vec<f64>,
}

impl Homothety {
    pub fn new(scale: f64, translation: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("scale must be positive and finite, got {scale}")));
        }
        Ok(Self { scale, translation })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            scale: 1.0,
            translation: alloc::vec![0.0; d],
        }
    }

    /// The homothety taking `B(center, radius)` onto `B(0, 1)`.
    pub fn ball_to_unit(center: &[f64], radius: f64) -> Result<Self> {
        let scale = 1.0 / radius;
        Self::new(scale, center.iter().map(|&x| -x * scale).collect())
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.translation)
            .map(|(&x, &t)| self.scale * x + t)
            .collect()
    }

    pub fn inverse(&self) -> Self {
        Self {
            scale: 1.0 / self.scale,
            translation: self.translation.iter().map(|&t| -t / self.scale).collect(),
        }
    }
}

/// The image measure `m o f^-1`: atoms moved by `f`, weights kept.
pub fn pushforward(m: &DiscreteMeasure, f: &Homothety) -> Result<DiscreteMeasure> {
    if f.translation.len() != m.d {
        return Err(invalid("homothety and measure live in different dimensions"));
    }
    let points = m.atoms().flat_map(|p| f.apply(p)).collect();
    Ok(DiscreteMeasure {
        d: m.d,
        points,
        weights: m.weights.clone(),
        denom: m.denom,
    })
}

/// Point and radius where `m(B(x, r)) / (c r^s)` is smallest.
#[derive(Debug, Clone, PartialEq)]
pub struct FrostmanWitness {
    pub point: usize,
    pub r: f64,
    pub mass: f64,
    pub ratio: f64,
}

/// Outcome of [`frostman_lower_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrostmanCheck {
    pub holds: bool,
    /// `min m(B(x, r)) / r^s` over the checked pairs.
    pub constant: f64,
    pub worst: Option<FrostmanWitness>,
}

/// Checks `m(B(x, r)) >= c r^s` for every `x` in `sample` (flat) and every `r`
/// in `radii`.
pub fn frostman_lower_check(m: &DiscreteMeasure, sample: &[f64], s: f64, c: f64, radii: &[f64]) -> FrostmanCheck {
    let mut worst: Option<FrostmanWitness> = None;
    let mut constant = f64::INFINITY;
    for (i, x) in sample.chunks(m.d).enumerate() {
        for &r in radii {
            let mass = m.ball_mass_f64(x, r);
            let rs = libm::pow(r, s);
            constant = constant.min(mass / rs);
            let ratio = mass / (c * rs);
            if worst.as_ref().is_none_or(|w| ratio < w.ratio) {
                worst = Some(FrostmanWitness {
                    point: i,
                    r,
                    mass,
                    ratio,
                });
            }
        }
    }
    FrostmanCheck {
        holds: worst.as_ref().is_none_or(|w| w.ratio >= 1.0 - crate::RELATIVE_SLACK),
        constant,
        worst,
    }
}

/// `2^s / c`: the packing pre-measure bound implied by `m(B(x, r)) >= c r^s`.
pub fn packing_upper_bound(c: f64, s: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(invalid(format!("c must be positive, got {c}")));
    }
    Ok(libm::pow(2.0, s) / c)
}
