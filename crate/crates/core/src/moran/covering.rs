//! Covering counts of balls in small microsets.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{MoranSpec, MoranTree};
use crate::error::{invalid, Error, Result};

/// Largest number of ball centres examined per check. Trees with more
/// leaves are sampled with a seeded generator.
pub const SAMPLE_CAP: usize = 10_000;

/// Outcome of [`check_small_microset`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringReport {
    pub m: u64,
    /// `N_m` of the generating sequence.
    pub window: u64,
    /// Relative level `i` with `a_(i+1) = ... = a_(i+m) = 0` inside the window.
    pub zero_run_start: usize,
    /// Ball radius `rho^i`.
    pub radius: f64,
    /// Level `i + m` whose cubes are counted.
    pub cover_level: usize,
    pub samples: usize,
    /// Whether every leaf served as a centre (as opposed to a random sample).
    pub exhaustive: bool,
    pub max_count: usize,
    pub bound: usize,
    pub holds: bool,
    /// Leaf word whose origin attains `max_count`.
    pub worst: Vec<u32>,
}

/// For centres `x0` at the origins of the microset's leaf cubes, counts the
/// level-`(i + m)` cubes meeting the closed ball `B(x0, rho^i)`, where
/// levels `i+1 ..= i+m` carry no branching and `i + m <= N_m`. The largest
/// count must not exceed `9^d`.
pub fn check_small_microset(spec: &MoranSpec, microset: &MoranTree, m: u64, seed: u64) -> Result<CoveringReport> {
    if m == 0 {
        return Err(invalid("m must be positive"));
    }
    if microset.d() != spec.d || microset.rho() != spec.rho {
        return Err(invalid("microset does not belong to the given construction"));
    }
    let window = spec
        .seq
        .window_len(m)
        .ok_or_else(|| invalid("the sequence carries no window schedule"))?;
    let run = m as usize;
    let reach = usize::try_from(window).unwrap_or(usize::MAX).min(microset.depth());
    let start = (0..=reach.saturating_sub(run))
        .take_while(|&i| i + run <= reach)
        .find(|&i| microset.branching()[i..i + run].iter().all(|&b| !b));
    let Some(i) = start else {
        if (microset.depth() as u64) < window {
            return Err(Error::InsufficientData {
                what: "microset depth to resolve the zero run",
                needed: window as usize,
                available: microset.depth(),
            });
        }
        return Err(Error::Precondition(format!(
            "no run of {m} zeros within the first {window} levels of the microset"
        )));
    };
    let radius = libm::pow(spec.rho, i as f64);
    let cover_level = i + run;
    let bound = 9usize.pow(spec.d as u32);

    let leaves_log2 = microset.level_count_log2(microset.depth());
    let exhaustive = leaves_log2 < 64 && (1u64 << leaves_log2) <= SAMPLE_CAP as u64;
    let centres: Vec<Vec<u32>> = if exhaustive {
        all_codes(microset)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..SAMPLE_CAP)
            .map(|_| microset.random_code(microset.depth(), &mut rng))
            .collect()
    };

    let mut max_count = 0;
    let mut worst = Vec::new();
    let mut scratch = Scratch::default();
    for code in &centres {
        let count = count_cubes_meeting_ball(microset, code, i, cover_level, &mut scratch);
        if count > max_count {
            max_count = count;
            worst.clone_from(code);
        }
    }
    Ok(CoveringReport {
        m,
        window,
        zero_run_start: i,
        radius,
        cover_level,
        samples: centres.len(),
        exhaustive,
        max_count,
        bound,
        holds: max_count <= bound,
        worst,
    })
}

fn all_codes(tree: &MoranTree) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = alloc::vec![Vec::new()];
    for n in 0..tree.depth() {
        let k = tree.children_at(n);
        out = out
            .into_iter()
            .flat_map(|c| {
                (1..=k).map(move |s| {
                    let mut c = c.clone();
                    c.push(s);
                    c
                })
            })
            .collect();
    }
    out
}

#[derive(Default)]
struct Scratch {
    /// `tail[n]`: `(x0 - origin(w_n)) / rho^n`, with `w_n` the level-`n` ancestor of the leaf.
    tail: Vec<f64>,
    frontier: Vec<f64>,
    next: Vec<f64>,
}

/// Number of level-`level` cubes of `tree` within distance `rho^i` of the
/// origin `x0` of the leaf `leaf`, by a breadth-first descent that drops
/// cubes farther away.
///
/// Absolute coordinates lose all meaning below `2^-53`, so every cube is
/// held as the offset of its origin from the origin of `w_n`, in units of
/// its side `rho^n`. Cubes that still agree with `w` carry offset zero, and
/// at `rho = 1/2` the offsets are small integers, so the count is exact.
fn count_cubes_meeting_ball(tree: &MoranTree, leaf: &[u32], i: usize, level: usize, s: &mut Scratch) -> usize {
    let d = tree.d();
    let rho = tree.rho();
    let far = 1.0 - rho;
    let bit = |n: usize, axis: usize| f64::from(((leaf[n] - 1) >> axis) & 1);
    s.tail.clear();
    s.tail.resize((leaf.len() + 1) * d, 0.0);
    for n in (0..leaf.len()).rev() {
        for axis in 0..d {
            s.tail[n * d + axis] = bit(n, axis) * far + rho * s.tail[(n + 1) * d + axis];
        }
    }
    s.frontier.clear();
    s.frontier.extend(core::iter::repeat(0.0).take(d));
    for n in 0..level {
        s.next.clear();
        // radius rho^i measured in units of the child side rho^(n+1)
        let reach = libm::pow(rho, i as f64 - (n + 1) as f64) * (1.0 + crate::RELATIVE_SLACK);
        let x = &s.tail[(n + 1) * d..(n + 2) * d];
        for offset in s.frontier.chunks(d) {
            for e in 0..tree.children_at(n) {
                let mut d2 = 0.0;
                for axis in 0..d {
                    let moved = f64::from((e >> axis) & 1) - bit(n, axis);
                    let lo = (offset[axis] + moved * far) / rho;
                    let gap = (lo - x[axis]).max(x[axis] - lo - 1.0).max(0.0);
                    d2 += gap * gap;
                }
                if libm::sqrt(d2) <= reach {
                    for axis in 0..d {
                        let moved = f64::from((e >> axis) & 1) - bit(n, axis);
                        s.next.push((offset[axis] + moved * far) / rho);
                    }
                }
            }
        }
        core::mem::swap(&mut s.frontier, &mut s.next);
    }
    s.frontier.len() / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{build_sequence, BranchingSeq};
    use crate::Rational;

    #[test]
    fn single_branch_microset_counts_one() {
        let seq = build_sequence(Rational::new(1, 2), 400).unwrap();
        let spec = MoranSpec::new(2, 0.5, seq).unwrap();
        let micro = MoranTree::new(2, 0.5, alloc::vec![false; 40]).unwrap();
        for m in 1..=3 {
            let rep = check_small_microset(&spec, &micro, m, 1).unwrap();
            assert_eq!(rep.max_count, 1);
            assert_eq!(rep.zero_run_start, 0);
            assert!(rep.exhaustive && rep.holds);
        }
    }

    #[test]
    fn half_rate_line_microset() {
        let seq = build_sequence(Rational::new(1, 2), 200).unwrap();
        let spec = MoranSpec::new(1, 0.5, seq).unwrap();
        let tree = spec.tree(200).unwrap();
        let micro = tree.microset_prefix(&[2, 1, 1, 1, 2], 30).unwrap();
        let rep = check_small_microset(&spec, &micro, 2, 7).unwrap();
        assert_eq!(rep.window, 16);
        assert!(rep.cover_level <= 16);
        assert!(rep.holds, "{rep:?}");
        assert!(rep.max_count <= 9);
    }

    #[test]
    fn half_rate_plane_microset() {
        let seq = build_sequence(Rational::new(1, 2), 200).unwrap();
        let spec = MoranSpec::new(2, 0.5, seq).unwrap();
        let micro = spec.tree(200).unwrap().microset_prefix(&[4, 1, 3], 20).unwrap();
        let rep = check_small_microset(&spec, &micro, 1, 7).unwrap();
        assert!(rep.holds && rep.max_count <= 81, "{rep:?}");
        assert_eq!(rep.samples, SAMPLE_CAP);
    }

    #[test]
    fn missing_zero_run_is_a_precondition_error() {
        let ones = BranchingSeq::from_parts(alloc::vec![1; 64], Some(Rational::new(1, 2)), alloc::vec![2, 16]).unwrap();
        let spec = MoranSpec::new(1, 0.5, ones).unwrap();
        let micro = spec.tree(20).unwrap();
        assert!(matches!(
            check_small_microset(&spec, &micro, 1, 0),
            Err(Error::Precondition(_))
        ));
        let shallow = MoranTree::new(1, 0.5, alloc::vec![true; 8]).unwrap();
        assert!(matches!(
            check_small_microset(&spec, &shallow, 2, 0),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn deep_levels_keep_their_geometry() {
        // full binary line for 70 levels, then a zero run; absolute f64
        // coordinates cannot tell these cubes apart
        let mut branching = alloc::vec![true; 70];
        branching.extend([false; 4]);
        let tree = MoranTree::new(1, 0.5, branching).unwrap();
        let leaf: Vec<u32> = (0..74).map(|n| if n < 70 { 1 + (n as u32 % 2) } else { 1 }).collect();
        let mut scratch = Scratch::default();
        // level-74 cubes sit at the origins x0 + k h of the level-70 cubes,
        // h = 2^-70, with side h/16: k in -1..=1 reach B(x0, h), -2..=2 reach B(x0, 2h)
        assert_eq!(count_cubes_meeting_ball(&tree, &leaf, 70, 74, &mut scratch), 3);
        assert_eq!(count_cubes_meeting_ball(&tree, &leaf, 69, 74, &mut scratch), 5);
        let edge = alloc::vec![1u32; 74];
        assert_eq!(count_cubes_meeting_ball(&tree, &edge, 70, 74, &mut scratch), 2);
    }
}
