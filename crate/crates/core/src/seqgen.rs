//! Binary branching sequences with zero runs at every scale.
//!
//! For a rate `gamma` in (0, 1) the window lengths are `N_m = floor(m^3 / gamma)`.
//! Component `m` is periodic with period `N_m - m + 1`: a block of ones followed
//! by `m` zeros. The sequence has a zero wherever any component does. With this
//! period every window of `N_m` consecutive terms holds a complete block of `m`
//! zeros, and the lower Cesàro mean stays above `1 - gamma * pi^2 / 6` up to a
//! vanishing finite-prefix error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::Rational;

/// A finite prefix `a_1 .. a_len` of a binary branching sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingSeq {
    bits: Vec<u8>,
    gamma: Option<Rational>,
    schedule: Vec<u64>,
}

/// `N_m = floor(m^3 / gamma)`.
pub fn window_length(gamma: Rational, m: u64) -> u64 {
    let cube = (m as u128).pow(3);
    let n = cube * (*gamma.denom() as u128) / (*gamma.numer() as u128);
    u64::try_from(n).unwrap_or(u64::MAX)
}

fn check_gamma(gamma: Rational) -> Result<()> {
    if *gamma.denom() == 0 || *gamma.numer() == 0 || gamma >= Rational::from_integer(1) {
        return Err(invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// Builds the prefix of length `length` for rate `gamma`.
///
/// The stored schedule lists `N_1, N_2, ...` up to and including the first
/// `N_m >= length`; later components are identically one on the prefix.
pub fn build_sequence(gamma: Rational, length: usize) -> Result<BranchingSeq> {
    check_gamma(gamma)?;
    if length == 0 {
        return Err(invalid("sequence length must be positive"));
    }
    let mut bits = vec![1u8; length];
    let mut schedule = Vec::new();
    for m in 1u64.. {
        let n_m = window_length(gamma, m);
        schedule.push(n_m);
        let period = (n_m - m + 1) as usize;
        let run = m as usize;
        let mut start = period - run;
        while start < length {
            let end = (start + run).min(length);
            bits[start..end].iter_mut().for_each(|b| *b = 0);
            start += period;
        }
        if n_m >= length as u64 {
            break;
        }
    }
    Ok(BranchingSeq {
        bits,
        gamma: Some(gamma),
        schedule,
    })
}

impl BranchingSeq {
    /// Wraps an arbitrary 0/1 prefix that carries no generation parameters.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        Self::validate_bits(&bits)?;
        Ok(Self {
            bits,
            gamma: None,
            schedule: Vec::new(),
        })
    }

    /// Reassembles a sequence read from storage, checking the schedule
    /// invariants against `gamma`.
    pub fn from_parts(bits: Vec<u8>, gamma: Option<Rational>, schedule: Vec<u64>) -> Result<Self> {
        Self::validate_bits(&bits)?;
        match gamma {
            Some(g) => {
                check_gamma(g)?;
                for (i, &n) in schedule.iter().enumerate() {
                    let m = i as u64 + 1;
                    if n != window_length(g, m) {
                        return Err(invalid(format!(
                            "schedule entry N_{m} = {n} disagrees with floor(m^3/gamma) = {}",
                            window_length(g, m)
                        )));
                    }
                }
            }
            None if !schedule.is_empty() => {
                return Err(invalid("a window schedule requires gamma"));
            }
            None => {}
        }
        Ok(Self { bits, gamma, schedule })
    }

    /// All-ones prefix.
    pub fn ones(len: usize) -> Result<Self> {
        Self::from_bits(vec![1; len])
    }

    /// `pattern` repeated to length `len`.
    pub fn periodic(pattern: &[u8], len: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(invalid("pattern must be non-empty"));
        }
        Self::from_bits(pattern.iter().copied().cycle().take(len).collect())
    }

    fn validate_bits(bits: &[u8]) -> Result<()> {
        if bits.is_empty() {
            return Err(invalid("sequence must be non-empty"));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(invalid(format!("entry {} is not 0 or 1", pos + 1)));
        }
        Ok(())
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn gamma(&self) -> Option<Rational> {
        self.gamma
    }

    pub fn schedule(&self) -> &[u64] {
        &self.schedule
    }

    /// `N_m`, from the stored schedule or recomputed from `gamma`.
    pub fn window_len(&self, m: u64) -> Option<u64> {
        if m == 0 {
            return None;
        }
        self.schedule
            .get(m as usize - 1)
            .copied()
            .or_else(|| self.gamma.map(|g| window_length(g, m)))
    }

    /// `a_{j+1}, a_{j+2}, ...` as a parameter-free sequence.
    pub fn shifted(&self, j: usize) -> Result<Self> {
        if j >= self.len() {
            return Err(Error::InsufficientData {
                what: "shifted sequence",
                needed: j + 1,
                available: self.len(),
            });
        }
        Self::from_bits(self.bits[j..].to_vec())
    }

    /// Prefix sums `S_0 = 0, S_n = a_1 + ... + a_n`.
    pub fn prefix_sums(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(0);
        let mut acc = 0u64;
        for &b in &self.bits {
            acc += b as u64;
            out.push(acc);
        }
        out
    }

    /// Slack for the finite-prefix Cesàro bound: `10 * N_{m*} / len` for the
    /// largest `m*` whose zero block starts inside the prefix.
    pub fn cesaro_slack(&self) -> Option<f64> {
        let len = self.len() as u64;
        (1..=self.schedule.len() as u64)
            .rev()
            .find(|&m| {
                let n_m = self.schedule[m as usize - 1];
                n_m - 2 * m + 2 <= len
            })
            .map(|m| 10.0 * self.schedule[m as usize - 1] as f64 / len as f64)
    }
}

/// Minimum over `n` in `[n_start, len]` of the running mean `(a_1 + ... + a_n) / n`.
pub fn lower_cesaro(seq: &BranchingSeq, n_start: usize) -> Result<Rational> {
    if n_start == 0 || n_start > seq.len() {
        return Err(invalid(format!(
            "n_start must lie in [1, {}], got {n_start}",
            seq.len()
        )));
    }
    let sums = seq.prefix_sums();
    let (mut best_num, mut best_den) = (sums[n_start], n_start as u64);
    for n in n_start + 1..=seq.len() {
        if (sums[n] as u128) * (best_den as u128) < (best_num as u128) * (n as u128) {
            best_num = sums[n];
            best_den = n as u64;
        }
    }
    Ok(Rational::new(best_num, best_den))
}

/// Running means `(n, (a_1 + ... + a_n) / n)` for every `n`.
pub fn cesaro_profile(seq: &BranchingSeq) -> Vec<(usize, Rational)> {
    seq.prefix_sums()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &s)| (n, Rational::new(s, n as u64)))
        .collect()
}

/// Outcome of a zero-window scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroWindowCheck {
    pub m: u64,
    pub window: u64,
    pub holds: bool,
    /// 1-based start of the first window without `m` consecutive zeros.
    pub witness: Option<usize>,
}

/// Checks that every window of length `N_m` fully inside the prefix contains
/// `m` consecutive zeros.
pub fn verify_zero_windows(seq: &BranchingSeq, m: u64) -> Result<ZeroWindowCheck> {
    if m == 0 {
        return Err(invalid("m must be positive"));
    }
    let window = seq
        .window_len(m)
        .ok_or_else(|| invalid("sequence has no window schedule or gamma"))?;
    if (seq.len() as u64) < window {
        return Err(Error::InsufficientData {
            what: "zero-window scan",
            needed: window as usize,
            available: seq.len(),
        });
    }
    let witness = first_window_without_zero_run(seq.bits(), m as usize, window as usize);
    Ok(ZeroWindowCheck {
        m,
        window,
        holds: witness.is_none(),
        witness,
    })
}

/// 1-based start of the first length-`window` window of `bits` lacking a run
/// of `m` zeros, or `None` if all windows have one.
pub fn first_window_without_zero_run(bits: &[u8], m: usize, window: usize) -> Option<usize> {
    if window == 0 || bits.len() < window {
        return None;
    }
    if m > window {
        return Some(1);
    }
    // hits[q] counts positions p < q where a zero run of length >= m ends
    let mut hits = Vec::with_capacity(bits.len() + 1);
    hits.push(0usize);
    let mut run = 0usize;
    for &b in bits {
        run = if b == 0 { run + 1 } else { 0 };
        hits.push(hits.last().unwrap() + usize::from(run >= m));
    }
    (0..=bits.len() - window)
        .find(|&s| hits[s + window] == hits[s + m - 1])
        .map(|s| s + 1)
}

/// Largest mean of `n` consecutive terms.
pub fn window_sup_mean(seq: &BranchingSeq, n: usize) -> Result<Rational> {
    if n == 0 || n > seq.len() {
        return Err(invalid(format!(
            "window length must lie in [1, {}], got {n}",
            seq.len()
        )));
    }
    let sums = seq.prefix_sums();
    Ok(Rational::new(max_window_sum(&sums, n), n as u64))
}

fn max_window_sum(sums: &[u64], n: usize) -> u64 {
    (0..sums.len() - n).map(|k| sums[k + n] - sums[k]).max().unwrap_or(0)
}

/// `window_sup_mean(seq, n)` for `n = 1 ..= n_max`.
pub fn window_sup_profile(seq: &BranchingSeq, n_max: usize) -> Result<Vec<Rational>> {
    if n_max == 0 || n_max > seq.len() {
        return Err(invalid(format!("n_max must lie in [1, {}], got {n_max}", seq.len())));
    }
    let sums = seq.prefix_sums();
    Ok((1..=n_max)
        .map(|n| Rational::new(max_window_sum(&sums, n), n as u64))
        .collect())
}
