//! Sequence constructions and the two group-splitting processes.
//!
//! The simulators draw every trial from its own ChaCha substream keyed by
//! `(seed, n, trial)`, so estimates do not depend on how trials are scheduled
//! across threads.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::summability::{SequencePrefix, SummabilityError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("input is empty")]
    Empty,
    #[error("value at position {0} is not 0 or 1")]
    NonBitValue(usize),
    #[error("pair {0} is not finite")]
    NonFinitePair(usize),
    #[error("exact enumeration is capped at n = {cap}, got {n}")]
    CapExceeded { n: usize, cap: usize },
    #[error("group size must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("at least one trial is required")]
    NoTrials,
    #[error(transparent)]
    Sequence(#[from] SummabilityError),
}

/// a_n = (x_1 + ... + x_n) / n for a 0/1 input.
pub fn gen_bit_average(bits: &[u8]) -> Result<SequencePrefix, GeneratorError> {
    if bits.is_empty() {
        return Err(GeneratorError::Empty);
    }
    let mut ones = 0u64;
    let mut out = Vec::with_capacity(bits.len());
    for (i, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 => ones += 1,
            _ => return Err(GeneratorError::NonBitValue(i + 1)),
        }
        out.push(ones as f64 / (i + 1) as f64);
    }
    Ok(SequencePrefix::new(out)?)
}

/// Uniform random bits; `index` selects an independent substream.
pub fn random_bits(len: usize, seed: u64, index: u64) -> Vec<u8> {
    let mut rng = trial_rng(seed, len, index);
    (0..len).map(|_| rng.gen_range(0..2u8)).collect()
}

/// (x_1, x0, x_2, x0, ..., x_N, x0).
pub fn gen_interleave(x: &SequencePrefix, anchor: f64) -> Result<SequencePrefix, GeneratorError> {
    let out = x.values().iter().flat_map(|&v| [v, anchor]).collect();
    Ok(SequencePrefix::new(out)?)
}

/// x_n = √n.
pub fn gen_sqrt(len: usize) -> Result<SequencePrefix, GeneratorError> {
    Ok(SequencePrefix::from_fn(len, |n| (n as f64).sqrt())?)
}

/// x_1 = 0 and x_{k+1} = x_k + 1 when k is a perfect square, else x_k.
pub fn gen_jump_at_squares(len: usize) -> Result<SequencePrefix, GeneratorError> {
    if len == 0 {
        return Err(GeneratorError::Empty);
    }
    let mut out = Vec::with_capacity(len);
    let mut level = 0.0;
    out.push(level);
    for k in 1..len {
        if k.isqrt() * k.isqrt() == k {
            level += 1.0;
        }
        out.push(level);
    }
    Ok(SequencePrefix::new(out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub xi: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub sequence: SequencePrefix,
    /// For pair i, the 1-based index j with (ξ_i, η_i) = (α_{j−1}, α_j).
    pub anchor_indices: Vec<usize>,
}

/// Lays the pairs out as consecutive terms and joins η_i to ξ_{i+1} with a
/// linear bridge whose steps are at most 1/(i+1) in magnitude.
///
/// The bridge uses ⌈|η_i − ξ_{i+1}|·(i+1)⌉ steps; if rounding pushes a computed
/// step above 1/(i+1) the count is raised until every step fits.
pub fn gen_pair_embedding(pairs: &[Pair]) -> Result<EmbeddingResult, GeneratorError> {
    if pairs.is_empty() {
        return Err(GeneratorError::Empty);
    }
    if let Some(i) = pairs
        .iter()
        .position(|p| !p.xi.is_finite() || !p.eta.is_finite())
    {
        return Err(GeneratorError::NonFinitePair(i + 1));
    }
    let mut seq = Vec::with_capacity(pairs.len() * 2);
    let mut anchors = Vec::with_capacity(pairs.len());
    for (idx, pair) in pairs.iter().enumerate() {
        let i = idx + 1;
        if let Some(prev) = idx.checked_sub(1).map(|p| pairs[p]) {
            seq.extend(bridge(prev.eta, pair.xi, i));
        }
        seq.push(pair.xi);
        seq.push(pair.eta);
        anchors.push(seq.len());
    }
    Ok(EmbeddingResult {
        sequence: SequencePrefix::new(seq)?,
        anchor_indices: anchors,
    })
}

/// Interior points strictly between `from` and `to`, for the bridge after pair `i`.
fn bridge(from: f64, to: f64, i: usize) -> Vec<f64> {
    let gap = (to - from).abs();
    if gap == 0.0 {
        return Vec::new();
    }
    let bound = 1.0 / (i + 1) as f64;
    let mut steps = ((gap * (i + 1) as f64).ceil() as usize).max(1);
    loop {
        let interior: Vec<f64> = (1..steps)
            .map(|j| from + (to - from) * (j as f64 / steps as f64))
            .collect();
        let fits = std::iter::once(from)
            .chain(interior.iter().copied())
            .zip(interior.iter().copied().chain(std::iter::once(to)))
            .all(|(a, b)| (b - a).abs() <= bound);
        if fits {
            return interior;
        }
        steps += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimulationMode {
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub mode: SimulationMode,
    pub n_values: Vec<usize>,
    pub estimates: Vec<f64>,
    pub stderr: Vec<f64>,
    /// t̂_n / n, reported by the three-way split process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_capita: Option<Vec<f64>>,
    pub trials: u64,
    pub seed: u64,
}

impl SimulationResult {
    pub fn estimate_for(&self, n: usize) -> Option<(f64, f64)> {
        let i = self.n_values.iter().position(|&m| m == n)?;
        Some((self.estimates[i], self.stderr[i]))
    }
}

/// Counter-based RNG for one trial of one group size.
pub fn trial_rng(seed: u64, n: usize, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Mean and standard error (population std / √trials) of integer outcomes.
/// Sums are exact in u128, so the result is independent of summation order.
fn mean_stderr(outcomes: &[u64]) -> (f64, f64) {
    let t = outcomes.len() as f64;
    let sum: u128 = outcomes.iter().map(|&v| v as u128).sum();
    let sum_sq: u128 = outcomes.iter().map(|&v| (v as u128) * (v as u128)).sum();
    let mean = sum as f64 / t;
    let var = (sum_sq as f64 / t - mean * mean).max(0.0);
    (mean, (var / t).sqrt())
}

/// (n values, means, standard errors).
type TrialSummary = (Vec<usize>, Vec<f64>, Vec<f64>);

fn run_trials(
    n_max: usize,
    trials: u64,
    seed: u64,
    trial: impl Fn(usize, &mut ChaCha8Rng) -> u64 + Sync,
) -> Result<TrialSummary, GeneratorError> {
    if n_max < 2 {
        return Err(GeneratorError::TooSmall(n_max));
    }
    if trials == 0 {
        return Err(GeneratorError::NoTrials);
    }
    let n_values: Vec<usize> = (2..=n_max).collect();
    let mut estimates = Vec::with_capacity(n_values.len());
    let mut stderr = Vec::with_capacity(n_values.len());
    for &n in &n_values {
        let outcomes: Vec<u64> = (0..trials)
            .into_par_iter()
            .map(|t| trial(n, &mut trial_rng(seed, n, t)))
            .collect();
        let (m, s) = mean_stderr(&outcomes);
        estimates.push(m);
        stderr.push(s);
    }
    Ok((n_values, estimates, stderr))
}

/// One run of the selection-and-removal process from `n` people; true when
/// exactly one person remains.
pub fn survivor_trial<R: Rng + ?Sized>(n: usize, rng: &mut R) -> bool {
    let mut size = n;
    let mut picked = vec![false; n];
    while size >= 2 {
        picked[..size].fill(false);
        for me in 0..size {
            // Uniform over the other size − 1 members.
            let mut other = rng.gen_range(0..size - 1);
            if other >= me {
                other += 1;
            }
            picked[other] = true;
        }
        size -= picked[..size].iter().filter(|&&p| p).count();
    }
    size == 1
}

/// Monte Carlo estimates of p_n, the probability that exactly one person
/// remains, for n = 2..n_max.
pub fn simulate_survivor(
    n_max: usize,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult, GeneratorError> {
    let (n_values, estimates, stderr) = run_trials(n_max, trials, seed, |n, rng| {
        u64::from(survivor_trial(n, rng))
    })?;
    Ok(SimulationResult {
        mode: SimulationMode::MonteCarlo,
        n_values,
        estimates,
        stderr,
        per_capita: None,
        trials,
        seed,
    })
}

pub const EXACT_SURVIVOR_CAP: usize = 8;

/// p_0..=p_n as exact fractions, by enumerating all (m−1)^m selection
/// profiles for every group size 2 ≤ m ≤ n. p_0 = 0 and p_1 = 1.
pub fn exact_survivor_ratios(n: usize, cap: usize) -> Result<Vec<Ratio<u128>>, GeneratorError> {
    if n > cap {
        return Err(GeneratorError::CapExceeded { n, cap });
    }
    let mut p: Vec<Ratio<u128>> = vec![Ratio::from_integer(0), Ratio::from_integer(1)];
    for m in 2..=n {
        let remaining = survivor_distribution(m);
        let total: u128 = remaining.iter().sum();
        let pm = remaining
            .iter()
            .enumerate()
            .filter(|(_, &count)| count > 0)
            .map(|(left, &count)| Ratio::new(count, total) * p[left])
            .fold(Ratio::from_integer(0), |acc, x| acc + x);
        p.push(pm);
    }
    p.truncate(n + 1);
    Ok(p)
}

/// p_n as an exact fraction; see [`exact_survivor_ratios`].
pub fn exact_survivor_ratio(n: usize, cap: usize) -> Result<Ratio<u128>, GeneratorError> {
    Ok(exact_survivor_ratios(n, cap)?[n])
}

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// p_n as a float; see [`exact_survivor_ratios`].
pub fn exact_survivor(n: usize) -> Result<f64, GeneratorError> {
    Ok(ratio_to_f64(&exact_survivor_ratio(n, EXACT_SURVIVOR_CAP)?))
}

/// counts[k] = number of profiles of a size-m group that leave k members unpicked.
fn survivor_distribution(m: usize) -> Vec<u128> {
    let mut counts = vec![0u128; m + 1];
    // Each digit d_i ∈ [0, m−2] encodes person i's choice among the others.
    let mut digits = vec![0usize; m];
    let mut picked = vec![false; m];
    loop {
        picked.fill(false);
        for (me, &d) in digits.iter().enumerate() {
            picked[if d >= me { d + 1 } else { d }] = true;
        }
        counts[picked.iter().filter(|&&p| !p).count()] += 1;

        let mut pos = 0;
        loop {
            if pos == m {
                return counts;
            }
            digits[pos] += 1;
            if digits[pos] < m - 1 {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Splits a group of `size` into three by independent uniform choices.
pub fn three_way_split<R: Rng + ?Sized>(size: usize, rng: &mut R) -> [usize; 3] {
    let mut parts = [0usize; 3];
    for _ in 0..size {
        parts[rng.gen_range(0..3)] += 1;
    }
    parts
}

/// Number of synchronized rounds until no group of two or more is left.
pub fn three_split_trial<R: Rng + ?Sized>(n: usize, rng: &mut R) -> u64 {
    let mut live: Vec<usize> = if n >= 2 { vec![n] } else { Vec::new() };
    let mut rounds = 0;
    while !live.is_empty() {
        rounds += 1;
        let mut next = Vec::with_capacity(live.len() * 3);
        for &g in &live {
            next.extend(three_way_split(g, rng).into_iter().filter(|&c| c >= 2));
        }
        live = next;
    }
    rounds
}

/// Monte Carlo estimates of t_n, the expected number of rounds to complete
/// removal, for n = 2..n_max, along with t̂_n / n.
pub fn simulate_three_split(
    n_max: usize,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult, GeneratorError> {
    let (n_values, estimates, stderr) = run_trials(n_max, trials, seed, three_split_trial)?;
    let per_capita = n_values
        .iter()
        .zip(&estimates)
        .map(|(&n, &t)| t / n as f64)
        .collect();
    Ok(SimulationResult {
        mode: SimulationMode::MonteCarlo,
        n_values,
        estimates,
        stderr,
        per_capita: Some(per_capita),
        trials,
        seed,
    })
}

/// Exact p_n for n = 2..n_max (capped), as a result table.
pub fn exact_survivor_table(n_max: usize) -> Result<SimulationResult, GeneratorError> {
    if n_max < 2 {
        return Err(GeneratorError::TooSmall(n_max));
    }
    let n_values: Vec<usize> = (2..=n_max).collect();
    let exact = exact_survivor_ratios(n_max, EXACT_SURVIVOR_CAP)?;
    let estimates = n_values.iter().map(|&n| ratio_to_f64(&exact[n])).collect();
    Ok(SimulationResult {
        mode: SimulationMode::Exact,
        stderr: vec![0.0; n_values.len()],
        n_values,
        estimates,
        per_capita: None,
        trials: 0,
        seed: 0,
    })
}
