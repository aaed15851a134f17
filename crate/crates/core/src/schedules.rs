//! λ-schedules, lacunary schedules and their index windows.
//!
//! A [`LambdaSchedule`] is a finite prefix λ_1..λ_N of a non-decreasing
//! sequence with λ_1 = 1 and unit-bounded increments. Each position n owns the
//! trailing window I_n = [n − λ_n + 1, n]. A [`LacunarySchedule`] partitions
//! the positive integers into blocks (k_{r−1}, k_r].

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule is empty")]
    Empty,
    #[error("λ_1 must equal 1")]
    FirstNotOne,
    #[error("λ_{0} is not a positive finite number")]
    NonPositive(usize),
    #[error("schedule decreases after position {0}")]
    Decreasing(usize),
    #[error("λ_{next} > λ_{0} + 1", next = .0 + 1)]
    JumpTooBig(usize),
    #[error("index {0} is outside the schedule")]
    OutOfRange(usize),
    #[error("lacunary cuts must start at 0")]
    FirstNotZero,
    #[error("lacunary cut k_{0} does not exceed k_{prev}", prev = .0 - 1)]
    NotIncreasing(usize),
    #[error("unknown built-in schedule `{0}`")]
    UnknownBuiltin(String),
}

/// Inclusive range of 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub lo: usize,
    pub hi: usize,
}

impl IndexWindow {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    name: String,
    values: Vec<f64>,
    /// Set when λ_N < ln N, i.e. the prefix shows little sign of tending to ∞.
    growth_warning: Option<String>,
}

impl LambdaSchedule {
    /// Checks every schedule invariant and records the slow-growth warning.
    pub fn validate(name: impl Into<String>, values: Vec<f64>) -> Result<Self, ScheduleError> {
        if values.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(ScheduleError::NonPositive(i + 1));
            }
        }
        if values[0] != 1.0 {
            return Err(ScheduleError::FirstNotOne);
        }
        for (i, pair) in values.windows(2).enumerate() {
            let n = i + 1;
            if pair[1] < pair[0] {
                return Err(ScheduleError::Decreasing(n));
            }
            if pair[1] > pair[0] + 1.0 {
                return Err(ScheduleError::JumpTooBig(n));
            }
        }
        // Implied by the two rules above; kept as a direct check.
        for (i, &v) in values.iter().enumerate() {
            debug_assert!(v <= (i + 1) as f64, "λ_n > n at n = {}", i + 1);
        }

        let n = values.len();
        let last = values[n - 1];
        let growth_warning = ((last) < (n as f64).ln()).then(|| {
            format!(
                "λ_N = {last} is below ln(N) = {:.4} at N = {n}; growth towards ∞ is not evident",
                (n as f64).ln()
            )
        });
        Ok(Self {
            name: name.into(),
            values,
            growth_warning,
        })
    }

    /// λ_n = n.
    pub fn identity(len: usize) -> Self {
        Self::from_integers("identity", (1..=len.max(1)).collect())
    }

    /// λ_n = max(1, ⌊√n⌋).
    pub fn floor_sqrt(len: usize) -> Self {
        Self::from_integers(
            "floor-sqrt",
            (1..=len.max(1)).map(|n| n.isqrt().max(1)).collect(),
        )
    }

    /// λ_n = max(1, ⌊log₂(n + 1)⌋).
    pub fn log2(len: usize) -> Self {
        Self::from_integers(
            "log2",
            (1..=len.max(1))
                .map(|n| ((n + 1).ilog2() as usize).max(1))
                .collect(),
        )
    }

    pub const BUILTIN_IDS: [&'static str; 3] = ["identity", "floor-sqrt", "log2"];

    pub fn builtin(id: &str, len: usize) -> Result<Self, ScheduleError> {
        match id {
            "identity" => Ok(Self::identity(len)),
            "floor-sqrt" | "sqrt" => Ok(Self::floor_sqrt(len)),
            "log2" | "log" => Ok(Self::log2(len)),
            other => Err(ScheduleError::UnknownBuiltin(other.to_string())),
        }
    }

    fn from_integers(name: &str, values: Vec<usize>) -> Self {
        Self::validate(name, values.into_iter().map(|v| v as f64).collect())
            .expect("built-in schedules satisfy the schedule invariants")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn growth_warning(&self) -> Option<&str> {
        self.growth_warning.as_deref()
    }

    /// λ_n for 1-based n.
    pub fn lambda(&self, n: usize) -> Result<f64, ScheduleError> {
        if n == 0 || n > self.values.len() {
            return Err(ScheduleError::OutOfRange(n));
        }
        Ok(self.values[n - 1])
    }

    /// I_n: all integers k with n − λ_n + 1 ≤ k ≤ n.
    pub fn window(&self, n: usize) -> Result<IndexWindow, ScheduleError> {
        let lambda = self.lambda(n)?;
        let lo = ((n as f64) - lambda + 1.0).ceil().max(1.0) as usize;
        Ok(IndexWindow { lo, hi: n })
    }

    /// The first `len` entries as a new schedule.
    pub fn truncated(&self, len: usize) -> Result<Self, ScheduleError> {
        if len == 0 || len > self.values.len() {
            return Err(ScheduleError::OutOfRange(len));
        }
        Self::validate(self.name.clone(), self.values[..len].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunarySchedule {
    cuts: Vec<usize>,
    /// h_r = k_r − k_{r−1}, stored for r = 1..R.
    lengths: Vec<usize>,
    /// q_r = k_r / k_{r−1}, stored for r = 2..R.
    ratios: Vec<f64>,
    margin: f64,
    regular: bool,
}

impl LacunarySchedule {
    /// Validates cut points k_0 = 0 < k_1 < ... < k_R. The regularity flag is
    /// set when the smallest observed ratio q_r (r ≥ 2) exceeds `1 + margin`.
    pub fn validate(cuts: Vec<usize>, margin: f64) -> Result<Self, ScheduleError> {
        if cuts.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if cuts[0] != 0 {
            return Err(ScheduleError::FirstNotZero);
        }
        for r in 1..cuts.len() {
            if cuts[r] <= cuts[r - 1] {
                return Err(ScheduleError::NotIncreasing(r));
            }
        }
        let lengths: Vec<usize> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
        let ratios: Vec<f64> = cuts
            .windows(2)
            .skip(1)
            .map(|w| w[1] as f64 / w[0] as f64)
            .collect();
        let regular = !ratios.is_empty()
            && ratios.iter().copied().fold(f64::INFINITY, f64::min) > 1.0 + margin;
        Ok(Self {
            cuts,
            lengths,
            ratios,
            margin,
            regular,
        })
    }

    /// Cuts 0, 2, 4, 8, ... up to the largest power of two not exceeding `limit`.
    pub fn doubling(limit: usize) -> Self {
        let mut cuts = vec![0];
        let mut k = 2usize;
        while k <= limit {
            cuts.push(k);
            k *= 2;
        }
        Self::validate(cuts, 0.0).expect("doubling cuts are increasing")
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// Number of blocks R.
    pub fn blocks(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn min_ratio(&self) -> Option<f64> {
        self.ratios.iter().copied().reduce(f64::min)
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn is_regular(&self) -> bool {
        self.regular
    }

    /// Last cut k_R.
    pub fn span(&self) -> usize {
        *self.cuts.last().expect("cuts are non-empty")
    }

    /// Block I_r = (k_{r−1}, k_r] for r = 1..R, as an inclusive window.
    pub fn block(&self, r: usize) -> Result<IndexWindow, ScheduleError> {
        if r == 0 || r > self.blocks() {
            return Err(ScheduleError::OutOfRange(r));
        }
        Ok(IndexWindow {
            lo: self.cuts[r - 1] + 1,
            hi: self.cuts[r],
        })
    }
}
