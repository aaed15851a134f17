//! Windowed means, strong residuals and deviation densities over sequence
//! prefixes, plus a finite-scale limit estimator for each summability method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedules::{IndexWindow, LacunarySchedule, LambdaSchedule, ScheduleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SummabilityError {
    #[error("sequence prefix is empty")]
    EmptyPrefix,
    #[error("x_{0} is not finite")]
    NonFinite(usize),
    #[error("index {0} is outside the prefix or schedule")]
    OutOfRange(usize),
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("lacunary cuts reach {span} but the prefix has only {len} terms")]
    CutsExceedPrefix { span: usize, len: usize },
    #[error("prefix needs at least 2 terms")]
    PrefixTooShort,
    #[error("tail fraction must lie in (0, 1], got {0}")]
    BadTailFraction(f64),
    #[error("epsilon grid is empty")]
    EmptyGrid,
    #[error("method {0} needs a lacunary schedule")]
    NeedsLacunary(Method),
    #[error("method {0} needs a λ-schedule")]
    NeedsLambda(Method),
    #[error("lacunary schedule has no blocks")]
    NoBlocks,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// A finite, 1-indexed prefix x_1..x_N of a real sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SequencePrefix {
    values: Vec<f64>,
}

impl SequencePrefix {
    pub fn new(values: Vec<f64>) -> Result<Self, SummabilityError> {
        if values.is_empty() {
            return Err(SummabilityError::EmptyPrefix);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SummabilityError::NonFinite(i + 1));
        }
        Ok(Self { values })
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Result<Self, SummabilityError> {
        Self::new((1..=len).map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// x_k for 1-based k.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    fn window_slice(&self, w: IndexWindow) -> &[f64] {
        &self.values[w.lo - 1..w.hi]
    }
}

impl TryFrom<Vec<f64>> for SequencePrefix {
    type Error = SummabilityError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<SequencePrefix> for Vec<f64> {
    fn from(p: SequencePrefix) -> Self {
        p.values
    }
}

/// d_n(ε, L) for n = 1..N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub epsilon: f64,
    pub center: f64,
    pub schedule_name: String,
    pub densities: Vec<f64>,
}

impl DensityProfile {
    /// d_n for 1-based n.
    pub fn at(&self, n: usize) -> Option<f64> {
        n.checked_sub(1)
            .and_then(|i| self.densities.get(i).copied())
    }

    pub fn last(&self) -> f64 {
        *self.densities.last().expect("profiles are never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    /// Ordinary convergence.
    Lim,
    /// Statistical convergence (natural density over [1, n]).
    St,
    /// Lacunary statistical convergence.
    STheta,
    /// λ-statistical convergence.
    SLambda,
    /// Strong [V, λ]-summability.
    VLambdaStrong,
    /// (V, λ)-summability: the windowed mean converges.
    VLambdaMean,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Lim,
        Method::St,
        Method::STheta,
        Method::SLambda,
        Method::VLambdaStrong,
        Method::VLambdaMean,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Lim => "LIM",
            Method::St => "ST",
            Method::STheta => "S_THETA",
            Method::SLambda => "S_LAMBDA",
            Method::VLambdaStrong => "V_LAMBDA_STRONG",
            Method::VLambdaMean => "V_LAMBDA_MEAN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.id() == norm)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    ConvergedEvidence,
    DivergedEvidence,
    Inconclusive,
}

/// Which index structure a method is evaluated against.
#[derive(Debug, Clone, Copy)]
pub enum Windowing<'a> {
    Lambda(&'a LambdaSchedule),
    Lacunary(&'a LacunarySchedule),
}

/// Finite-scale cutoffs shared by the limit estimator and the quasi-Cauchy
/// classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    pub epsilon_grid: Vec<f64>,
    pub tail_fraction: f64,
    pub tolerance: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            epsilon_grid: vec![0.5, 0.1, 0.02],
            tail_fraction: 0.2,
            tolerance: 0.05,
        }
    }
}

impl TailConfig {
    pub fn validate(&self) -> Result<(), SummabilityError> {
        if self.epsilon_grid.is_empty() {
            return Err(SummabilityError::EmptyGrid);
        }
        if let Some(&e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0)) {
            return Err(SummabilityError::NonPositiveEpsilon(e));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(SummabilityError::BadTailFraction(self.tail_fraction));
        }
        Ok(())
    }

    /// ⌈tail_fraction · len⌉, at least 1.
    pub fn tail_len(&self, len: usize) -> usize {
        ((self.tail_fraction * len as f64).ceil() as usize).clamp(1, len.max(1))
    }
}

/// Per-ε evidence over the tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEvidence {
    pub epsilon: f64,
    /// Density (or residual) at the last index.
    pub final_value: f64,
    pub tail_min: f64,
    pub tail_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub method: Method,
    pub candidate_limit: f64,
    pub epsilon_grid: Vec<f64>,
    pub tail_fraction: f64,
    pub tolerance: f64,
    /// Number of tail indices (or lacunary blocks) examined.
    pub tail_len: usize,
    pub tail_densities: Vec<TailEvidence>,
    pub verdict: Verdict,
}

fn check_epsilon(epsilon: f64) -> Result<(), SummabilityError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(SummabilityError::NonPositiveEpsilon(epsilon))
    }
}

fn check_index(
    prefix: &SequencePrefix,
    schedule: &LambdaSchedule,
    n: usize,
) -> Result<(), SummabilityError> {
    if n == 0 || n > prefix.len() || n > schedule.len() {
        return Err(SummabilityError::OutOfRange(n));
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// t_n(x) = (1/λ_n) Σ_{k∈I_n} x_k.
pub fn vp_mean(
    prefix: &SequencePrefix,
    schedule: &LambdaSchedule,
    n: usize,
) -> Result<f64, SummabilityError> {
    check_index(prefix, schedule, n)?;
    let w = schedule.window(n)?;
    Ok(compensated_sum(prefix.window_slice(w).iter().copied()) / schedule.lambda(n)?)
}

/// (1/λ_n) Σ_{k∈I_n} |x_k − L|.
pub fn strong_residual(
    prefix: &SequencePrefix,
    schedule: &LambdaSchedule,
    center: f64,
    n: usize,
) -> Result<f64, SummabilityError> {
    check_index(prefix, schedule, n)?;
    let w = schedule.window(n)?;
    let sum = compensated_sum(prefix.window_slice(w).iter().map(|x| (x - center).abs()));
    Ok(sum / schedule.lambda(n)?)
}

/// d_n = |{k ∈ I_n : |x_k − L| ≥ ε}| / λ_n for n = 1..N.
///
/// The schedule must cover the whole prefix. Window counts come from a running
/// count of violating indices, so each d_n is an exact integer over λ_n.
pub fn lambda_density(
    prefix: &SequencePrefix,
    schedule: &LambdaSchedule,
    center: f64,
    epsilon: f64,
) -> Result<DensityProfile, SummabilityError> {
    check_epsilon(epsilon)?;
    let len = prefix.len();
    if schedule.len() < len {
        return Err(SummabilityError::OutOfRange(schedule.len() + 1));
    }
    let counts = violation_counts(prefix, center, epsilon);
    let densities = (1..=len)
        .map(|n| {
            let w = schedule.window(n)?;
            let count = counts[w.hi] - counts[w.lo - 1];
            Ok(count as f64 / schedule.lambda(n)?)
        })
        .collect::<Result<Vec<_>, SummabilityError>>()?;
    Ok(DensityProfile {
        epsilon,
        center,
        schedule_name: schedule.name().to_string(),
        densities,
    })
}

/// counts[k] = |{j ≤ k : |x_j − L| ≥ ε}|, counts[0] = 0.
fn violation_counts(prefix: &SequencePrefix, center: f64, epsilon: f64) -> Vec<usize> {
    let mut counts = Vec::with_capacity(prefix.len() + 1);
    counts.push(0usize);
    let mut running = 0usize;
    for &x in prefix.values() {
        if (x - center).abs() >= epsilon {
            running += 1;
        }
        counts.push(running);
    }
    counts
}

/// (1/h_r) |{k ∈ (k_{r−1}, k_r] : |x_k − L| ≥ ε}| for r = 1..R.
pub fn lacunary_density(
    prefix: &SequencePrefix,
    lacunary: &LacunarySchedule,
    center: f64,
    epsilon: f64,
) -> Result<Vec<f64>, SummabilityError> {
    check_epsilon(epsilon)?;
    if lacunary.span() > prefix.len() {
        return Err(SummabilityError::CutsExceedPrefix {
            span: lacunary.span(),
            len: prefix.len(),
        });
    }
    let counts = violation_counts(prefix, center, epsilon);
    (1..=lacunary.blocks())
        .map(|r| {
            let b = lacunary.block(r)?;
            Ok((counts[b.hi] - counts[b.lo - 1]) as f64 / b.len() as f64)
        })
        .collect()
}

/// y_n = (x_{n+1} − x_n) / λ_n for n = 1..N−1.
pub fn matrix_a_transform(
    prefix: &SequencePrefix,
    schedule: &LambdaSchedule,
) -> Result<SequencePrefix, SummabilityError> {
    if prefix.len() < 2 {
        return Err(SummabilityError::PrefixTooShort);
    }
    let out = prefix
        .values()
        .windows(2)
        .enumerate()
        .map(|(i, w)| Ok((w[1] - w[0]) / schedule.lambda(i + 1)?))
        .collect::<Result<Vec<_>, SummabilityError>>()?;
    SequencePrefix::new(out)
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

fn summarize(epsilon: f64, tail: &[f64]) -> TailEvidence {
    TailEvidence {
        epsilon,
        final_value: *tail.last().expect("tail is non-empty"),
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn verdict_from(evidence: &[TailEvidence], tolerance: f64) -> Verdict {
    if evidence.iter().all(|e| e.tail_max <= tolerance) {
        Verdict::ConvergedEvidence
    } else if evidence.iter().any(|e| e.tail_min >= 10.0 * tolerance) {
        Verdict::DivergedEvidence
    } else {
        Verdict::Inconclusive
    }
}

/// Per-ε tail series for `method` measured against a fixed center.
fn tail_series(
    prefix: &SequencePrefix,
    windowing: Windowing<'_>,
    method: Method,
    center: f64,
    epsilon: f64,
    config: &TailConfig,
) -> Result<Vec<f64>, SummabilityError> {
    let len = prefix.len();
    let tail = config.tail_len(len);
    let tail_start = len - tail + 1;
    let indicator = |x: f64| {
        if (x - center).abs() >= epsilon {
            1.0
        } else {
            0.0
        }
    };
    match (method, windowing) {
        (Method::Lim, _) => Ok(prefix.values()[tail_start - 1..]
            .iter()
            .map(|&x| indicator(x))
            .collect()),
        (Method::St, _) => {
            check_epsilon(epsilon)?;
            let counts = violation_counts(prefix, center, epsilon);
            Ok((tail_start..=len)
                .map(|n| counts[n] as f64 / n as f64)
                .collect())
        }
        (Method::SLambda, Windowing::Lambda(s)) => {
            let profile = lambda_density(prefix, s, center, epsilon)?;
            Ok(profile.densities[tail_start - 1..].to_vec())
        }
        (Method::STheta, Windowing::Lacunary(l)) => {
            let blocks = lacunary_density(prefix, l, center, epsilon)?;
            if blocks.is_empty() {
                return Err(SummabilityError::NoBlocks);
            }
            let tail = config.tail_len(blocks.len());
            Ok(blocks[blocks.len() - tail..].to_vec())
        }
        (Method::VLambdaStrong, Windowing::Lambda(s)) => (tail_start..=len)
            .map(|n| strong_residual(prefix, s, center, n))
            .collect(),
        (Method::VLambdaMean, Windowing::Lambda(s)) => (tail_start..=len)
            .map(|n| vp_mean(prefix, s, n).map(indicator))
            .collect(),
        (Method::STheta, Windowing::Lambda(_)) => Err(SummabilityError::NeedsLacunary(method)),
        (_, Windowing::Lacunary(_)) => Err(SummabilityError::NeedsLambda(method)),
    }
}

/// Tail evidence and verdict for a given candidate limit.
pub fn assess_limit(
    prefix: &SequencePrefix,
    windowing: Windowing<'_>,
    method: Method,
    center: f64,
    config: &TailConfig,
) -> Result<ConvergenceReport, SummabilityError> {
    config.validate()?;
    let mut evidence = Vec::with_capacity(config.epsilon_grid.len());
    let mut tail_len = 0;
    for &epsilon in &config.epsilon_grid {
        let series = tail_series(prefix, windowing, method, center, epsilon, config)?;
        tail_len = series.len();
        evidence.push(summarize(epsilon, &series));
    }
    Ok(ConvergenceReport {
        method,
        candidate_limit: center,
        epsilon_grid: config.epsilon_grid.clone(),
        tail_fraction: config.tail_fraction,
        tolerance: config.tolerance,
        tail_len,
        verdict: verdict_from(&evidence, config.tolerance),
        tail_densities: evidence,
    })
}

/// Picks a candidate limit for `method` and assesses it.
///
/// Mean-type methods use t_N; statistical-type methods use the median of the
/// final window: I_N for S_LAMBDA, the last block for S_THETA, and the last
/// ⌈tail_fraction·N⌉ terms for LIM and ST.
pub fn estimate_limit(
    prefix: &SequencePrefix,
    windowing: Windowing<'_>,
    method: Method,
    config: &TailConfig,
) -> Result<ConvergenceReport, SummabilityError> {
    config.validate()?;
    let len = prefix.len();
    let candidate = match (method, windowing) {
        (Method::VLambdaStrong | Method::VLambdaMean, Windowing::Lambda(s)) => {
            vp_mean(prefix, s, len)?
        }
        (Method::SLambda, Windowing::Lambda(s)) => {
            check_index(prefix, s, len)?;
            median(prefix.window_slice(s.window(len)?))
        }
        (Method::STheta, Windowing::Lacunary(l)) => {
            if l.blocks() == 0 {
                return Err(SummabilityError::NoBlocks);
            }
            if l.span() > len {
                return Err(SummabilityError::CutsExceedPrefix {
                    span: l.span(),
                    len,
                });
            }
            median(prefix.window_slice(l.block(l.blocks())?))
        }
        (Method::Lim | Method::St, _) => {
            let tail = config.tail_len(len);
            median(&prefix.values()[len - tail..])
        }
        (Method::STheta, Windowing::Lambda(_)) => {
            return Err(SummabilityError::NeedsLacunary(method))
        }
        (_, Windowing::Lacunary(_)) => return Err(SummabilityError::NeedsLambda(method)),
    };
    assess_limit(prefix, windowing, method, candidate, config)
}
