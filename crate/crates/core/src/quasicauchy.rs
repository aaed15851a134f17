//! Difference operator and quasi-Cauchy / λ-statistically quasi-Cauchy
//! classification of finite prefixes.

use serde::{Deserialize, Serialize};

use crate::schedules::LambdaSchedule;
use crate::summability::{lambda_density, DensityProfile, SequencePrefix, SummabilityError};

/// Δx_n = x_{n+1} − x_n for n = 1..N−1.
pub fn diff(prefix: &SequencePrefix) -> Result<SequencePrefix, SummabilityError> {
    if prefix.len() < 2 {
        return Err(SummabilityError::PrefixTooShort);
    }
    SequencePrefix::new(prefix.values().windows(2).map(|w| w[1] - w[0]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QcVerdict {
    /// Recent steps are uniformly small.
    QcEvidence,
    /// Steps are not uniformly small, but large steps have vanishing density.
    LambdaQcOnlyEvidence,
    Neither,
    Inconclusive,
}

impl QcVerdict {
    /// True for both kinds of λ-statistical quasi-Cauchy evidence.
    pub fn is_lambda_qc(self) -> bool {
        matches!(
            self,
            QcVerdict::QcEvidence | QcVerdict::LambdaQcOnlyEvidence
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcConfig {
    pub epsilon_grid: Vec<f64>,
    pub tail_fraction: f64,
    pub step_tolerance: f64,
    pub density_tolerance: f64,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self {
            epsilon_grid: vec![0.5, 0.1, 0.02],
            tail_fraction: 0.2,
            step_tolerance: 0.05,
            density_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcDiagnostic {
    /// Number of trailing steps inspected.
    pub tail_steps: usize,
    pub max_recent_step: f64,
    /// Δ-density profiles with L = 0, one per ε.
    pub delta_density_profiles: Vec<DensityProfile>,
    pub step_tolerance: f64,
    pub density_tolerance: f64,
    pub verdict: QcVerdict,
}

impl QcDiagnostic {
    /// Largest Δ-density over the tail, per ε.
    pub fn tail_max_densities(&self) -> Vec<(f64, f64)> {
        self.delta_density_profiles
            .iter()
            .map(|p| {
                let tail = &p.densities[p.densities.len() - self.tail_steps..];
                (p.epsilon, tail.iter().copied().fold(0.0, f64::max))
            })
            .collect()
    }
}

/// Classifies a prefix from the Δ-densities of `diff(prefix)` under `schedule`.
///
/// QC_EVIDENCE when the last ⌈tail_fraction·(N−1)⌉ steps are all within the
/// step tolerance; otherwise LAMBDA_QC_ONLY_EVIDENCE when every Δ-density over
/// that tail is within the density tolerance; NEITHER when for some ε the
/// Δ-density stays at or above ten times the tolerance across the tail.
pub fn qc_profile(
    prefix: &SequencePrefix,
    schedule: &LambdaSchedule,
    config: &QcConfig,
) -> Result<QcDiagnostic, SummabilityError> {
    if config.epsilon_grid.is_empty() {
        return Err(SummabilityError::EmptyGrid);
    }
    if !(config.tail_fraction > 0.0 && config.tail_fraction <= 1.0) {
        return Err(SummabilityError::BadTailFraction(config.tail_fraction));
    }
    let delta = diff(prefix)?;
    let steps = delta.len();
    let tail_steps = ((config.tail_fraction * steps as f64).ceil() as usize).clamp(1, steps);
    let tail_start = steps - tail_steps;

    let max_recent_step = delta.values()[tail_start..]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));

    let delta_density_profiles = config
        .epsilon_grid
        .iter()
        .map(|&eps| lambda_density(&delta, schedule, 0.0, eps))
        .collect::<Result<Vec<_>, _>>()?;

    let tail_extrema: Vec<(f64, f64)> = delta_density_profiles
        .iter()
        .map(|p| {
            let tail = &p.densities[tail_start..];
            (
                tail.iter().copied().fold(f64::INFINITY, f64::min),
                tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        })
        .collect();

    let tol = config.density_tolerance;
    let verdict = if max_recent_step <= config.step_tolerance {
        QcVerdict::QcEvidence
    } else if tail_extrema.iter().all(|&(_, hi)| hi <= tol) {
        QcVerdict::LambdaQcOnlyEvidence
    } else if tail_extrema.iter().any(|&(lo, _)| lo >= 10.0 * tol) {
        QcVerdict::Neither
    } else {
        QcVerdict::Inconclusive
    };

    Ok(QcDiagnostic {
        tail_steps,
        max_recent_step,
        delta_density_profiles,
        step_tolerance: config.step_tolerance,
        density_tolerance: config.density_tolerance,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> SequencePrefix {
        SequencePrefix::new(v.to_vec()).unwrap()
    }

    #[test]
    fn diff_examples() {
        assert_eq!(
            diff(&seq(&[1.0, 0.0, 2.0, 0.0])).unwrap().values(),
            &[-1.0, 2.0, -2.0]
        );
        assert_eq!(diff(&seq(&[3.0; 4])).unwrap().values(), &[0.0; 3]);
        let n = SequencePrefix::from_fn(6, |k| k as f64).unwrap();
        assert_eq!(diff(&n).unwrap().values(), &[1.0; 5]);
        assert_eq!(diff(&seq(&[1.0])), Err(SummabilityError::PrefixTooShort));
    }

    #[test]
    fn sqrt_is_qc() {
        let n = 10_000;
        let x = SequencePrefix::from_fn(n, |k| (k as f64).sqrt()).unwrap();
        let d = qc_profile(&x, &LambdaSchedule::identity(n), &QcConfig::default()).unwrap();
        assert_eq!(d.verdict, QcVerdict::QcEvidence);
        assert!(d.max_recent_step < 0.01);
    }

    #[test]
    fn jumps_at_squares_are_lambda_qc_only() {
        let n: usize = 10_000;
        let mut values = vec![0.0];
        for k in 1..n {
            let jump = if k.isqrt().pow(2) == k { 1.0 } else { 0.0 };
            values.push(values[k - 1] + jump);
        }
        let x = SequencePrefix::new(values).unwrap();
        let d = qc_profile(&x, &LambdaSchedule::identity(n), &QcConfig::default()).unwrap();
        assert_eq!(d.max_recent_step, 1.0);
        assert_eq!(d.verdict, QcVerdict::LambdaQcOnlyEvidence);
        // Oracle: Δ_k = 1 exactly at squares k, so the density over [1, m] is ⌊√m⌋/m.
        for p in &d.delta_density_profiles {
            for m in [1, 50, 99, 4_000, n - 1] {
                assert_eq!(p.at(m).unwrap(), m.isqrt() as f64 / m as f64);
            }
        }
    }

    #[test]
    fn unit_alternation_is_neither() {
        let x = SequencePrefix::from_fn(500, |k| (k % 2) as f64).unwrap();
        let d = qc_profile(&x, &LambdaSchedule::floor_sqrt(500), &QcConfig::default()).unwrap();
        assert_eq!(d.verdict, QcVerdict::Neither);
    }

    #[test]
    fn constant_shift_keeps_verdict() {
        let x = SequencePrefix::from_fn(300, |k| (k as f64).ln()).unwrap();
        let y = SequencePrefix::from_fn(300, |k| (k as f64).ln() + 17.0).unwrap();
        let s = LambdaSchedule::log2(300);
        let a = qc_profile(&x, &s, &QcConfig::default()).unwrap();
        let b = qc_profile(&y, &s, &QcConfig::default()).unwrap();
        assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn rejects_empty_grid() {
        let cfg = QcConfig {
            epsilon_grid: vec![],
            ..QcConfig::default()
        };
        assert_eq!(
            qc_profile(&seq(&[1.0, 2.0]), &LambdaSchedule::identity(2), &cfg),
            Err(SummabilityError::EmptyGrid)
        );
    }
}
