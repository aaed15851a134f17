//! Empirical probes for uniform continuity and ward-continuity preservation
//! of real functions on a closed interval.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{
    gen_bit_average, gen_interleave, gen_pair_embedding, random_bits, trial_rng,
};
use crate::generators::{EmbeddingResult, GeneratorError, Pair};
use crate::quasicauchy::{diff, qc_profile, QcConfig, QcDiagnostic, QcVerdict};
use crate::schedules::LambdaSchedule;
use crate::summability::{
    assess_limit, lambda_density, Method, SequencePrefix, SummabilityError, TailConfig, Verdict,
    Windowing,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("invalid domain [{0}, {1}]")]
    BadDomain(f64, f64),
    #[error("domain is narrower than the grid step")]
    DomainTooSmall,
    #[error("grid step {step} exceeds a quarter of the smallest δ ({min_delta})")]
    GridTooCoarse { step: f64, min_delta: f64 },
    #[error("grid is empty or has a non-positive entry")]
    BadGrid,
    #[error("{0} lies outside the function domain")]
    OutOfDomain(f64),
    #[error("f({0}) is not finite")]
    NonFinite(f64),
    #[error("generated point {index} ({value}) leaves the domain")]
    DomainViolation { index: usize, value: f64 },
    #[error("n_max must be at least 2")]
    NMaxTooSmall,
    #[error("table needs at least two points with strictly increasing x")]
    BadTable,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("Lipschitz constant must be positive")]
    BadLipschitz,
    #[error(transparent)]
    Sequence(#[from] SummabilityError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionKind {
    Identity,
    Square,
    Reciprocal,
    Sin,
    Abs,
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// Linear interpolation between (x, y) samples sorted by x.
    Table {
        points: Vec<(f64, f64)>,
    },
}

impl FromStr for FunctionKind {
    type Err = ProbeError;

    /// Parses `identity`, `square`, `reciprocal`, `sin`, `abs` or `affine:a,b`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "identity" => return Ok(FunctionKind::Identity),
            "square" => return Ok(FunctionKind::Square),
            "reciprocal" => return Ok(FunctionKind::Reciprocal),
            "sin" => return Ok(FunctionKind::Sin),
            "abs" => return Ok(FunctionKind::Abs),
            _ => {}
        }
        let unknown = || ProbeError::UnknownFunction(s.to_string());
        let args = s.strip_prefix("affine:").ok_or_else(unknown)?;
        let (a, b) = args.split_once(',').ok_or_else(unknown)?;
        let slope: f64 = a.trim().parse().map_err(|_| unknown())?;
        let intercept: f64 = b.trim().parse().map_err(|_| unknown())?;
        if !slope.is_finite() || !intercept.is_finite() {
            return Err(unknown());
        }
        Ok(FunctionKind::Affine { slope, intercept })
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionKind::Identity => f.write_str("identity"),
            FunctionKind::Square => f.write_str("square"),
            FunctionKind::Reciprocal => f.write_str("reciprocal"),
            FunctionKind::Sin => f.write_str("sin"),
            FunctionKind::Abs => f.write_str("abs"),
            FunctionKind::Affine { slope, intercept } => write!(f, "affine:{slope},{intercept}"),
            FunctionKind::Table { points } => write!(f, "table[{}]", points.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ProbeError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(ProbeError::BadDomain(lo, hi))
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub domain: Domain,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, domain: Domain) -> Result<Self, ProbeError> {
        if let FunctionKind::Table { points } = &kind {
            let sorted = points.windows(2).all(|w| w[0].0 < w[1].0);
            let finite = points.iter().all(|(x, y)| x.is_finite() && y.is_finite());
            if points.len() < 2 || !sorted || !finite {
                return Err(ProbeError::BadTable);
            }
            let (first, last) = (points[0].0, points[points.len() - 1].0);
            if domain.lo < first || domain.hi > last {
                return Err(ProbeError::BadDomain(domain.lo, domain.hi));
            }
        }
        Ok(Self { kind, domain })
    }

    /// A table function over its full x range.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self, ProbeError> {
        let (Some(first), Some(last)) = (points.first(), points.last()) else {
            return Err(ProbeError::BadTable);
        };
        let domain = Domain::new(first.0, last.0).map_err(|_| ProbeError::BadTable)?;
        Self::new(FunctionKind::Table { points }, domain)
    }

    pub fn eval(&self, x: f64) -> Result<f64, ProbeError> {
        if !self.domain.contains(x) {
            return Err(ProbeError::OutOfDomain(x));
        }
        let y = match &self.kind {
            FunctionKind::Identity => x,
            FunctionKind::Square => x * x,
            FunctionKind::Reciprocal => 1.0 / x,
            FunctionKind::Sin => x.sin(),
            FunctionKind::Abs => x.abs(),
            FunctionKind::Affine { slope, intercept } => slope * x + intercept,
            FunctionKind::Table { points } => interpolate(points, x),
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(ProbeError::NonFinite(x))
        }
    }

    /// f applied termwise; fails on the first point outside the domain.
    pub fn apply(&self, prefix: &SequencePrefix) -> Result<SequencePrefix, ProbeError> {
        let out = prefix
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if !self.domain.contains(x) {
                    return Err(ProbeError::DomainViolation {
                        index: i + 1,
                        value: x,
                    });
                }
                self.eval(x)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SequencePrefix::new(out)?)
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let i = points.partition_point(|p| p.0 <= x);
    if i == 0 {
        return points[0].1;
    }
    if i == points.len() {
        return points[i - 1].1;
    }
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
}

fn check_grid(grid: &[f64]) -> Result<f64, ProbeError> {
    if grid.is_empty() || grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(ProbeError::BadGrid);
    }
    Ok(grid.iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusPoint {
    pub delta: f64,
    pub omega: f64,
}

/// ω̂(δ) = max |f(x) − f(y)| over grid points with |x − y| ≤ δ.
///
/// The domain is sampled uniformly at a spacing no wider than `grid_step`; for
/// each δ a sliding max/min window over the samples gives the estimate. The
/// output is sorted by δ.
pub fn modulus_estimate(
    f: &FunctionSpec,
    delta_grid: &[f64],
    grid_step: f64,
) -> Result<Vec<ModulusPoint>, ProbeError> {
    let min_delta = check_grid(delta_grid)?;
    if !(grid_step > 0.0) || grid_step > min_delta / 4.0 {
        return Err(ProbeError::GridTooCoarse {
            step: grid_step,
            min_delta,
        });
    }
    let width = f.domain.width();
    if width < grid_step {
        return Err(ProbeError::DomainTooSmall);
    }
    let intervals = (width / grid_step).ceil() as usize;
    let spacing = width / intervals as f64;
    let samples = (0..=intervals)
        .map(|i| {
            let x = if i == intervals {
                f.domain.hi
            } else {
                f.domain.lo + i as f64 * spacing
            };
            f.eval(x)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut deltas = delta_grid.to_vec();
    deltas.sort_by(f64::total_cmp);
    Ok(deltas
        .into_iter()
        .map(|delta| {
            // Samples i and j are within δ when |i − j|·spacing ≤ δ.
            let span = ((delta / spacing) * (1.0 + 1e-12)).floor() as usize;
            ModulusPoint {
                delta,
                omega: sliding_range(&samples, span.min(intervals)),
            }
        })
        .collect())
}

/// max over i of (max − min) of samples[i..=i+span], via monotone deques.
fn sliding_range(samples: &[f64], span: usize) -> f64 {
    if span == 0 {
        return 0.0;
    }
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (j, &v) in samples.iter().enumerate() {
        while maxq.back().is_some_and(|&b| samples[b] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&b| samples[b] >= v) {
            minq.pop_back();
        }
        minq.push_back(j);
        let start = j.saturating_sub(span);
        while maxq.front().is_some_and(|&i| i < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < start) {
            minq.pop_front();
        }
        best = best.max(samples[maxq[0]] - samples[minq[0]]);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    /// Pair offsets are `gap_shrink / n`, just below the 1/n gap bound.
    pub gap_shrink: f64,
    /// Cap on anchors scanned per n; above it anchors are spaced coarser than the offset.
    pub max_anchors: usize,
    pub image_qc: QcConfig,
}

impl WitnessConfig {
    /// Defaults for a given ε₀: image Δ-densities are read at ε₀/2.
    pub fn for_epsilon0(epsilon0: f64) -> Self {
        Self {
            gap_shrink: 0.999,
            max_anchors: 200_000,
            image_qc: QcConfig {
                epsilon_grid: vec![epsilon0 / 2.0],
                ..QcConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    pub n: usize,
    pub xi: f64,
    pub eta: f64,
    /// |ξ − η|, strictly below 1/n.
    pub gap: f64,
    /// |f(ξ) − f(η)|, at least ε₀.
    pub image_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub function: String,
    pub domain: Domain,
    pub epsilon0: f64,
    pub n_max: usize,
    /// True iff a pair was found for every n ≤ n_max.
    pub found: bool,
    /// Smallest gap bound 1/n that was scanned.
    pub finest_gap: f64,
    pub first_missing: Option<usize>,
    pub pairs: Vec<WitnessPair>,
    pub embedded: Option<EmbeddingResult>,
    pub image_diagnostic: Option<QcDiagnostic>,
}

/// Best pair for gap bound 1/n: the largest |f(x) − f(x + h)| over anchors x,
/// with h = gap_shrink/n. Returns `None` when no pair reaches ε₀.
fn best_pair(
    f: &FunctionSpec,
    n: usize,
    epsilon0: f64,
    config: &WitnessConfig,
) -> Result<Option<WitnessPair>, ProbeError> {
    let Domain { lo, hi } = f.domain;
    let bound = 1.0 / n as f64;
    let offset = (config.gap_shrink * bound).min(f.domain.width());
    let reach = f.domain.width() - offset;
    let steps = ((reach / offset).ceil() as usize).clamp(1, config.max_anchors.max(1));
    let spacing = reach / steps as f64;

    let mut best: Option<WitnessPair> = None;
    for i in 0..=steps {
        let (x, y) = if i == steps {
            (hi - offset, hi)
        } else {
            let x = lo + i as f64 * spacing;
            (x, (x + offset).min(hi))
        };
        let gap = (y - x).abs();
        if !(gap < bound) {
            continue;
        }
        let image_gap = (f.eval(y)? - f.eval(x)?).abs();
        if image_gap >= epsilon0 && best.is_none_or(|b| image_gap > b.image_gap) {
            best = Some(WitnessPair {
                n,
                xi: x,
                eta: y,
                gap,
                image_gap,
            });
        }
    }
    Ok(best)
}

/// Looks for pairs |ξ_n − η_n| < 1/n with |f(ξ_n) − f(η_n)| ≥ ε₀ for each
/// n = 1..n_max. When every n has a pair, the pairs are embedded into one
/// quasi-Cauchy sequence and f is applied along it.
pub fn find_nonuniform_witness(
    f: &FunctionSpec,
    epsilon0: f64,
    n_max: usize,
    config: &WitnessConfig,
) -> Result<WitnessReport, ProbeError> {
    if n_max < 2 {
        return Err(ProbeError::NMaxTooSmall);
    }
    if !(epsilon0 > 0.0) {
        return Err(ProbeError::BadGrid);
    }
    let per_n = (1..=n_max)
        .into_par_iter()
        .map(|n| best_pair(f, n, epsilon0, config))
        .collect::<Result<Vec<_>, _>>()?;
    let first_missing = per_n.iter().position(Option::is_none).map(|i| i + 1);
    let pairs: Vec<WitnessPair> = per_n.into_iter().flatten().collect();
    let found = first_missing.is_none();

    let (embedded, image_diagnostic) = if found {
        let embedded = gen_pair_embedding(
            &pairs
                .iter()
                .map(|p| Pair {
                    xi: p.xi,
                    eta: p.eta,
                })
                .collect::<Vec<_>>(),
        )?;
        let image = f.apply(&embedded.sequence)?;
        let schedule = LambdaSchedule::identity(image.len());
        let diag = qc_profile(&image, &schedule, &config.image_qc)?;
        (Some(embedded), Some(diag))
    } else {
        (None, None)
    };

    Ok(WitnessReport {
        function: f.kind.to_string(),
        domain: f.domain,
        epsilon0,
        n_max,
        found,
        finest_gap: 1.0 / n_max as f64,
        first_missing,
        pairs,
        embedded,
        image_diagnostic,
    })
}

/// Families of test prefixes for the preservation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Running means of uniformly random bits.
    BitAverages {
        count: usize,
        len: usize,
        seed: u64,
    },
    /// x_1 uniform in [lo, hi], then steps uniform in ±(hi − lo)/(4k), reflected into [lo, hi].
    ShrinkingWalks {
        count: usize,
        len: usize,
        lo: f64,
        hi: f64,
        seed: u64,
    },
    /// x_n = √(offset + n).
    Sqrt {
        len: usize,
        offset: f64,
    },
    Explicit {
        prefixes: Vec<SequencePrefix>,
    },
}

impl Family {
    pub fn generate(&self) -> Result<Vec<SequencePrefix>, ProbeError> {
        match self {
            Family::BitAverages { count, len, seed } => (0..*count)
                .map(|i| Ok(gen_bit_average(&random_bits(*len, *seed, i as u64))?))
                .collect(),
            Family::ShrinkingWalks {
                count,
                len,
                lo,
                hi,
                seed,
            } => {
                let domain = Domain::new(*lo, *hi)?;
                (0..*count)
                    .map(|i| {
                        let mut rng = trial_rng(*seed, *len, i as u64);
                        let mut x = rng.gen_range(domain.lo..=domain.hi);
                        let mut out = Vec::with_capacity(*len);
                        for k in 1..=*len {
                            out.push(x);
                            let scale = domain.width() / (4.0 * k as f64);
                            x += rng.gen_range(-scale..=scale);
                            if x > domain.hi {
                                x = 2.0 * domain.hi - x;
                            }
                            if x < domain.lo {
                                x = 2.0 * domain.lo - x;
                            }
                            x = x.clamp(domain.lo, domain.hi);
                        }
                        Ok(SequencePrefix::new(out)?)
                    })
                    .collect()
            }
            Family::Sqrt { len, offset } => Ok(vec![SequencePrefix::from_fn(*len, |n| {
                (offset + n as f64).sqrt()
            })?]),
            Family::Explicit { prefixes } => Ok(prefixes.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPair {
    pub epsilon: f64,
    /// Input Δ-density at the last index.
    pub input: f64,
    /// Image Δ-density at the last index.
    pub image: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub lipschitz: f64,
    /// Number of (n, ε) comparisons made.
    pub checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardEntry {
    pub input: QcDiagnostic,
    pub image: QcDiagnostic,
    pub densities: Vec<DensityPair>,
    /// False when the input shows λ-quasi-Cauchy evidence and the image does not.
    pub preserved: bool,
    pub domination: Option<Domination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardReport {
    pub function: String,
    pub entries: Vec<WardEntry>,
    pub all_preserved: bool,
    pub all_dominated: Option<bool>,
}

/// Compares the quasi-Cauchy diagnostics of each generated x with those of
/// f∘x. With a declared Lipschitz constant K it also checks, at every n and
/// ε, that the image Δ-density at ε is at most the input Δ-density at ε/K.
pub fn ward_preservation_test(
    f: &FunctionSpec,
    family: &Family,
    schedule: &LambdaSchedule,
    config: &QcConfig,
    lipschitz: Option<f64>,
) -> Result<WardReport, ProbeError> {
    if lipschitz.is_some_and(|k| !(k > 0.0 && k.is_finite())) {
        return Err(ProbeError::BadLipschitz);
    }
    let prefixes = family.generate()?;
    let entries = prefixes
        .par_iter()
        .map(|x| ward_entry(f, x, schedule, config, lipschitz))
        .collect::<Result<Vec<_>, _>>()?;
    let all_preserved = entries.iter().all(|e| e.preserved);
    let all_dominated = lipschitz.map(|_| {
        entries
            .iter()
            .all(|e| e.domination.as_ref().is_some_and(|d| d.violations == 0))
    });
    Ok(WardReport {
        function: f.kind.to_string(),
        entries,
        all_preserved,
        all_dominated,
    })
}

fn ward_entry(
    f: &FunctionSpec,
    x: &SequencePrefix,
    schedule: &LambdaSchedule,
    config: &QcConfig,
    lipschitz: Option<f64>,
) -> Result<WardEntry, ProbeError> {
    let image = f.apply(x)?;
    let input_diag = qc_profile(x, schedule, config)?;
    let image_diag = qc_profile(&image, schedule, config)?;
    let densities = input_diag
        .delta_density_profiles
        .iter()
        .zip(&image_diag.delta_density_profiles)
        .map(|(a, b)| DensityPair {
            epsilon: a.epsilon,
            input: a.last(),
            image: b.last(),
        })
        .collect();

    let domination = match lipschitz {
        None => None,
        Some(k) => {
            let dx = diff(x)?;
            let mut checked = 0;
            let mut violations = 0;
            for img in &image_diag.delta_density_profiles {
                let scaled = lambda_density(&dx, schedule, 0.0, img.epsilon / k)?;
                for (a, b) in img.densities.iter().zip(&scaled.densities) {
                    checked += 1;
                    if a > b {
                        violations += 1;
                    }
                }
            }
            Some(Domination {
                lipschitz: k,
                checked,
                violations,
            })
        }
    };

    Ok(WardEntry {
        preserved: !input_diag.verdict.is_lambda_qc() || image_diag.verdict.is_lambda_qc(),
        input: input_diag,
        image: image_diag,
        densities,
        domination,
    })
}

/// Both readings of the anchor-interleaving argument: is x itself
/// λ-statistically convergent to x0, or only λ-statistically quasi-Cauchy?
/// Reports how the interleaved sequence and its image behave under each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleaveReport {
    pub anchor: f64,
    /// S_λ-evidence that x tends to x0.
    pub input_converges_to_anchor: Verdict,
    pub input_quasi_cauchy: QcVerdict,
    pub interleaved_quasi_cauchy: QcVerdict,
    pub image_interleaved_quasi_cauchy: QcVerdict,
    /// S_λ-evidence that f(x_n) tends to f(x0).
    pub image_converges_to_anchor: Verdict,
}

/// `schedule` must cover the interleaved length 2N.
pub fn anchor_interleave_probe(
    f: &FunctionSpec,
    x: &SequencePrefix,
    anchor: f64,
    schedule: &LambdaSchedule,
    qc: &QcConfig,
    tail: &TailConfig,
) -> Result<InterleaveReport, ProbeError> {
    let short = schedule
        .truncated(x.len())
        .map_err(SummabilityError::from)?;
    let inter = gen_interleave(x, anchor)?;
    let image_inter = f.apply(&inter)?;
    let image = f.apply(x)?;
    let f_anchor = f.eval(anchor)?;
    Ok(InterleaveReport {
        anchor,
        input_converges_to_anchor: assess_limit(
            x,
            Windowing::Lambda(&short),
            Method::SLambda,
            anchor,
            tail,
        )?
        .verdict,
        input_quasi_cauchy: qc_profile(x, &short, qc)?.verdict,
        interleaved_quasi_cauchy: qc_profile(&inter, schedule, qc)?.verdict,
        image_interleaved_quasi_cauchy: qc_profile(&image_inter, schedule, qc)?.verdict,
        image_converges_to_anchor: assess_limit(
            &image,
            Windowing::Lambda(&short),
            Method::SLambda,
            f_anchor,
            tail,
        )?
        .verdict,
    })
}
