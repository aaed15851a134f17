//! Command-line surface for `lamstat`: argument model, dispatch and reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lamstat::generators::{self, GeneratorError, SimulationResult};
use lamstat::io::{self, InputError, InputFormat};
use lamstat::probe::{self, Family, FunctionKind, FunctionSpec, ModulusPoint, ProbeError};
use lamstat::quasicauchy::{qc_profile, QcConfig, QcDiagnostic, QcVerdict};
use lamstat::schedules::{LacunarySchedule, LambdaSchedule, ScheduleError};
use lamstat::summability::{
    estimate_limit, ConvergenceReport, Method, SequencePrefix, SummabilityError, TailConfig,
    Verdict, Windowing,
};
use lamstat::{Domain, EmbeddingResult, WitnessReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TOOL: &str = "lamstat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// When set and `--out` is absent, reports go to `$LAMSTAT_OUT_DIR/<command>.json`.
pub const OUT_DIR_ENV: &str = "LAMSTAT_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INCONCLUSIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Summability(#[from] SummabilityError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

/// Summability diagnostics on finite sequence prefixes.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "lamstat", version)]
pub struct RunConfig {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with status 1 when the verdict is INCONCLUSIVE.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Validate and describe a λ-schedule or lacunary schedule.
    Schedule(ScheduleArgs),
    /// Estimate a limit under one summability method.
    Analyze(AnalyzeArgs),
    /// Classify a prefix as quasi-Cauchy / λ-statistically quasi-Cauchy.
    Qc(QcArgs),
    /// Construct a test sequence.
    Generate(GenerateArgs),
    /// Run one of the group-splitting processes.
    Simulate(SimulateArgs),
    /// Search for non-uniform-continuity witnesses or test ward preservation.
    Probe(ProbeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Schedule(_) => "schedule",
            Command::Analyze(_) => "analyze",
            Command::Qc(_) => "qc",
            Command::Generate(_) => "generate",
            Command::Simulate(_) => "simulate",
            Command::Probe(_) => "probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InputArgs {
    /// Sequence file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: InputFormat,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScheduleSelect {
    /// Built-in id (identity, floor-sqrt, log2) or a CSV file of λ values.
    #[arg(long, default_value = "identity")]
    pub schedule: String,
    /// The schedule file starts with a header line.
    #[arg(long)]
    pub schedule_header: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub select: ScheduleSelect,
    /// Length of built-in schedules.
    #[arg(long, default_value_t = 100)]
    pub n_max: usize,
    /// Describe lacunary cuts instead: `pow2` or a comma list such as 0,2,4,8.
    #[arg(long)]
    pub theta: Option<String>,
    /// Regularity margin for lacunary cuts.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TailArgs {
    /// Comma-separated ε grid.
    #[arg(long, default_value = "0.5,0.1,0.02")]
    pub eps: String,
    /// Density tolerance.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Fraction of trailing indices inspected.
    #[arg(long, default_value_t = 0.2)]
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub select: ScheduleSelect,
    /// Lacunary cuts for S_THETA: `pow2` or a comma list.
    #[arg(long)]
    pub theta: Option<String>,
    /// LIM, ST, S_THETA, S_LAMBDA, V_LAMBDA_STRONG or V_LAMBDA_MEAN.
    #[arg(long, default_value = "S_LAMBDA")]
    pub method: String,
    #[command(flatten)]
    pub tail: TailArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QcArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub select: ScheduleSelect,
    #[command(flatten)]
    pub tail: TailArgs,
    /// Step tolerance for ordinary quasi-Cauchy evidence.
    #[arg(long, default_value_t = 0.05)]
    pub step_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenFamily {
    /// Running means of bits from --input, or of --n-max seeded random bits.
    BitAverage,
    /// (x_1, x0, x_2, x0, ...) from --input and --x0.
    Interleave,
    /// Pairs `xi,eta` from --input joined into one quasi-Cauchy sequence.
    PairEmbedding,
    /// x_n = √n.
    Sqrt,
    /// Unit jumps after each perfect-square index.
    JumpSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Report,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub family: GenFamily,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: InputFormat,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Anchor value for `interleave`.
    #[arg(long, default_value_t = 0.0)]
    pub x0: f64,
    /// `csv` writes bare values, one per line.
    #[arg(long, value_enum, default_value = "report")]
    pub emit: Emit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    /// Everyone picks someone else; picked people leave. Estimates p_n.
    #[value(alias = "survivor")]
    Example1,
    /// Everyone picks one of three subgroups; singletons leave. Estimates t_n.
    #[value(alias = "three-split")]
    Example2,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub process: Process,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report exact p_n for n ≤ 8 (example1 only).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WardFamily {
    BitAverages,
    Walks,
    Sqrt,
    Input,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    /// identity, square, reciprocal, sin, abs, affine:a,b or table:<csv path>.
    #[arg(long = "fn")]
    pub function: String,
    /// Closed interval `a,b`; defaults to the table range for table functions.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub eps0: f64,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    /// Comma-separated δ values for a modulus-of-continuity table.
    #[arg(long)]
    pub modulus: Option<String>,
    /// Sampling step for the modulus table.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    /// Run a ward-preservation test on this family instead of the witness search.
    #[arg(long, value_enum)]
    pub ward: Option<WardFamily>,
    /// Declared Lipschitz constant for the domination check.
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Prefixes per generated ward family.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Prefix length for ward families.
    #[arg(long, default_value_t = 1000)]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sequence file for `--ward input`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: InputFormat,
    #[command(flatten)]
    pub select: ScheduleSelect,
    /// ε grid for ward tests (default 0.5,0.1,0.02) or for the witness image (default ε₀/2).
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub lambda: Option<LambdaSchedule>,
    pub lacunary: Option<LacunarySchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSequence {
    pub family: GenFamily,
    pub sequence: SequencePrefix,
    pub embedding: Option<EmbeddingResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPayload {
    pub process: Process,
    pub monte_carlo: SimulationResult,
    pub exact: Option<SimulationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePayload {
    pub witness: Option<WitnessReport>,
    pub ward: Option<probe::WardReport>,
    pub modulus: Option<Vec<ModulusPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Payload {
    Schedule(ScheduleSummary),
    Convergence(ConvergenceReport),
    Qc(QcDiagnostic),
    Sequence(GeneratedSequence),
    Simulation(SimulationPayload),
    Probe(ProbePayload),
    Error(ErrorPayload),
}

/// One run's output document. Everything except `wall_time_seconds` is a
/// function of the configuration; comparisons between runs zero that field
/// first (see [`Report::normalized`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub payload: Payload,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Copy with the wall-time field zeroed.
    pub fn normalized(&self) -> Self {
        Self {
            wall_time_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn payload_json(&self) -> String {
        serde_json::to_string_pretty(&self.payload).expect("payloads serialize")
    }
}

pub fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

fn parse_domain(raw: &str) -> Result<Domain, CliError> {
    match parse_list(raw, "domain")?.as_slice() {
        [a, b] => Ok(Domain::new(*a, *b)?),
        _ => Err(CliError::Usage("--domain expects `a,b`".into())),
    }
}

fn parse_theta(raw: &str, len: usize, margin: f64) -> Result<LacunarySchedule, CliError> {
    if raw.trim() == "pow2" {
        return Ok(LacunarySchedule::doubling(len));
    }
    let cuts = raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad --theta entry `{t}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LacunarySchedule::validate(cuts, margin)?)
}

fn resolve_schedule(select: &ScheduleSelect, len: usize) -> Result<LambdaSchedule, CliError> {
    let id = select.schedule.trim();
    if LambdaSchedule::BUILTIN_IDS.contains(&id) || !Path::new(id).exists() {
        return Ok(LambdaSchedule::builtin(id, len)?);
    }
    Ok(io::parse_schedule_file(id, select.schedule_header)?)
}

fn tail_config(args: &TailArgs) -> Result<TailConfig, CliError> {
    let cfg = TailConfig {
        epsilon_grid: parse_list(&args.eps, "--eps")?,
        tail_fraction: args.tail,
        tolerance: args.tol,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_function(raw: &str, domain: Option<&str>) -> Result<FunctionSpec, CliError> {
    if let Some(path) = raw.strip_prefix("table:") {
        let table = io::parse_table_file(path)?;
        return match domain {
            Some(d) => Ok(FunctionSpec::new(table.kind, parse_domain(d)?)?),
            None => Ok(table),
        };
    }
    let kind: FunctionKind = raw.parse()?;
    let domain = domain.ok_or_else(|| CliError::Usage("--domain is required".into()))?;
    Ok(FunctionSpec::new(kind, parse_domain(domain)?)?)
}

fn run_schedule(args: &ScheduleArgs) -> Result<Payload, CliError> {
    let summary = match &args.theta {
        Some(theta) => ScheduleSummary {
            lambda: None,
            lacunary: Some(parse_theta(theta, args.n_max, args.margin)?),
        },
        None => ScheduleSummary {
            lambda: Some(resolve_schedule(&args.select, args.n_max)?),
            lacunary: None,
        },
    };
    Ok(Payload::Schedule(summary))
}

fn run_analyze(args: &AnalyzeArgs) -> Result<Payload, CliError> {
    let x = io::parse_sequence_file(&args.input.input, args.input.format)?;
    let method: Method = args.method.parse().map_err(CliError::Usage)?;
    let cfg = tail_config(&args.tail)?;
    let report = if method == Method::STheta {
        let theta = args.theta.as_deref().unwrap_or("pow2");
        let lac = parse_theta(theta, x.len(), 0.0)?;
        estimate_limit(&x, Windowing::Lacunary(&lac), method, &cfg)?
    } else {
        let schedule = resolve_schedule(&args.select, x.len())?;
        estimate_limit(&x, Windowing::Lambda(&schedule), method, &cfg)?
    };
    Ok(Payload::Convergence(report))
}

fn run_qc(args: &QcArgs) -> Result<Payload, CliError> {
    let x = io::parse_sequence_file(&args.input.input, args.input.format)?;
    let schedule = resolve_schedule(&args.select, x.len())?;
    let tail = tail_config(&args.tail)?;
    let cfg = QcConfig {
        epsilon_grid: tail.epsilon_grid,
        tail_fraction: tail.tail_fraction,
        step_tolerance: args.step_tol,
        density_tolerance: tail.tolerance,
    };
    Ok(Payload::Qc(qc_profile(&x, &schedule, &cfg)?))
}

fn require_input(input: &Option<PathBuf>, family: &str) -> Result<PathBuf, CliError> {
    input
        .clone()
        .ok_or_else(|| CliError::Usage(format!("{family} needs --input")))
}

fn run_generate(args: &GenerateArgs) -> Result<GeneratedSequence, CliError> {
    let mut embedding = None;
    let sequence = match args.family {
        GenFamily::BitAverage => {
            let bits = match &args.input {
                Some(path) => io::parse_bits_str(&io::read_text(path)?)?,
                None => generators::random_bits(args.n_max, args.seed, 0),
            };
            generators::gen_bit_average(&bits)?
        }
        GenFamily::Interleave => {
            let path = require_input(&args.input, "interleave")?;
            let x = io::parse_sequence_file(path, args.format)?;
            generators::gen_interleave(&x, args.x0)?
        }
        GenFamily::PairEmbedding => {
            let path = require_input(&args.input, "pair-embedding")?;
            let pairs = io::parse_pairs_str(&io::read_text(path)?)?;
            let e = generators::gen_pair_embedding(&pairs)?;
            let seq = e.sequence.clone();
            embedding = Some(e);
            seq
        }
        GenFamily::Sqrt => generators::gen_sqrt(args.n_max)?,
        GenFamily::JumpSquares => generators::gen_jump_at_squares(args.n_max)?,
    };
    Ok(GeneratedSequence {
        family: args.family,
        sequence,
        embedding,
    })
}

fn run_simulate(args: &SimulateArgs) -> Result<Payload, CliError> {
    let (monte_carlo, exact) = match args.process {
        Process::Example1 => {
            let mc = generators::simulate_survivor(args.n_max, args.trials, args.seed)?;
            let exact = if args.exact {
                Some(generators::exact_survivor_table(
                    args.n_max.min(generators::EXACT_SURVIVOR_CAP),
                )?)
            } else {
                None
            };
            (mc, exact)
        }
        Process::Example2 => {
            if args.exact {
                return Err(CliError::Usage(
                    "--exact is only available for example1".into(),
                ));
            }
            (
                generators::simulate_three_split(args.n_max, args.trials, args.seed)?,
                None,
            )
        }
    };
    Ok(Payload::Simulation(SimulationPayload {
        process: args.process,
        monte_carlo,
        exact,
    }))
}

fn run_probe(args: &ProbeArgs) -> Result<Payload, CliError> {
    let f = resolve_function(&args.function, args.domain.as_deref())?;
    let modulus = match &args.modulus {
        Some(raw) => Some(probe::modulus_estimate(
            &f,
            &parse_list(raw, "--modulus")?,
            args.grid_step,
        )?),
        None => None,
    };
    let (witness, ward) = match args.ward {
        None => {
            let mut cfg = probe::WitnessConfig::for_epsilon0(args.eps0);
            if let Some(raw) = &args.eps {
                cfg.image_qc.epsilon_grid = parse_list(raw, "--eps")?;
            }
            (
                Some(probe::find_nonuniform_witness(
                    &f, args.eps0, args.n_max, &cfg,
                )?),
                None,
            )
        }
        Some(kind) => {
            let family = match kind {
                WardFamily::BitAverages => Family::BitAverages {
                    count: args.count,
                    len: args.len,
                    seed: args.seed,
                },
                WardFamily::Walks => Family::ShrinkingWalks {
                    count: args.count,
                    len: args.len,
                    lo: f.domain.lo,
                    hi: f.domain.hi,
                    seed: args.seed,
                },
                WardFamily::Sqrt => Family::Sqrt {
                    len: args.len,
                    offset: 0.0,
                },
                WardFamily::Input => {
                    let path = require_input(&args.input, "--ward input")?;
                    Family::Explicit {
                        prefixes: vec![io::parse_sequence_file(path, args.format)?],
                    }
                }
            };
            let prefixes = family.generate()?;
            let longest = prefixes.iter().map(SequencePrefix::len).max().unwrap_or(1);
            let schedule = resolve_schedule(&args.select, longest)?;
            let mut cfg = QcConfig::default();
            if let Some(raw) = &args.eps {
                cfg.epsilon_grid = parse_list(raw, "--eps")?;
            }
            (
                None,
                Some(probe::ward_preservation_test(
                    &f,
                    &Family::Explicit { prefixes },
                    &schedule,
                    &cfg,
                    args.lipschitz,
                )?),
            )
        }
    };
    Ok(Payload::Probe(ProbePayload {
        witness,
        ward,
        modulus,
    }))
}

/// Output of one invocation: the report, the exit status and, for
/// `generate --emit csv`, the bare CSV body to write instead of the report.
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
    pub csv: Option<String>,
}

fn inconclusive(payload: &Payload) -> bool {
    match payload {
        Payload::Convergence(r) => r.verdict == Verdict::Inconclusive,
        Payload::Qc(d) => d.verdict == QcVerdict::Inconclusive,
        _ => false,
    }
}

pub fn run(config: &RunConfig) -> Outcome {
    let start = Instant::now();
    let mut csv = None;
    let result = match &config.command {
        Command::Schedule(a) => run_schedule(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Qc(a) => run_qc(a),
        Command::Generate(a) => run_generate(a).map(|g| {
            if a.emit == Emit::Csv {
                let body: String = g
                    .sequence
                    .values()
                    .iter()
                    .map(|v| format!("{v}\n"))
                    .collect();
                csv = Some(body);
            }
            Payload::Sequence(g)
        }),
        Command::Simulate(a) => run_simulate(a),
        Command::Probe(a) => run_probe(a),
    };
    let (payload, exit_code) = match result {
        Ok(p) => {
            let code = if config.strict && inconclusive(&p) {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            (p, code)
        }
        Err(e) => (
            Payload::Error(ErrorPayload {
                message: e.to_string(),
            }),
            EXIT_INPUT,
        ),
    };
    Outcome {
        report: Report {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: config.command.name().to_string(),
            config: config.clone(),
            payload,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        },
        exit_code,
        csv,
    }
}

/// Where the report goes: `--out`, else `$LAMSTAT_OUT_DIR/<command>.json`, else stdout.
pub fn output_path(config: &RunConfig) -> Option<PathBuf> {
    config.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .map(|dir| PathBuf::from(dir).join(format!("{}.json", config.command.name())))
    })
}

pub fn write_output(config: &RunConfig, body: &str) -> Result<(), CliError> {
    match output_path(config) {
        Some(path) => std::fs::write(&path, body).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
