//! Command-line front end: instance generation, sampling, counting,
//! enumeration and the uniformity benchmark, all over DIMACS CNF files.
//!
//! Every command that writes a primary output can also record a
//! [`RunManifest`] capturing the full invocation, the input digest and
//! wall-clock timing. Primary outputs themselves carry no timestamps, so
//! a rerun with the same arguments reproduces them byte for byte (with
//! any `--jobs` value); the manifest is the one place times belong.
//!
//! Exit codes: 0 for success (an unsatisfiable input is an answer, not a
//! failure), 1 for usage or input errors, 2 when an enumeration cap was
//! exceeded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use satsampler::baselines::{BoltzmannParams, HybridParams};
use satsampler::cnf::{parse_dimacs, serialize_dimacs, Formula, VariableOrdering};
use satsampler::counter::{estimate_count, exact_count_enumerate, EnumerationOutcome};
use satsampler::evaluate::{run_evaluation, EvaluateError, SamplerChoice};
use satsampler::instances;
use satsampler::oracle::{CdclFactory, CdclOracle};
use satsampler::rng::run_seed;
use satsampler::sampler::{draw_samples, SamplerConfig};

/// Version of the JSON output shapes, shipped as `schemas/*.schema.json`.
pub const SCHEMA_VERSION: u32 = 1;

pub fn version_string() -> String {
    format!("{} (schemas v{})", env!("CARGO_PKG_VERSION"), SCHEMA_VERSION)
}

#[derive(Debug, Parser)]
#[command(
    name = "satsampler",
    about = "Near-uniform SAT solution sampling, model counting and uniformity benchmarks",
    version = version_string()
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark instance as DIMACS CNF.
    Gen(GenArgs),
    /// Draw solution samples with the search-tree sampler (JSONL).
    Sample(SampleArgs),
    /// Estimate the model count from per-level descendant statistics.
    Count(CountArgs),
    /// Enumerate the full solution set by solve-and-block.
    Enumerate(EnumerateArgs),
    /// Benchmark a sampler's uniformity with the chi-squared test.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub family: GenFamily,
}

#[derive(Debug, Args)]
pub struct GenIo {
    /// Write the DIMACS here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a run manifest at this path (default: "<out>.manifest.json"
    /// when --out is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenFamily {
    /// Two solutions hidden behind a flat energy-1 region.
    Plateau {
        /// Number of plateau variables.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        b: u32,
        #[command(flatten)]
        io: GenIo,
    },
    /// Two solutions separated by a single-flip energy barrier.
    Xorbarrier {
        /// Number of variables tied to the barrier variable.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        b: u32,
        #[command(flatten)]
        io: GenIo,
    },
    /// Barrier with 2^l solutions on one side and a single one opposite.
    Asymxor {
        /// Barrier width.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        b: u32,
        /// Number of free cluster variables.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        l: u32,
        #[command(flatten)]
        io: GenIo,
    },
    /// Conjoin a barrier onto an existing formula, preserving its count.
    Embed {
        /// Input DIMACS file.
        #[arg(long)]
        cnf: PathBuf,
        /// Barrier width.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        b: u32,
        /// Variable to embed on (default: the most solution-balanced one).
        #[arg(long)]
        z: Option<u32>,
        /// Enumeration cap for the automatic balanced-variable choice.
        #[arg(long, default_value_t = 100_000)]
        enum_cap: usize,
        #[command(flatten)]
        io: GenIo,
    },
    /// Uniform random 3-SAT.
    Rand3sat {
        /// Number of variables.
        #[arg(long, value_parser = clap::value_parser!(u32).range(3..))]
        n: u32,
        /// Number of clauses.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        m: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        io: GenIo,
    },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Input DIMACS file.
    #[arg(long)]
    pub cnf: PathBuf,
    /// Pseudosolutions kept per level.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Variables fixed per level step (M = 2^level-bits).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub level_bits: u32,
    /// Pool exactly this many samples across runs (default: k, one run).
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the output is identical for any value.
    #[arg(long, default_value_t = 1, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub jobs: usize,
    /// Write sample records (JSONL) here instead of stdout; the summary
    /// then goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a run manifest at this path (default: "<out>.manifest.json"
    /// when --out is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Input DIMACS file.
    #[arg(long)]
    pub cnf: PathBuf,
    /// Pseudosolutions kept per level.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Independent sampling runs pooled into the estimate.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Variables fixed per level step (M = 2^level-bits).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub level_bits: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the output is identical for any value.
    #[arg(long, default_value_t = 1, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub jobs: usize,
    /// Write the estimate JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a run manifest at this path (default: "<out>.manifest.json"
    /// when --out is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Input DIMACS file.
    #[arg(long)]
    pub cnf: PathBuf,
    /// Stop after this many solutions and report the cap as exceeded.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max: u64,
    /// Write the solution list JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a run manifest at this path (default: "<out>.manifest.json"
    /// when --out is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerKind {
    /// Level-wise search-tree sampler.
    Sts,
    /// Fixed-temperature Metropolis chain with rejection.
    Sa,
    /// Gibbs chain with rejection.
    Gibbs,
    /// WalkSAT/Metropolis hybrid with restarts.
    Hybrid,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Input DIMACS file.
    #[arg(long)]
    pub cnf: PathBuf,
    #[arg(long, value_enum)]
    pub sampler: SamplerKind,
    /// Sample pool size P.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    /// Pseudosolutions kept per level (sts).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// Variables fixed per level step (sts).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub level_bits: u32,
    /// Chain temperature (sa, gibbs, hybrid).
    #[arg(long, default_value_t = 0.5)]
    pub temp: f64,
    /// Steps discarded before recording (sa, gibbs).
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Steps between recorded states (sa, gibbs; default 10n).
    #[arg(long)]
    pub thinning: Option<u64>,
    /// Total chain step budget.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Probability of a focused clause move (hybrid).
    #[arg(long)]
    pub walk_prob: Option<f64>,
    /// Random-vs-greedy mix inside focused moves (hybrid).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Forced restart interval in steps (hybrid; default 100n).
    #[arg(long)]
    pub restart_every: Option<u64>,
    /// Refuse instances with more solutions than this.
    #[arg(long, default_value_t = 100_000)]
    pub enum_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the output is identical for any value.
    #[arg(long, default_value_t = 1, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub jobs: usize,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a run manifest at this path (default: "<out>.manifest.json"
    /// when --out is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// One JSONL record of the sample stream.
#[derive(Debug, Serialize)]
pub struct SampleRecord {
    /// Assignment as a 0/1 string in variable-index order.
    pub bits: String,
}

/// Machine summary printed after sampling.
#[derive(Debug, Serialize)]
pub struct SampleSummary {
    pub satisfiable: bool,
    pub samples: u64,
    pub runs: u64,
    pub k: u64,
    pub level_bits: u32,
    pub seed: u64,
    pub oracle_calls: u64,
}

/// Enumeration result: the full solution set, or a capped prefix.
#[derive(Debug, Serialize)]
pub struct EnumerateOutput {
    /// Exact solution count; null when the cap was exceeded.
    pub count: Option<u64>,
    pub exceeded: bool,
    /// Solutions as 0/1 strings, canonically sorted.
    pub solutions: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to replay one invocation byte-identically: the
/// argument vector, the input digest and all derived randomness, plus the
/// wall-clock bracket (which is why times live here and not in outputs).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub input: Option<InputDigest>,
    /// First per-run seeds derived from `seed`, for replay cross-checks.
    pub sub_seeds: Vec<String>,
    pub tool_version: String,
    pub schema_version: u32,
    pub started_at: String,
    pub finished_at: String,
    pub runtime_seconds: f64,
}

struct ManifestRecorder {
    command: String,
    params: serde_json::Value,
    seed: Option<u64>,
    input: Option<InputDigest>,
    sub_seeds: Vec<String>,
    started_at: String,
    t0: Instant,
}

fn now_rfc3339() -> String {
    OffsetDateTime::now_utc()
        .format(&Rfc3339)
        .unwrap_or_else(|_| "unknown".to_string())
}

impl ManifestRecorder {
    fn start(command: &str, params: serde_json::Value, seed: Option<u64>) -> ManifestRecorder {
        ManifestRecorder {
            command: command.to_string(),
            params,
            seed,
            input: None,
            sub_seeds: Vec::new(),
            started_at: now_rfc3339(),
            t0: Instant::now(),
        }
    }

    fn with_input(mut self, path: &Path, bytes: &[u8]) -> ManifestRecorder {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.input = Some(InputDigest {
            path: path.display().to_string(),
            sha256,
        });
        self
    }

    fn with_sub_seeds(mut self, seed: u64, runs: u64) -> ManifestRecorder {
        self.sub_seeds = (0..runs.min(8))
            .map(|i| format!("{:#018x}", run_seed(seed, i)))
            .collect();
        self
    }

    fn write(self, path: Option<&Path>) -> Result<()> {
        let Some(path) = path else { return Ok(()) };
        let manifest = RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            params: self.params,
            seed: self.seed,
            input: self.input,
            sub_seeds: self.sub_seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            started_at: self.started_at,
            finished_at: now_rfc3339(),
            runtime_seconds: self.t0.elapsed().as_secs_f64(),
        };
        let text = to_json_line(&manifest)?;
        fs::write(path, text)
            .with_context(|| format!("writing manifest {}", path.display()))
    }
}

fn manifest_path(explicit: &Option<PathBuf>, out: &Option<PathBuf>) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        out.as_ref()
            .map(|p| PathBuf::from(format!("{}.manifest.json", p.display())))
    })
}

fn read_formula(path: &Path) -> Result<(Formula, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes)
        .with_context(|| format!("{} is not UTF-8", path.display()))?;
    let formula =
        parse_dimacs(text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((formula, bytes))
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout()
                .write_all(text.as_bytes())
                .context("writing to stdout")
        }
    }
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).context("serializing output")?;
    text.push('\n');
    Ok(text)
}

/// Executes a parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Count(args) => cmd_count(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let (formula, io_args, recorder) = match args.family {
        GenFamily::Plateau { b, io } => {
            let rec =
                ManifestRecorder::start("gen plateau", serde_json::json!({ "b": b }), None);
            (instances::gen_plateau(b), io, rec)
        }
        GenFamily::Xorbarrier { b, io } => {
            let rec = ManifestRecorder::start(
                "gen xorbarrier",
                serde_json::json!({ "b": b }),
                None,
            );
            (instances::gen_xor_barrier(b), io, rec)
        }
        GenFamily::Asymxor { b, l, io } => {
            let rec = ManifestRecorder::start(
                "gen asymxor",
                serde_json::json!({ "b": b, "l": l }),
                None,
            );
            (instances::gen_asym_xor_barrier(b, l), io, rec)
        }
        GenFamily::Embed {
            cnf,
            b,
            z,
            enum_cap,
            io,
        } => {
            let (base, bytes) = read_formula(&cnf)?;
            let z = match z {
                Some(z) => z,
                None => instances::select_balanced_variable(&base, enum_cap)
                    .context("choosing a balanced variable")?,
            };
            let embedded = instances::embed_barrier(&base, z, b)
                .context("embedding the barrier")?;
            let rec = ManifestRecorder::start(
                "gen embed",
                serde_json::json!({ "b": b, "z": z, "enum_cap": enum_cap }),
                None,
            )
            .with_input(&cnf, &bytes);
            (embedded, io, rec)
        }
        GenFamily::Rand3sat { n, m, seed, io } => {
            let rec = ManifestRecorder::start(
                "gen rand3sat",
                serde_json::json!({ "n": n, "m": m, "seed": seed }),
                Some(seed),
            );
            (instances::gen_rand3sat(n, m, seed), io, rec)
        }
    };
    emit(&serialize_dimacs(&formula), &io_args.out)?;
    recorder.write(manifest_path(&io_args.manifest, &io_args.out).as_deref())?;
    Ok(0)
}

fn cmd_sample(args: SampleArgs) -> Result<u8> {
    let (formula, bytes) = read_formula(&args.cnf)?;
    let cfg = SamplerConfig {
        k: args.k,
        level_bits: args.level_bits,
        seed: args.seed,
        ordering: None,
        record_level_stats: false,
    };
    let target = args.samples.unwrap_or(args.k);
    let factory = CdclFactory::new(formula.clone(), None);
    let mut outcome = draw_samples(&formula, &cfg, target, &factory, args.jobs)?;
    outcome.samples.truncate(target as usize);

    let ordering = VariableOrdering::identity(formula.num_vars());
    let mut lines = String::new();
    for assignment in &outcome.samples {
        lines.push_str(&serde_json::to_string(&SampleRecord {
            bits: assignment.bitstring(&ordering),
        })?);
        lines.push('\n');
    }
    emit(&lines, &args.out)?;

    let summary = SampleSummary {
        satisfiable: outcome.satisfiable,
        samples: outcome.samples.len() as u64,
        runs: outcome.runs,
        k: args.k,
        level_bits: args.level_bits,
        seed: args.seed,
        oracle_calls: outcome.total_calls,
    };
    let summary_text = to_json_line(&summary)?;
    if args.out.is_some() {
        io::stdout().write_all(summary_text.as_bytes())?;
    } else {
        io::stderr().write_all(summary_text.as_bytes())?;
    }

    ManifestRecorder::start(
        "sample",
        serde_json::json!({
            "cnf": args.cnf.display().to_string(),
            "k": args.k,
            "level_bits": args.level_bits,
            "samples": target,
            "seed": args.seed,
            "jobs": args.jobs,
        }),
        Some(args.seed),
    )
    .with_input(&args.cnf, &bytes)
    .with_sub_seeds(args.seed, outcome.runs)
    .write(manifest_path(&args.manifest, &args.out).as_deref())?;
    Ok(0)
}

fn cmd_count(args: CountArgs) -> Result<u8> {
    let (formula, bytes) = read_formula(&args.cnf)?;
    let cfg = SamplerConfig {
        k: args.k,
        level_bits: args.level_bits,
        seed: args.seed,
        ordering: None,
        record_level_stats: true,
    };
    let factory = CdclFactory::new(formula.clone(), None);
    let estimate = estimate_count(&formula, &cfg, args.runs, &factory, args.jobs)?;
    emit(&to_json_line(&estimate)?, &args.out)?;

    ManifestRecorder::start(
        "count",
        serde_json::json!({
            "cnf": args.cnf.display().to_string(),
            "k": args.k,
            "runs": args.runs,
            "level_bits": args.level_bits,
            "seed": args.seed,
            "jobs": args.jobs,
        }),
        Some(args.seed),
    )
    .with_input(&args.cnf, &bytes)
    .with_sub_seeds(args.seed, args.runs)
    .write(manifest_path(&args.manifest, &args.out).as_deref())?;
    Ok(0)
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<u8> {
    let (formula, bytes) = read_formula(&args.cnf)?;
    let mut oracle = CdclOracle::new(&formula, 0, None);
    let outcome = exact_count_enumerate(&formula, &mut oracle, args.max as usize)?;
    let (count, exceeded, mut solutions) = match outcome {
        EnumerationOutcome::Complete { solutions } => {
            (Some(solutions.len() as u64), false, solutions)
        }
        EnumerationOutcome::Exceeded { solutions } => (None, true, solutions),
    };
    solutions.sort();
    let ordering = VariableOrdering::identity(formula.num_vars());
    let output = EnumerateOutput {
        count,
        exceeded,
        solutions: solutions.iter().map(|s| s.bitstring(&ordering)).collect(),
    };
    emit(&to_json_line(&output)?, &args.out)?;

    ManifestRecorder::start(
        "enumerate",
        serde_json::json!({
            "cnf": args.cnf.display().to_string(),
            "max": args.max,
        }),
        None,
    )
    .with_input(&args.cnf, &bytes)
    .write(manifest_path(&args.manifest, &args.out).as_deref())?;

    if exceeded {
        eprintln!(
            "solution cap {} exceeded; the list is a witness prefix, not S_F",
            args.max
        );
        return Ok(2);
    }
    Ok(0)
}

/// Builds the harness sampler selection from the CLI knobs.
fn sampler_choice(args: &EvaluateArgs, formula: &Formula) -> SamplerChoice {
    match args.sampler {
        SamplerKind::Sts => SamplerChoice::SearchTree {
            cfg: SamplerConfig {
                k: args.k,
                level_bits: args.level_bits,
                seed: args.seed,
                ordering: None,
                record_level_stats: false,
            },
        },
        SamplerKind::Sa | SamplerKind::Gibbs => {
            let mut params = BoltzmannParams::for_formula(args.temp, formula);
            if let Some(burn_in) = args.burn_in {
                params.burn_in = burn_in;
            }
            if let Some(thinning) = args.thinning {
                params.thinning = thinning;
            }
            if let Some(max_steps) = args.max_steps {
                params.max_steps = max_steps;
            }
            if args.sampler == SamplerKind::Sa {
                SamplerChoice::Sa {
                    params,
                    seed: args.seed,
                }
            } else {
                SamplerChoice::Gibbs {
                    params,
                    seed: args.seed,
                }
            }
        }
        SamplerKind::Hybrid => {
            let mut params = HybridParams::defaults(formula);
            params.temperature = args.temp;
            if let Some(walk_prob) = args.walk_prob {
                params.walk_prob = walk_prob;
            }
            if let Some(noise) = args.noise {
                params.noise = noise;
            }
            if let Some(restart_every) = args.restart_every {
                params.restart_every = restart_every;
            }
            if let Some(max_steps) = args.max_steps {
                params.max_steps = max_steps;
            }
            SamplerChoice::Hybrid {
                params,
                seed: args.seed,
            }
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<u8> {
    let (formula, bytes) = read_formula(&args.cnf)?;
    let choice = sampler_choice(&args, &formula);
    let report = match run_evaluation(&formula, &choice, args.samples, args.enum_cap, args.jobs)
    {
        Ok(report) => report,
        Err(EvaluateError::EnumerationExceeded { cap }) => {
            eprintln!("solution enumeration exceeded the cap of {cap}; raise --enum-cap or pick a smaller instance");
            return Ok(2);
        }
        Err(err) => return Err(err.into()),
    };
    emit(&to_json_line(&report)?, &args.out)?;

    ManifestRecorder::start(
        "evaluate",
        serde_json::json!({
            "cnf": args.cnf.display().to_string(),
            "sampler": report.sampler,
            "samples": args.samples,
            "k": args.k,
            "level_bits": args.level_bits,
            "temp": args.temp,
            "enum_cap": args.enum_cap,
            "seed": args.seed,
            "jobs": args.jobs,
        }),
        Some(args.seed),
    )
    .with_input(&args.cnf, &bytes)
    .write(manifest_path(&args.manifest, &args.out).as_deref())?;
    Ok(0)
}
