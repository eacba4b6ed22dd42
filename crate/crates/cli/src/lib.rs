//! Command implementations behind the `gmr` binary.
//!
//! Every command writes machine output as JSON with an embedded
//! [`RunManifest`] and prints one human summary line to stdout.

use std::fs::{self, File};
use std::hash::Hasher;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gmr_core::baselines::SamplerId;
use gmr_core::cleaner::{self, CleaningConfig, CleaningReport};
use gmr_core::data::{self, CsvSchema, Dataset, SyntheticSpec};
use gmr_core::eval::{self, LabelModel, NamedDataset, NoiseModel, PosteriorShiftInput, VarianceSetup};
use gmr_core::{Epsilon, Metric, ResolvedMetric};

#[derive(Debug, Parser)]
#[command(
    name = "gmr",
    version,
    about = "Asymmetric geometric cleaning for imbalanced binary tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a CSV dataset and write the retained rows plus a report.
    Clean(CleanArgs),
    /// Write the per-row confidence table of a CSV dataset.
    Confidence(ConfidenceArgs),
    /// Compare samplers by kNN AUPRC over stratified splits.
    Bench(BenchArgs),
    /// Evaluate the posterior after class-conditional removal, or measure it on synthetic data.
    Posterior(PosteriorArgs),
    /// Compare inverse-distance and uniform neighbour averaging by simulation.
    Variance(VarianceArgs),
    /// Write a synthetic two-Gaussian dataset.
    Generate(GenerateArgs),
}

/// Cleaning hyperparameters shared by every command that cleans.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Neighbourhood size.
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    /// Majority rows with same-class confidence below this are removed.
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    /// Minority rows need majority confidence above this to be removal candidates.
    #[arg(long, default_value_t = 0.7)]
    pub beta: f64,
    /// Cap on minority removals as a fraction of the minority count.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Added to every neighbour distance before inverting.
    #[arg(long, default_value = "1e-8")]
    pub epsilon: f64,
    /// Distance metric.
    #[arg(long, value_enum, default_value = "auto")]
    pub metric: MetricArg,
    /// Feature dimension above which `auto` switches to cosine.
    #[arg(long, default_value_t = 100)]
    pub dim_threshold: usize,
    /// Cleaning is skipped when the minority class has fewer rows.
    #[arg(long, default_value_t = 10)]
    pub scarcity_floor: usize,
}

impl ConfigArgs {
    pub fn to_config(&self) -> Result<CleaningConfig, CliError> {
        let config = CleaningConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            epsilon: Epsilon::new(self.epsilon).map_err(|e| CliError::Usage(format!("--epsilon: {e}")))?,
            metric: self.metric.into(),
            dim_threshold: self.dim_threshold,
            scarcity_floor: self.scarcity_floor,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Auto,
    Euclidean,
    Cosine,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Auto => Metric::Auto,
            MetricArg::Euclidean => Metric::Euclidean,
            MetricArg::Cosine => Metric::Cosine,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    pub label_col: String,
    /// Raw label value to treat as the minority class (default: the less frequent one).
    #[arg(long)]
    pub minority_label: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Cleaned CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConfidenceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// JSON destination (manifest plus one entry per row).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional CSV copy of the table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// CSV datasets to evaluate.
    #[arg(long, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Label column shared by all inputs.
    #[arg(long, required_unless_present = "synthetic")]
    pub label_col: Option<String>,
    #[arg(long)]
    pub minority_label: Option<String>,
    /// Add this many seeded synthetic overlap datasets.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Base seed of the synthetic datasets.
    #[arg(long, default_value_t = 7)]
    pub synthetic_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "None,GMR,ENN,Tomek,RUS")]
    pub samplers: Vec<String>,
    /// Split seeds.
    #[arg(long, value_delimiter = ',', default_value = "42,0,1,2,3")]
    pub seeds: Vec<u64>,
    /// Neighbourhood size of the scoring classifier.
    #[arg(long, default_value_t = 15)]
    pub classifier_k: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// EvalResult JSON destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rank table CSV destination.
    #[arg(long)]
    pub ranks: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PosteriorArgs {
    /// Imbalance ratio |majority| / |minority|.
    #[arg(long, required_unless_present = "simulate")]
    pub ir: Option<f64>,
    /// Majority removal rate.
    #[arg(long, default_value_t = 0.0)]
    pub r0: f64,
    /// Minority removal rate.
    #[arg(long, default_value_t = 0.0)]
    pub r1: f64,
    /// Local majority posterior; requires --p1.
    #[arg(long, requires = "p1")]
    pub p0: Option<f64>,
    /// Local minority posterior; requires --p0.
    #[arg(long, requires = "p0")]
    pub p1: Option<f64>,
    /// Measure the shift on synthetic overlap data instead.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = 1000)]
    pub n_majority: usize,
    #[arg(long, default_value_t = 100)]
    pub n_minority: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Distance between class means in standard deviations.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 20)]
    pub n_seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelModelArg {
    NoisyPosterior,
    Bernoulli,
}

#[derive(Debug, Clone, Args)]
pub struct VarianceArgs {
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[arg(long, default_value_t = 50_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise variance at distance zero.
    #[arg(long, default_value_t = 0.01)]
    pub sigma0_sq: f64,
    /// Growth of the noise variance with distance.
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    /// Lipschitz bound on the posterior's deviation across the neighbourhood.
    #[arg(long, default_value_t = 0.1)]
    pub lipschitz: f64,
    /// True posterior at the query.
    #[arg(long, default_value_t = 0.5)]
    pub posterior: f64,
    #[arg(long, value_enum, default_value = "noisy-posterior")]
    pub labels: LabelModelArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1000)]
    pub n_majority: usize,
    #[arg(long, default_value_t = 100)]
    pub n_minority: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Distance between class means in standard deviations.
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest JSON destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Unreadable or invalid data, failed writes; exit code 1.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gmr_core::Error> for CliError {
    fn from(e: gmr_core::Error) -> Self {
        match e {
            gmr_core::Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Provenance block embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Option<CleaningConfig>,
    /// Metric in effect after resolving `auto`.
    pub metric: Option<ResolvedMetric>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    /// Seconds since the epoch from `SOURCE_DATE_EPOCH`; absent otherwise
    /// so repeated runs stay byte-identical.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub path: String,
    /// FNV-1a 64-bit hash of the file bytes, hex.
    pub fnv1a64: String,
}

impl RunManifest {
    fn new(command: &'static str) -> Self {
        Self {
            tool: "gmr",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: None,
            metric: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|v| v.trim().parse().ok()),
        }
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

fn digest_file(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        fnv1a64: digest_bytes(&bytes),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn flush(mut w: impl Write, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn load(input: &InputArgs) -> Result<(Dataset, CsvSchema, InputDigest), CliError> {
    let digest = digest_file(&input.input)?;
    let (data, schema) = data::load_csv(&input.input, &input.label_col, input.minority_label.as_deref())
        .map_err(|e| CliError::Data(format!("{}: {e}", input.input.display())))?;
    Ok((data, schema, digest))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Clean(a) => cmd_clean(&a),
        Command::Confidence(a) => cmd_confidence(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Posterior(a) => cmd_posterior(&a),
        Command::Variance(a) => cmd_variance(&a),
        Command::Generate(a) => cmd_generate(&a),
    }
}

#[derive(Serialize)]
struct CleanOutput<'a> {
    manifest: RunManifest,
    label_mapping: &'a gmr_core::LabelMapping,
    report: &'a CleaningReport,
}

pub fn cmd_clean(args: &CleanArgs) -> Result<(), CliError> {
    let config = args.config.to_config()?;
    let (data, schema, digest) = load(&args.input)?;
    let (cleaned, report) = cleaner::clean(&data, &config)?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        data::write_csv(&mut w, &cleaned, &schema)?;
        flush(w, path)?;
    }
    if let Some(path) = &args.report {
        let mut manifest = RunManifest::new("clean");
        manifest.config = Some(config);
        manifest.metric = Some(config.resolved_metric(data.n_features()));
        manifest.inputs.push(digest);
        write_json(
            path,
            &CleanOutput {
                manifest,
                label_mapping: &schema.mapping,
                report: &report,
            },
        )?;
    }
    println!("{}", report.summary_line());
    Ok(())
}

#[derive(Serialize)]
struct ConfidenceRow {
    row_id: u64,
    label: u8,
    #[serde(flatten)]
    confidence: gmr_core::confidence::Confidence,
}

#[derive(Serialize)]
struct ConfidenceOutput {
    manifest: RunManifest,
    rows: Vec<ConfidenceRow>,
}

pub fn cmd_confidence(args: &ConfidenceArgs) -> Result<(), CliError> {
    let config = args.config.to_config()?;
    let (data, _, digest) = load(&args.input)?;
    let (table, metric) = cleaner::confidence_table(&data, &config)?;
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        table.write_csv(&mut w, data.row_ids())?;
        flush(w, path)?;
    }
    let misclassified = (0..data.len())
        .filter(|&i| table.get(i).predicted != data.label(i))
        .count();
    if let Some(path) = &args.out {
        let mut manifest = RunManifest::new("confidence");
        manifest.config = Some(config);
        manifest.metric = Some(metric);
        manifest.inputs.push(digest);
        let rows = (0..data.len())
            .map(|i| ConfidenceRow {
                row_id: data.row_ids()[i],
                label: data.label(i),
                confidence: *table.get(i),
            })
            .collect();
        write_json(path, &ConfidenceOutput { manifest, rows })?;
    }
    println!(
        "confidence: {} rows, metric={}, k={}, misclassified by weighted vote={}",
        data.len(),
        metric.name(),
        config.k,
        misclassified
    );
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    manifest: RunManifest,
    result: &'a gmr_core::EvalResult,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = args.config.to_config()?;
    let samplers = args
        .samplers
        .iter()
        .map(|s| {
            s.parse::<SamplerId>()
                .map_err(|e| CliError::Usage(format!("--samplers: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if args.seeds.is_empty() {
        return Err(CliError::Usage("--seeds: at least one seed is required".into()));
    }
    if args.inputs.is_empty() && args.synthetic.unwrap_or(0) == 0 {
        return Err(CliError::Usage("give --inputs and/or --synthetic N".into()));
    }

    let mut manifest = RunManifest::new("bench");
    let mut datasets = Vec::new();
    for path in &args.inputs {
        let input = InputArgs {
            input: path.clone(),
            label_col: args.label_col.clone().unwrap_or_default(),
            minority_label: args.minority_label.clone(),
        };
        let (data, _, digest) = load(&input)?;
        let name = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        manifest.inputs.push(digest);
        datasets.push(NamedDataset::new(name, data));
    }
    if let Some(n) = args.synthetic {
        datasets.extend(eval::synthetic_suite(n, args.synthetic_seed)?);
    }

    let result = eval::run_benchmark(&datasets, &samplers, &args.seeds, &config, args.classifier_k)?;
    manifest.config = Some(config);
    manifest.seeds = args.seeds.clone();
    if let Some(path) = &args.out {
        write_json(
            path,
            &BenchOutput {
                manifest,
                result: &result,
            },
        )?;
    }
    if let Some(path) = &args.ranks {
        let mut w = create(path)?;
        result.write_rank_csv(&mut w)?;
        flush(w, path)?;
    }
    let ranks: Vec<String> = result
        .summary
        .iter()
        .map(|s| {
            let rank = s.avg_rank.map_or_else(|| "n/a".to_owned(), |r| format!("{r:.2}"));
            let auprc = s.mean_auprc.map_or_else(|| "n/a".to_owned(), |a| format!("{a:.4}"));
            format!("{}={rank} (AUPRC {auprc})", s.sampler)
        })
        .collect();
    println!(
        "bench: {} datasets x {} seeds; avg rank {}",
        result.datasets.len(),
        result.seeds.len(),
        ranks.join(", ")
    );
    Ok(())
}

#[derive(Serialize)]
struct PosteriorOutput {
    manifest: RunManifest,
    input: PosteriorShiftInput,
    uncleaned: f64,
    cleaned: f64,
}

#[derive(Serialize)]
struct ShiftOutput {
    manifest: RunManifest,
    spec: SyntheticSpec,
    summary: eval::PosteriorShiftSummary,
}

pub fn cmd_posterior(args: &PosteriorArgs) -> Result<(), CliError> {
    if args.simulate {
        let config = args.config.to_config()?;
        let spec = SyntheticSpec::separated(args.n_majority, args.n_minority, args.dim, args.separation, args.seed);
        let summary = eval::posterior_shift_experiment(&spec, &config, args.n_seeds)?;
        println!(
            "posterior shift over {} seeds: before={:.4} after={:.4} delta={:.4} control delta={:.4} positive={:.2} r0={:.4} r1={:.4}",
            summary.seeds.len(),
            summary.mean_before,
            summary.mean_after_gmr,
            summary.mean_delta_gmr,
            summary.mean_delta_control,
            summary.fraction_positive,
            summary.mean_r0,
            summary.mean_r1
        );
        if let Some(path) = &args.out {
            let mut manifest = RunManifest::new("posterior");
            manifest.config = Some(config);
            manifest.metric = Some(config.resolved_metric(args.dim));
            manifest.seeds = summary.seeds.iter().map(|s| s.seed).collect();
            write_json(
                path,
                &ShiftOutput {
                    manifest,
                    spec,
                    summary,
                },
            )?;
        }
        return Ok(());
    }

    let ir = args.ir.ok_or_else(|| CliError::Usage("--ir is required".into()))?;
    let input = PosteriorShiftInput {
        ir,
        r0: args.r0,
        r1: args.r1,
        local: args.p0.zip(args.p1),
    };
    let cleaned = eval::cleaned_posterior(&input)?;
    let uncleaned = match input.local {
        Some(_) => eval::cleaned_posterior(&PosteriorShiftInput {
            r0: 0.0,
            r1: 0.0,
            ..input
        })?,
        None => eval::uncleaned_posterior(ir),
    };
    println!("{cleaned:.3}");
    if let Some(path) = &args.out {
        write_json(
            path,
            &PosteriorOutput {
                manifest: RunManifest::new("posterior"),
                input,
                uncleaned,
                cleaned,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VarianceOutput {
    manifest: RunManifest,
    setup: VarianceSetup,
    result: eval::VarianceResult,
}

pub fn cmd_variance(args: &VarianceArgs) -> Result<(), CliError> {
    let noise = NoiseModel {
        sigma0_sq: args.sigma0_sq,
        lambda: args.lambda,
        lipschitz: args.lipschitz,
    };
    let mut setup = VarianceSetup::new(noise, args.k, args.trials, args.seed);
    setup.posterior = args.posterior;
    setup.labels = match args.labels {
        LabelModelArg::NoisyPosterior => LabelModel::NoisyPosterior,
        LabelModelArg::Bernoulli => LabelModel::Bernoulli,
    };
    let result = setup.run()?;
    println!(
        "variance: k={} trials={} mse_geometric={:.6e} mse_uniform={:.6e} k_eff={:.3}",
        result.k, result.n_trials, result.mse_geometric, result.mse_uniform, result.mean_k_eff
    );
    if let Some(path) = &args.out {
        let mut manifest = RunManifest::new("variance");
        manifest.seeds = vec![args.seed];
        write_json(
            path,
            &VarianceOutput {
                manifest,
                setup,
                result,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GenerateOutput {
    manifest: RunManifest,
    spec: SyntheticSpec,
    /// FNV-1a 64-bit hash of the CSV bytes.
    csv_fnv1a64: String,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let mut spec = SyntheticSpec::separated(args.n_majority, args.n_minority, args.dim, args.separation, args.seed);
    spec.std = args.std;
    // Means are in units of the standard deviation.
    spec.minority_mean.iter_mut().for_each(|m| *m *= args.std);
    let data = data::generate_overlap(&spec)?;
    let schema = CsvSchema {
        feature_names: (0..args.dim).map(|j| format!("x{j}")).collect(),
        label_column: "label".into(),
        mapping: gmr_core::LabelMapping {
            majority: "0".into(),
            minority: "1".into(),
        },
    };
    let mut bytes = Vec::new();
    data::write_csv(&mut bytes, &data, &schema)?;
    let digest = digest_bytes(&bytes);
    match &args.out {
        Some(path) => {
            fs::write(path, &bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Data(format!("cannot write stdout: {e}")))?,
    }
    if let Some(path) = &args.report {
        let mut manifest = RunManifest::new("generate");
        manifest.seeds = vec![args.seed];
        write_json(
            path,
            &GenerateOutput {
                manifest,
                spec,
                csv_fnv1a64: digest.clone(),
            },
        )?;
    }
    let summary = format!(
        "generate: {} majority + {} minority rows, dim {}, fnv1a64={digest}",
        args.n_majority, args.n_minority, args.dim
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}
