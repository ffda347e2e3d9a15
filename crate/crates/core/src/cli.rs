//! Command-line driver: argument parsing, run configs and output files.
//!
//! Every command resolves a [`RunConfig`] (defaults, then an optional TOML
//! file, then flags), writes it next to its output as `<out>.config.toml` and
//! embeds its hash and the dictionary hash in the output itself.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::benchmark::{run_benchmark, BenchmarkConfig, BenchmarkResult, ClassifierChoice};
use crate::binarize::{self, DEFAULT_TEMPERATURE};
use crate::classifier::SoftmaxConfig;
use crate::clips::ClipMode;
use crate::dictionary::{
    build_vandermonde, dictionary_from_text, dictionary_to_text, generate_dictionary, DictionaryParams,
    DictionaryScheme, PoleDictionary,
};
use crate::error::{invalid, Error, Result};
use crate::invariance::{verify_invariance, InvarianceReport, Regime, VerifyConfig};
use crate::linalg;
use crate::pipeline::{check_threads, learn_dictionary, mix_seed, sha256_hex, write_atomic, Encoder, GateConfig, LearnConfig};
use crate::solver::SolverConfig;
use crate::trajectory::{load_skeletons, SkeletonFormat, SkeletonSequence};

pub const CONFIG_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "DYNPOSE_THREADS";

/// Columns of the benchmark metrics CSV, in order.
pub const METRICS_COLUMNS: [&str; 5] = ["class", "total", "correct", "accuracy", "predicted_as_top"];

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub command: String,
    /// SHA-256 of the input skeleton file, for commands that read one.
    pub input_hash: Option<String>,
    pub dictionary: DictionaryParams,
    pub solver: SolverConfig,
    pub gate: GateConfig,
    pub verify: VerifyConfig,
    pub benchmark: BenchmarkConfig,
    pub learn: LearnConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            command: String::new(),
            input_hash: None,
            dictionary: DictionaryParams::default(),
            solver: SolverConfig::default(),
            gate: GateConfig::default(),
            verify: VerifyConfig::default(),
            benchmark: BenchmarkConfig::default(),
            learn: LearnConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::Parse(format!("unsupported config version {}", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Hex SHA-256 of the TOML form.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "dynpose", version, about = "Pole-support features for skeleton trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a pole dictionary file.
    GenDict(GenDictArgs),
    /// Sparse-code every joint trajectory of a skeleton file.
    Encode(EncodeArgs),
    /// Run the seeded invariance harness.
    Verify(VerifyArgs),
    /// Run the synthetic cross-view benchmark.
    Benchmark(BenchmarkArgs),
    /// Refine a dictionary on a skeleton file by alternating minimization.
    LearnDict(LearnArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoderArgs {
    /// Dictionary file; default is generated from the config.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub reweight_rounds: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Threshold gate with this relative cut.
    #[arg(long, conflicts_with = "gumbel_alpha")]
    pub tau_rel: Option<f64>,
    /// Gumbel gate with this prior on-probability.
    #[arg(long)]
    pub gumbel_alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Grid,
    SeededRandom,
}

#[derive(Debug, Args)]
pub struct GenDictArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub real_poles: Option<usize>,
    #[arg(long)]
    pub magnitude_min: Option<f64>,
    #[arg(long)]
    pub magnitude_max: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for SkeletonFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => SkeletonFormat::Json,
            FormatArg::Csv => SkeletonFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub coder: CoderArgs,
    /// Skeleton file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Identity,
    Delay,
    Affine,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub coder: CoderArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Multi,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Knn,
    Softmax,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub coder: CoderArgs,
    /// Per-class metrics CSV; default `<out>.csv`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub clips_n: Option<usize>,
    #[arg(long)]
    pub clip_t: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub classes: Option<usize>,
    /// Samples per class and view.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierArg>,
    /// Neighbours for the k-NN classifier.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub coder: CoderArgs,
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

/// Parses arguments, runs the command with the configured worker cap and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_with_threads(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn run_with_threads(command: Command) -> Result<()> {
    let threads = check_threads(threads_from_env()?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| run(command))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenDict(a) => cmd_gen_dict(&a),
        Command::Encode(a) => cmd_encode(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::LearnDict(a) => cmd_learn_dict(&a),
    }
}

fn base_config(common: &CommonArgs, command: &str) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_toml(&read_text(p)?)?,
        None => RunConfig::default(),
    };
    cfg.command = command.to_owned();
    if let Some(s) = common.seed {
        cfg.dictionary.seed = s;
        cfg.verify.seed = s;
        cfg.benchmark.benchmark.seed = s;
        if let GateConfig::Gumbel { seed, .. } = &mut cfg.gate {
            *seed = s;
        }
    }
    Ok(cfg)
}

fn apply_coder(cfg: &mut RunConfig, coder: &CoderArgs, seed: Option<u64>) {
    if let Some(l) = coder.lambda {
        cfg.solver.lambda = l;
    }
    if let Some(r) = coder.reweight_rounds {
        cfg.solver.reweight_rounds = r;
    }
    if let Some(m) = coder.max_iterations {
        cfg.solver.max_iterations = m;
    }
    if let Some(tau_rel) = coder.tau_rel {
        let floor = match cfg.gate {
            GateConfig::Threshold { floor, .. } => floor,
            GateConfig::Gumbel { .. } => binarize::DEFAULT_FLOOR,
        };
        cfg.gate = GateConfig::Threshold { tau_rel, floor };
    }
    if let Some(alpha) = coder.gumbel_alpha {
        let (temperature, s) = match cfg.gate {
            GateConfig::Gumbel { temperature, seed, .. } => (temperature, seed),
            GateConfig::Threshold { .. } => (DEFAULT_TEMPERATURE, 0),
        };
        cfg.gate = GateConfig::Gumbel { temperature, alpha, seed: seed.unwrap_or(s) };
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_dictionary(path: Option<&Path>, cfg: &RunConfig) -> Result<PoleDictionary> {
    match path {
        Some(p) => dictionary_from_text(&read_text(p)?),
        None => generate_dictionary(&cfg.dictionary),
    }
}

fn load_input(path: &Path, format: Option<FormatArg>, cfg: &mut RunConfig) -> Result<Vec<SkeletonSequence>> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    cfg.input_hash = Some(sha256_hex(&bytes));
    let format = match format {
        Some(f) => f.into(),
        None => SkeletonFormat::from_path(path),
    };
    load_skeletons(path, format)
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<out>.config.toml` and returns the config hash.
fn write_config(out: &Path, cfg: &RunConfig) -> Result<String> {
    let text = cfg.to_toml()?;
    write_atomic(&sidecar(out, ".config.toml"), text.as_bytes())?;
    Ok(sha256_hex(text.as_bytes()))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Parse(format!("json: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

pub fn cmd_gen_dict(args: &GenDictArgs) -> Result<()> {
    let mut cfg = base_config(&args.common, "gen-dict")?;
    let p = &mut cfg.dictionary;
    if let Some(n) = args.pairs {
        p.pair_count = n;
    }
    if let Some(n) = args.real_poles {
        p.real_pole_count = n;
    }
    if let Some(lo) = args.magnitude_min {
        p.magnitude_range.0 = lo;
    }
    if let Some(hi) = args.magnitude_max {
        p.magnitude_range.1 = hi;
    }
    if let Some(s) = args.scheme {
        p.scheme = match s {
            SchemeArg::Grid => DictionaryScheme::Grid,
            SchemeArg::SeededRandom => DictionaryScheme::SeededRandom,
        };
    }
    if args.no_normalize {
        p.normalize_columns = false;
    }
    let dict = generate_dictionary(&cfg.dictionary)?;
    let hash = write_config(&args.common.out, &cfg)?;
    let text = format!("# config {hash}\n{}", dictionary_to_text(&dict));
    write_atomic(&args.common.out, text.as_bytes())
}

/// One joint's code in the `encode` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCode {
    pub joint: usize,
    pub name: Option<String>,
    /// Atoms with a coefficient above the support floor.
    pub support: Vec<usize>,
    /// Pole indices set in the union of the per-dimension binary codes.
    pub active_poles: Vec<usize>,
    /// Hex binary code per dimension.
    pub bits: Vec<String>,
    /// `N × D`, in the column-normalized basis when the dictionary normalizes.
    pub coefficients: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    /// `‖Y − P C‖²` for the stored coefficients.
    pub residual_sq: f64,
    /// Solver objective `‖Y − P C‖² + λ Σ W∘|C|`.
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceCode {
    pub index: usize,
    pub label: Option<u32>,
    pub frames: usize,
    pub dims: usize,
    pub joints: Vec<JointCode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesFile {
    pub format: String,
    pub config_hash: String,
    pub dictionary_hash: String,
    pub lambda: f64,
    pub sequences: Vec<SequenceCode>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<()> {
    let mut cfg = base_config(&args.common, "encode")?;
    apply_coder(&mut cfg, &args.coder, args.common.seed);
    let dict = load_dictionary(args.coder.dict.as_deref(), &cfg)?;
    let seqs = load_input(&args.input, args.format, &mut cfg)?;
    let encoder = Encoder::new(dict.clone(), cfg.solver.clone(), cfg.gate)?;
    let hash = write_config(&args.common.out, &cfg)?;
    let mut sequences = Vec::with_capacity(seqs.len());
    for (index, seq) in seqs.iter().enumerate() {
        let p = build_vandermonde(&dict, seq.frames())?;
        let mut joints = Vec::with_capacity(seq.joints());
        for (j, code) in encoder.code_sequence(seq)?.into_iter().enumerate() {
            let bits = encoder.binary_columns(&code, mix_seed(index as u64, &[j as u64]))?;
            let mut active: Vec<usize> = bits.iter().flat_map(|b| b.ones()).collect();
            active.sort_unstable();
            active.dedup();
            let r = &seq.joint_trajectory(j) - &p.entries().dot(&code.coefficients);
            joints.push(JointCode {
                joint: j,
                name: seq.joint_names.as_ref().map(|n| n[j].clone()),
                support: code.support.clone(),
                active_poles: active,
                bits: bits.iter().map(|b| b.to_hex()).collect(),
                coefficients: rows(&code.coefficients),
                weights: rows(&code.weights),
                residual_sq: linalg::frobenius_sq(r.view()),
                objective_value: code.objective_value,
                iterations: code.iterations_used,
            });
        }
        sequences.push(SequenceCode { index, label: seq.label, frames: seq.frames(), dims: seq.dims(), joints });
    }
    let file = CodesFile {
        format: "dynpose-codes v1".into(),
        config_hash: hash,
        dictionary_hash: dict.content_hash().to_owned(),
        lambda: cfg.solver.lambda,
        sequences,
    };
    write_atomic(&args.common.out, &to_json(&file)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyFile {
    pub config_hash: String,
    pub dictionary_hash: String,
    #[serde(flatten)]
    pub report: InvarianceReport,
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let mut cfg = base_config(&args.common, "verify")?;
    apply_coder(&mut cfg, &args.coder, args.common.seed);
    if let Some(t) = args.trials {
        cfg.verify.trials = t;
    }
    if let Some(s) = args.noise_sigma {
        cfg.verify.noise_sigma = s;
    }
    if let Some(r) = args.regime {
        cfg.verify.regime = match r {
            RegimeArg::Identity => Regime::Identity,
            RegimeArg::Delay => Regime::Delay,
            RegimeArg::Affine => Regime::Affine,
        };
    }
    let dict = load_dictionary(args.coder.dict.as_deref(), &cfg)?;
    let report = verify_invariance(&dict, &cfg.solver, cfg.gate, &cfg.verify)?;
    let hash = write_config(&args.common.out, &cfg)?;
    let file = VerifyFile { config_hash: hash, dictionary_hash: dict.content_hash().to_owned(), report };
    write_atomic(&args.common.out, &to_json(&file)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkFile {
    pub config_hash: String,
    pub dictionary_hash: String,
    #[serde(flatten)]
    pub result: BenchmarkResult,
}

/// Per-class rows under [`METRICS_COLUMNS`], then an `all` row.
/// `predicted_as_top` is the most frequent prediction for the class.
pub fn metrics_csv(result: &BenchmarkResult) -> Result<String> {
    let ev = &result.evaluation;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(format!("csv: {e}"));
    w.write_record(METRICS_COLUMNS).map_err(csv_err)?;
    let mut correct_total = 0;
    for (c, row) in ev.confusion.iter().enumerate() {
        let total: usize = row.iter().sum();
        let correct = row.get(c).copied().unwrap_or(0);
        correct_total += correct;
        let acc = ev.per_class_accuracy.get(c).copied().flatten();
        let top = crate::clips::argmax(&row.iter().map(|&v| v as f64).collect::<Vec<_>>());
        w.write_record([
            c.to_string(),
            total.to_string(),
            correct.to_string(),
            acc.map_or(String::new(), fmt_f64),
            if total == 0 { String::new() } else { top.to_string() },
        ])
        .map_err(csv_err)?;
    }
    w.write_record(["all".into(), ev.total.to_string(), correct_total.to_string(), fmt_f64(ev.accuracy), String::new()])
        .map_err(csv_err)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{v:.16e}");
    s
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let mut cfg = base_config(&args.common, "benchmark")?;
    apply_coder(&mut cfg, &args.coder, args.common.seed);
    let b = &mut cfg.benchmark;
    if let Some(m) = args.mode {
        b.sampler.mode = match m {
            ModeArg::Multi => ClipMode::Multi,
            ModeArg::Single => ClipMode::Single,
        };
    }
    if let Some(n) = args.clips_n {
        b.sampler.clips_n = n;
    }
    if let Some(t) = args.clip_t {
        b.sampler.clip_t = t;
    }
    if let Some(s) = args.noise_sigma {
        b.benchmark.noise_sigma = s;
    }
    if let Some(c) = args.classes {
        b.benchmark.class_count = c;
    }
    if let Some(s) = args.samples {
        b.benchmark.samples_per_class_view = s;
    }
    match args.classifier {
        Some(ClassifierArg::Knn) => b.classifier = ClassifierChoice::Knn { k: args.k.unwrap_or(crate::classifier::DEFAULT_K) },
        Some(ClassifierArg::Softmax) if !matches!(b.classifier, ClassifierChoice::Softmax(_)) => {
            b.classifier = ClassifierChoice::Softmax(SoftmaxConfig::default());
        }
        _ => {}
    }
    if let (Some(k), ClassifierChoice::Knn { k: kk }) = (args.k, &mut b.classifier) {
        *kk = k;
    }
    let dict = load_dictionary(args.coder.dict.as_deref(), &cfg)?;
    let start = std::time::Instant::now();
    let result = run_benchmark(&dict, &cfg.solver, cfg.gate, &cfg.benchmark)?;
    eprintln!("benchmark: accuracy {} in {:.1?}", result.evaluation.accuracy, start.elapsed());
    let hash = write_config(&args.common.out, &cfg)?;
    let csv_path = args.csv.clone().unwrap_or_else(|| sidecar(&args.common.out, ".csv"));
    let csv_text = format!("# config {hash} dictionary {}\n{}", dict.content_hash(), metrics_csv(&result)?);
    write_atomic(&csv_path, csv_text.as_bytes())?;
    let file = BenchmarkFile { config_hash: hash, dictionary_hash: dict.content_hash().to_owned(), result };
    write_atomic(&args.common.out, &to_json(&file)?)
}

pub fn cmd_learn_dict(args: &LearnArgs) -> Result<()> {
    let mut cfg = base_config(&args.common, "learn-dict")?;
    apply_coder(&mut cfg, &args.coder, args.common.seed);
    if let Some(r) = args.rounds {
        cfg.learn.rounds = r;
    }
    if let Some(lr) = args.learning_rate {
        cfg.learn.learning_rate = lr;
    }
    let dict = load_dictionary(args.coder.dict.as_deref(), &cfg)?;
    let seqs = load_input(&args.input, args.format, &mut cfg)?;
    let tracks: Vec<Array2<f64>> = seqs
        .iter()
        .flat_map(|s| (0..s.joints()).map(move |j| s.joint_trajectory(j).to_owned()))
        .collect();
    let outcome = learn_dictionary(&dict, &tracks, &cfg.solver, &cfg.learn)?;
    let hash = write_config(&args.common.out, &cfg)?;
    let mut text = format!("# config {hash}\n# source {}\n", dict.content_hash());
    for (round, loss) in outcome.losses.iter().enumerate() {
        let _ = writeln!(text, "# loss {round} {}", fmt_f64(*loss));
    }
    text.push_str(&dictionary_to_text(&outcome.dictionary));
    write_atomic(&args.common.out, text.as_bytes())
}
