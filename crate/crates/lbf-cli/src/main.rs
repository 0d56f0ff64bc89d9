//! Command-line front end: dataset generation, complexity reports, classifier
//! selection and training, filter construction, and benchmark sweeps. Every
//! subcommand prints a JSON summary to stdout; files go where the flags say.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lbf::bloom::{optimal_k, size_for_target_fpr, BloomFilter};
use lbf::classifiers::{
    Classifier, ClassifierConfig, NnParams, RfParams, SvmParams, TrainedClassifier,
};
use lbf::complexity::complexity_report;
use lbf::datagen::{self, SynthConfig};
use lbf::dataset::LabeledDataset;
use lbf::filters::{
    build_adabf, build_lbf, build_slbf, empirical_fpr, query_time_ns, Filter, FilterArtifact,
    TimingConfig,
};
use lbf::harness::{
    self, effective_classifier_config, split_data, sweep, FilterVariant, GridSettings, SweepCell,
};
use lbf::metrics::{auc, auprc};
use lbf::model_select::{nested_cv, CvConfig};

#[derive(Parser)]
#[command(
    name = "lbf",
    version,
    about = "Learned Bloom filters: build, measure, and compare against the classic baseline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-feature dataset and write it as CSV
    GenData(GenDataArgs),
    /// Report classification-complexity measures of a dataset
    Complexity(ComplexityArgs),
    /// Rank a hyperparameter grid by nested cross-validation
    Cv(CvArgs),
    /// Train a classifier on the experiment split and save its encoding
    Train(TrainArgs),
    /// Build one filter at a target false positive rate and save it
    BuildFilter(BuildFilterArgs),
    /// Measure a saved filter on a dataset's query split
    Evaluate(EvaluateArgs),
    /// Run a batch of experiments from a JSON config into a CSV report
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Parabola steepness of the class boundary
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Fraction of keys with flipped labels (matched count of non-keys)
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Non-key to key ratio
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Number of keys
    #[arg(long, default_value_t = 10_000)]
    n1: usize,
    /// Per-coordinate variance
    #[arg(long, default_value_t = 5.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Input dataset: CSV with feature columns and a trailing 0/1 label
    /// column, or one k-mer per line with --kmers
    #[arg(long)]
    data: PathBuf,
    /// Require the 17-feature URL scheme
    #[arg(long)]
    url: bool,
    /// Treat the input as one k-mer per line (keys only)
    #[arg(long)]
    kmers: bool,
    /// With --kmers: how many uniform non-key k-mers to sample
    #[arg(long)]
    negatives: Option<usize>,
    /// With --kmers: seed for the negative sample
    #[arg(long, default_value_t = 0)]
    kmer_seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<LabeledDataset> {
        let path = &self.data;
        let loaded = if self.kmers {
            let negatives = self.negatives.context("--kmers requires --negatives")?;
            let keys = datagen::load_kmer_lines(path)?;
            if keys.is_empty() {
                bail!("no k-mers in {}", path.display());
            }
            let negs =
                datagen::sample_negative_kmers(keys[0].len(), negatives, &keys, self.kmer_seed)?;
            datagen::kmer_dataset(&keys, &negs)?
        } else if self.url {
            datagen::load_url_csv(path)?
        } else {
            datagen::load_csv(path)?
        };
        Ok(loaded)
    }
}

#[derive(Args)]
struct ClassifierArgs {
    /// Classifier family: svm, nn, or rf
    #[arg(long)]
    classifier: String,
    /// SVM regularization weight
    #[arg(long)]
    c: Option<f64>,
    /// Hidden layer widths, comma separated (nn)
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Learning rate (nn)
    #[arg(long)]
    lr: Option<f64>,
    /// Number of trees (rf)
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum leaf size (rf)
    #[arg(long)]
    delta: Option<usize>,
    /// Force cost-sensitive training even on balanced data
    #[arg(long)]
    cost_sensitive: bool,
}

impl ClassifierArgs {
    fn to_config(&self) -> Result<ClassifierConfig> {
        let config = match self.classifier.as_str() {
            "svm" => {
                let mut p = SvmParams::default();
                if let Some(c) = self.c {
                    p.c = c;
                }
                p.cost_sensitive = self.cost_sensitive;
                ClassifierConfig::Svm(p)
            }
            "nn" => {
                let mut p = NnParams::default();
                if let Some(hidden) = &self.hidden {
                    p.hidden = hidden.clone();
                }
                if let Some(lr) = self.lr {
                    p.lr = lr;
                }
                p.cost_sensitive = self.cost_sensitive;
                ClassifierConfig::Nn(p)
            }
            "rf" => {
                let mut p = RfParams::default();
                if let Some(trees) = self.trees {
                    p.trees = trees;
                }
                if let Some(delta) = self.delta {
                    p.delta = delta;
                }
                p.imbalance_aware = self.cost_sensitive;
                ClassifierConfig::Rf(p)
            }
            other => bail!("unknown classifier {other:?}; expected svm, nn, or rf"),
        };
        Ok(config)
    }
}

#[derive(Args)]
struct ComplexityArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long, default_value_t = 3)]
    outer_folds: usize,
    #[arg(long, default_value_t = 3)]
    inner_folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Split seed: keys plus a seed-chosen 30% of non-keys train the model
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the encoded model
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildFilterArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Encoded model from `train` (not needed for --variant bloom)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Filter variant: bf, lbf, slbf, or adabf
    #[arg(long)]
    variant: FilterVariant,
    /// Target false positive rate; sets the total bit budget
    #[arg(long)]
    target_fpr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the serialized filter
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Serialized filter from `build-filter`
    #[arg(long)]
    filter: PathBuf,
    /// Split seed; must match the one used to build the filter
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also measure the reject time
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 10_000)]
    min_queries: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON array of sweep cells ({"dataset": …, "experiment": …})
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Sidecar JSON path; defaults to the CSV path with a .json extension
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

fn print_json(value: serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let cfg = SynthConfig {
        a: args.a,
        r: args.r,
        rho: args.rho,
        n1: args.n1,
        gamma: args.gamma,
        seed: args.seed,
    };
    let data = datagen::generate(&cfg)?;
    datagen::write_csv(&data, &args.out)?;
    print_json(json!({
        "path": args.out,
        "rows": data.len(),
        "keys": data.n_positive(),
        "non_keys": data.n_negative(),
        "dim": data.dim(),
        "config": cfg,
    }))
}

fn complexity(args: ComplexityArgs) -> Result<()> {
    let data = args.data.load()?;
    let report = complexity_report(&data)?;
    print_json(json!({
        "rows": data.len(),
        "dim": data.dim(),
        "report": report,
    }))
}

fn cv(args: CvArgs) -> Result<()> {
    let data = args.data.load()?;
    let base = args.classifier.to_config()?;
    let base = effective_classifier_config(&base, data.imbalance_ratio());
    let grid = base.default_grid();
    let cfg = CvConfig {
        outer_folds: args.outer_folds,
        inner_folds: args.inner_folds,
        seed: args.seed,
    };
    let report = nested_cv(&data, &grid, &cfg)?;
    let candidates: Vec<String> = grid.iter().map(|c| c.describe()).collect();
    print_json(json!({
        "candidates": candidates,
        "report": report,
    }))
}

/// The training set every pipeline stage agrees on: all keys plus the
/// seed-chosen 30% of non-keys.
fn training_set(split: &harness::SplitData) -> Result<LabeledDataset> {
    let mut features = split.keys.clone();
    features.extend(split.train_non_keys.iter().cloned());
    let mut labels = vec![1u8; split.keys.len()];
    labels.extend(std::iter::repeat_n(0u8, split.train_non_keys.len()));
    Ok(LabeledDataset::new(
        features,
        labels,
        lbf::dataset::Provenance::Adhoc,
    )?)
}

fn train(args: TrainArgs) -> Result<()> {
    let data = args.data.load()?;
    let split = split_data(&data, args.seed)?;
    let train = training_set(&split)?;
    let config =
        effective_classifier_config(&args.classifier.to_config()?, train.imbalance_ratio());
    let model = config.train(&train, args.seed)?;
    std::fs::write(&args.out, model.encode())?;

    // Ranking quality over what the filter will face: stored keys against
    // held-out non-keys.
    let mut scores: Vec<f64> = split.keys.iter().map(|x| model.score(x)).collect();
    let mut labels = vec![1u8; split.keys.len()];
    scores.extend(split.query_non_keys.iter().map(|x| model.score(x)));
    labels.extend(std::iter::repeat_n(0u8, split.query_non_keys.len()));
    print_json(json!({
        "path": args.out,
        "classifier": config.describe(),
        "size_bits": model.size_bits(),
        "train_rows": train.len(),
        "auc": auc(&scores, &labels)?,
        "auprc": auprc(&scores, &labels)?,
    }))
}

fn build_filter(args: BuildFilterArgs) -> Result<()> {
    let data = args.data.load()?;
    let split = split_data(&data, args.seed)?;
    let n_keys = split.keys.len() as u64;
    let budget = size_for_target_fpr(n_keys, args.target_fpr)?;
    let grids = GridSettings::default();

    let artifact = match args.variant {
        FilterVariant::Bloom => FilterArtifact::Bloom(BloomFilter::build(
            &split.keys,
            budget,
            optimal_k(budget, n_keys),
            args.seed,
        )?),
        learned => {
            let path = args
                .model
                .as_ref()
                .context("learned variants need --model")?;
            let bytes = std::fs::read(path)
                .with_context(|| format!("cannot read model {}", path.display()))?;
            let model = TrainedClassifier::decode(&bytes)?;
            match learned {
                FilterVariant::Lbf => FilterArtifact::Lbf(build_lbf(
                    model,
                    &split.keys,
                    &split.train_non_keys,
                    budget,
                    grids.tau_count,
                    args.seed,
                )?),
                FilterVariant::Slbf => FilterArtifact::Slbf(build_slbf(
                    model,
                    &split.keys,
                    &split.train_non_keys,
                    budget,
                    grids.tau_count,
                    &grids.splits,
                    args.seed,
                )?),
                FilterVariant::AdaBf => FilterArtifact::AdaBf(build_adabf(
                    model,
                    &split.keys,
                    &split.train_non_keys,
                    budget,
                    &grids.groups,
                    &grids.ratios,
                    args.seed,
                )?),
                FilterVariant::Bloom => unreachable!(),
            }
        }
    };
    std::fs::write(&args.out, artifact.to_bytes())?;

    let detail = match &artifact {
        FilterArtifact::Bloom(f) => json!({"k": f.k(), "m": f.m()}),
        FilterArtifact::Lbf(f) => json!({
            "tau": f.tau(),
            "false_negatives": f.false_negatives(),
            "train_fpr": f.train_fpr(),
        }),
        FilterArtifact::Slbf(f) => json!({
            "tau": f.tau(),
            "lambda": f.split(),
            "m_initial": f.initial().m(),
            "m_backup": f.backup().map_or(0, |b| b.m()),
            "false_negatives": f.false_negatives(),
            "train_fpr": f.train_fpr(),
        }),
        FilterArtifact::AdaBf(f) => json!({
            "groups": f.groups(),
            "ratio": f.ratio(),
            "hash_counts": f.hash_counts(),
            "fallback": f.fallback_used(),
            "train_fpr": f.train_fpr(),
        }),
    };
    print_json(json!({
        "path": args.out,
        "variant": artifact.variant(),
        "target_fpr": args.target_fpr,
        "budget_bits": budget,
        "total_bits": artifact.size_bits(),
        "detail": detail,
    }))
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let data = args.data.load()?;
    let split = split_data(&data, args.seed)?;
    let bytes = std::fs::read(&args.filter)
        .with_context(|| format!("cannot read filter {}", args.filter.display()))?;
    let artifact = FilterArtifact::from_bytes(&bytes)?;

    let false_negatives = split.keys.iter().filter(|k| !artifact.accepts(k)).count();
    let fpr = empirical_fpr(&artifact, &split.query_non_keys)?;
    let reject_time_ns = if args.timing {
        let cfg = TimingConfig {
            repeats: args.repeats,
            min_queries: args.min_queries,
        };
        Some(query_time_ns(&artifact, &split.query_non_keys, &cfg)?)
    } else {
        None
    };
    print_json(json!({
        "variant": artifact.variant(),
        "size_bits": artifact.size_bits(),
        "n_keys": split.keys.len(),
        "n_queries": split.query_non_keys.len(),
        "false_negatives": false_negatives,
        "empirical_fpr": fpr,
        "reject_time_ns": reject_time_ns,
    }))
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let cells: Vec<SweepCell> = serde_json::from_str(&text)
        .with_context(|| format!("malformed sweep config {}", args.config.display()))?;
    let sidecar = args
        .sidecar
        .unwrap_or_else(|| args.out.with_extension("json"));
    let summary = sweep(&cells, &args.out, &sidecar)?;
    print_json(json!({
        "csv": args.out,
        "sidecar": sidecar,
        "rows": summary.rows,
        "infeasible": summary.infeasible,
        "threads": harness::thread_count(),
    }))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData(args) => gen_data(args),
        Command::Complexity(args) => complexity(args),
        Command::Cv(args) => cv(args),
        Command::Train(args) => train(args),
        Command::BuildFilter(args) => build_filter(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Sweep(args) => run_sweep(args),
    }
}
