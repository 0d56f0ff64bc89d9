//! End-to-end experiment pipeline: split the data, train the classifier,
//! build every filter variant at each space budget, measure false positive
//! rates and reject times, and emit machine-readable reports.

use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bloom::{component_seed, optimal_k, size_for_target_fpr, BloomFilter};
use crate::classifiers::{Classifier, ClassifierConfig, TrainedClassifier};
use crate::datagen::{self, SynthConfig};
use crate::dataset::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::filters::adabf::{DEFAULT_GROUP_GRID, DEFAULT_RATIO_GRID};
use crate::filters::slbf::DEFAULT_SPLIT_GRID;
use crate::filters::{
    build_adabf, build_lbf, build_slbf, empirical_fpr, percent_vs_baseline, query_time_ns, Filter,
    FilterArtifact, TimingConfig,
};

/// Classifiers train on all keys plus this share of the non-keys; the rest
/// of the non-keys form the held-out query set.
pub const TRAIN_NON_KEY_FRACTION: f64 = 0.3;

/// Imbalance ratio at or above which training switches to cost-sensitive
/// mode automatically.
pub const COST_SENSITIVE_IMBALANCE: f64 = 1.5;

const TRAIN_SEED_TAG: u64 = 1_000;
const BASELINE_SEED_TAG: u64 = 2_000;

/// The experiment split: every key is stored and used for training; only
/// non-keys are held out, since false positive rates are measured on
/// elements outside the stored set.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub keys: Vec<Vec<f64>>,
    pub train_non_keys: Vec<Vec<f64>>,
    pub query_non_keys: Vec<Vec<f64>>,
}

/// Splits off a uniform 30% of the non-keys for training; the remaining 70%
/// become the query set. Keys all go to training and are never queried as
/// negatives.
pub fn split_data(data: &LabeledDataset, seed: u64) -> Result<SplitData> {
    let keys = data.keys();
    let non_keys = data.non_keys();
    if keys.is_empty() {
        return Err(Error::DegenerateData("dataset has no keys to store".into()));
    }
    if non_keys.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 non-keys to split, got {}",
            non_keys.len()
        )));
    }
    let mut order: Vec<usize> = (0..non_keys.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (TRAIN_NON_KEY_FRACTION * non_keys.len() as f64).floor() as usize;
    let train_non_keys = order[..n_train]
        .iter()
        .map(|&i| non_keys[i].clone())
        .collect();
    let query_non_keys = order[n_train..]
        .iter()
        .map(|&i| non_keys[i].clone())
        .collect();
    Ok(SplitData {
        keys,
        train_non_keys,
        query_non_keys,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterVariant {
    Bloom,
    Lbf,
    Slbf,
    AdaBf,
}

impl FilterVariant {
    pub fn name(self) -> &'static str {
        match self {
            FilterVariant::Bloom => "bloom",
            FilterVariant::Lbf => "lbf",
            FilterVariant::Slbf => "slbf",
            FilterVariant::AdaBf => "adabf",
        }
    }
}

impl std::str::FromStr for FilterVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bloom" | "bf" => Ok(FilterVariant::Bloom),
            "lbf" => Ok(FilterVariant::Lbf),
            "slbf" => Ok(FilterVariant::Slbf),
            "adabf" => Ok(FilterVariant::AdaBf),
            other => Err(Error::InvalidArgument(format!(
                "unknown filter variant {other:?}; expected bf, lbf, slbf or adabf"
            ))),
        }
    }
}

impl std::fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameter search grids shared by the learned variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSettings {
    /// Number of threshold percentile positions.
    pub tau_count: usize,
    /// Initial/backup split fractions for the sandwiched variant.
    pub splits: Vec<f64>,
    /// Group counts for the group-adaptive variant.
    pub groups: Vec<usize>,
    /// Non-key count ratios for the group-adaptive variant.
    pub ratios: Vec<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            tau_count: 15,
            splits: DEFAULT_SPLIT_GRID.to_vec(),
            groups: DEFAULT_GROUP_GRID.to_vec(),
            ratios: DEFAULT_RATIO_GRID.to_vec(),
        }
    }
}

/// One experiment: a classifier trained once, then every requested variant
/// built at every target false positive rate's budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Required for any learned variant; a plain-filter-only run may omit it.
    pub classifier: Option<ClassifierConfig>,
    pub variants: Vec<FilterVariant>,
    /// Budgets are derived from these via the classic sizing formula.
    pub target_fprs: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub grids: GridSettings,
    /// `None` skips timing, leaving those report columns empty.
    pub timing: Option<TimingConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classifier: None,
            variants: vec![
                FilterVariant::Lbf,
                FilterVariant::Slbf,
                FilterVariant::AdaBf,
            ],
            target_fprs: vec![0.05, 0.01],
            seed: 0,
            grids: GridSettings::default(),
            timing: Some(TimingConfig::default()),
        }
    }
}

/// One CSV row: a (variant, budget) cell of an experiment. Field order is
/// the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: String,
    pub classifier: String,
    pub target_fpr: f64,
    pub budget_bits: u64,
    pub classifier_bits: u64,
    pub array_bits: u64,
    pub total_bits: u64,
    pub n_keys: u64,
    pub n_train_non_keys: u64,
    pub n_query_non_keys: u64,
    pub false_negatives: u64,
    pub empirical_fpr: Option<f64>,
    pub reject_time_ns: Option<f64>,
    pub reject_time_pct_of_baseline: Option<f64>,
    pub params: String,
    pub status: String,
    pub detail: String,
    pub seed: u64,
}

/// Column names in serialization order, for sidecars and header checks.
pub const REPORT_COLUMNS: [&str; 19] = [
    "dataset",
    "variant",
    "classifier",
    "target_fpr",
    "budget_bits",
    "classifier_bits",
    "array_bits",
    "total_bits",
    "n_keys",
    "n_train_non_keys",
    "n_query_non_keys",
    "false_negatives",
    "empirical_fpr",
    "reject_time_ns",
    "reject_time_pct_of_baseline",
    "params",
    "status",
    "detail",
    "seed",
];

/// Columns whose values depend on wall-clock measurements; everything else
/// is deterministic in the seeds.
pub const TIMING_COLUMNS: [&str; 2] = ["reject_time_ns", "reject_time_pct_of_baseline"];

pub const STATUS_OK: &str = "ok";
pub const STATUS_INFEASIBLE: &str = "infeasible";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

fn dataset_label(p: &Provenance) -> String {
    match p {
        Provenance::Synthetic {
            a,
            r,
            rho,
            n1,
            gamma,
            seed,
        } => format!("synthetic(a={a},r={r},rho={rho},n1={n1},gamma={gamma},seed={seed})"),
        Provenance::Csv { path } => format!("csv({path})"),
        Provenance::Kmer { k } => format!("kmer(k={k})"),
        Provenance::Adhoc => "adhoc".to_string(),
    }
}

/// Worker pool size: the `LBF_THREADS` environment variable when set to a
/// positive integer, otherwise the machine's available parallelism.
pub fn thread_count() -> usize {
    parse_thread_count(std::env::var("LBF_THREADS").ok().as_deref())
}

fn parse_thread_count(var: Option<&str>) -> usize {
    var.and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Heavily imbalanced training data flips the classifier into
/// cost-sensitive mode; balanced data leaves the config untouched.
pub fn effective_classifier_config(config: &ClassifierConfig, imbalance: f64) -> ClassifierConfig {
    if imbalance >= COST_SENSITIVE_IMBALANCE {
        config.with_cost_sensitive(true)
    } else {
        config.clone()
    }
}

struct BuiltCell {
    filter: Option<FilterArtifact>,
    classifier_bits: u64,
    array_bits: u64,
    false_negatives: u64,
    empirical_fpr: Option<f64>,
    params: String,
    status: &'static str,
    detail: String,
}

fn build_learned_cell(
    variant: FilterVariant,
    classifier: &TrainedClassifier,
    split: &SplitData,
    budget: u64,
    grids: &GridSettings,
    seed: u64,
) -> Result<BuiltCell> {
    let built: Result<FilterArtifact> = match variant {
        FilterVariant::Lbf => build_lbf(
            classifier.clone(),
            &split.keys,
            &split.train_non_keys,
            budget,
            grids.tau_count,
            seed,
        )
        .map(FilterArtifact::Lbf),
        FilterVariant::Slbf => build_slbf(
            classifier.clone(),
            &split.keys,
            &split.train_non_keys,
            budget,
            grids.tau_count,
            &grids.splits,
            seed,
        )
        .map(FilterArtifact::Slbf),
        FilterVariant::AdaBf => build_adabf(
            classifier.clone(),
            &split.keys,
            &split.train_non_keys,
            budget,
            &grids.groups,
            &grids.ratios,
            seed,
        )
        .map(FilterArtifact::AdaBf),
        FilterVariant::Bloom => unreachable!("baseline cells are built separately"),
    };
    let filter = match built {
        Ok(f) => f,
        Err(e @ (Error::BudgetExceeded { .. } | Error::Infeasible(_))) => {
            return Ok(BuiltCell {
                filter: None,
                classifier_bits: classifier.size_bits(),
                array_bits: 0,
                false_negatives: 0,
                empirical_fpr: None,
                params: String::new(),
                status: STATUS_INFEASIBLE,
                detail: e.to_string(),
            });
        }
        Err(e) => return Err(e),
    };

    let params = match &filter {
        FilterArtifact::Lbf(f) => format!("tau={}", f.tau()),
        FilterArtifact::Slbf(f) => format!(
            "tau={};lambda={};m_initial={};m_backup={}",
            f.tau(),
            f.split(),
            f.initial().m(),
            f.backup().map_or(0, |b| b.m()),
        ),
        FilterArtifact::AdaBf(f) => {
            let counts: Vec<String> = f.hash_counts().iter().map(u16::to_string).collect();
            format!(
                "groups={};ratio={};hash_counts={};fallback={}",
                f.groups(),
                f.ratio(),
                counts.join("|"),
                f.fallback_used(),
            )
        }
        FilterArtifact::Bloom(_) => unreachable!(),
    };
    let classifier_bits = classifier.size_bits();
    let array_bits = filter.size_bits() - classifier_bits;
    let false_negatives = split.keys.iter().filter(|k| !filter.accepts(k)).count() as u64;
    let fpr = empirical_fpr(&filter, &split.query_non_keys)?;
    Ok(BuiltCell {
        filter: Some(filter),
        classifier_bits,
        array_bits,
        false_negatives,
        empirical_fpr: Some(fpr),
        params,
        status: STATUS_OK,
        detail: String::new(),
    })
}

/// Runs one experiment over the dataset: one deterministic split, one
/// classifier training pass, then a (budget x variant) grid of builds. The
/// baseline classic filter is always built and reported first for each
/// budget; learned cells that cannot fit are reported as infeasible rather
/// than aborting. Builds run on [`thread_count`] workers; timing, when
/// enabled, runs afterwards with nothing else in flight.
pub fn run_experiment(data: &LabeledDataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.target_fprs.is_empty() {
        return Err(Error::InvalidArgument("no target FPRs given".into()));
    }
    for &eps in &cfg.target_fprs {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target FPR must lie in (0, 1), got {eps}"
            )));
        }
    }
    let learned: Vec<FilterVariant> = cfg
        .variants
        .iter()
        .copied()
        .filter(|v| *v != FilterVariant::Bloom)
        .collect();
    if !learned.is_empty() && cfg.classifier.is_none() {
        return Err(Error::InvalidArgument(
            "learned variants need a classifier config".into(),
        ));
    }

    let split = split_data(data, cfg.seed)?;
    let n_keys = split.keys.len() as u64;
    let dataset = dataset_label(data.provenance());

    let (classifier, classifier_label) = match (&cfg.classifier, learned.is_empty()) {
        (Some(config), false) => {
            let mut features = split.keys.clone();
            features.extend(split.train_non_keys.iter().cloned());
            let mut labels = vec![1u8; split.keys.len()];
            labels.extend(std::iter::repeat_n(0u8, split.train_non_keys.len()));
            let train = LabeledDataset::new(features, labels, Provenance::Adhoc)?;
            let config = effective_classifier_config(config, train.imbalance_ratio());
            let model = config.train(&train, component_seed(cfg.seed, TRAIN_SEED_TAG))?;
            (Some(model), config.describe())
        }
        _ => (None, "none".to_string()),
    };

    let mut budgets = Vec::with_capacity(cfg.target_fprs.len());
    for &eps in &cfg.target_fprs {
        budgets.push(size_for_target_fpr(n_keys, eps)?);
    }

    // Baselines are cheap; build them inline.
    let baseline_seed = component_seed(cfg.seed, BASELINE_SEED_TAG);
    let mut baselines = Vec::with_capacity(budgets.len());
    for &budget in &budgets {
        let filter = BloomFilter::build(
            &split.keys,
            budget,
            optimal_k(budget, n_keys),
            baseline_seed,
        )?;
        baselines.push(filter);
    }

    // Learned cells are the expensive part; farm them out to a worker pool.
    let tasks: Vec<(usize, FilterVariant)> = budgets
        .iter()
        .enumerate()
        .flat_map(|(i, _)| learned.iter().map(move |&v| (i, v)))
        .collect();
    let mut cells: Vec<Option<Result<BuiltCell>>> = Vec::new();
    cells.resize_with(tasks.len(), || None);
    let cells = Mutex::new(cells);
    let next = AtomicUsize::new(0);
    let workers = thread_count().min(tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (budget_idx, variant) = tasks[i];
                let outcome = build_learned_cell(
                    variant,
                    classifier
                        .as_ref()
                        .expect("learned tasks imply a classifier"),
                    &split,
                    budgets[budget_idx],
                    &cfg.grids,
                    cfg.seed,
                );
                cells.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    let mut learned_cells = Vec::with_capacity(tasks.len());
    for slot in cells.into_inner().unwrap() {
        learned_cells.push(slot.expect("every task ran")?);
    }

    let template = |variant: &str, eps: f64, budget: u64| ReportRow {
        dataset: dataset.clone(),
        variant: variant.to_string(),
        classifier: classifier_label.clone(),
        target_fpr: eps,
        budget_bits: budget,
        classifier_bits: 0,
        array_bits: 0,
        total_bits: 0,
        n_keys,
        n_train_non_keys: split.train_non_keys.len() as u64,
        n_query_non_keys: split.query_non_keys.len() as u64,
        false_negatives: 0,
        empirical_fpr: None,
        reject_time_ns: None,
        reject_time_pct_of_baseline: None,
        params: String::new(),
        status: STATUS_OK.to_string(),
        detail: String::new(),
        seed: cfg.seed,
    };

    let mut rows = Vec::new();
    for (i, (&eps, &budget)) in cfg.target_fprs.iter().zip(&budgets).enumerate() {
        let baseline = &baselines[i];
        let mut row = template(FilterVariant::Bloom.name(), eps, budget);
        row.classifier = "none".to_string();
        row.array_bits = baseline.m();
        row.total_bits = baseline.m();
        row.false_negatives = split.keys.iter().filter(|k| !baseline.query(k)).count() as u64;
        row.empirical_fpr = Some(empirical_fpr(baseline, &split.query_non_keys)?);
        row.params = format!("k={}", baseline.k());
        rows.push(row);

        for (t, &(budget_idx, variant)) in tasks.iter().enumerate() {
            if budget_idx != i {
                continue;
            }
            let cell = &learned_cells[t];
            let mut row = template(variant.name(), eps, budget);
            row.classifier_bits = cell.classifier_bits;
            row.array_bits = cell.array_bits;
            row.total_bits = cell.classifier_bits + cell.array_bits;
            row.false_negatives = cell.false_negatives;
            row.empirical_fpr = cell.empirical_fpr;
            row.params = cell.params.clone();
            row.status = cell.status.to_string();
            row.detail = cell.detail.clone();
            rows.push(row);
        }
    }

    if let Some(timing) = &cfg.timing {
        let mut row_idx = 0;
        for (i, baseline) in baselines.iter().enumerate() {
            let base_ns = query_time_ns(baseline, &split.query_non_keys, timing)?;
            rows[row_idx].reject_time_ns = Some(base_ns);
            rows[row_idx].reject_time_pct_of_baseline = Some(100.0);
            row_idx += 1;
            for (t, &(budget_idx, _)) in tasks.iter().enumerate() {
                if budget_idx != i {
                    continue;
                }
                if let Some(filter) = &learned_cells[t].filter {
                    let ns = query_time_ns(filter, &split.query_non_keys, timing)?;
                    rows[row_idx].reject_time_ns = Some(ns);
                    rows[row_idx].reject_time_pct_of_baseline =
                        Some(100.0 + percent_vs_baseline(ns, base_ns));
                }
                row_idx += 1;
            }
        }
    }

    Ok(ExperimentReport { rows })
}

/// Where a sweep cell's dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic(SynthConfig),
    Csv {
        path: String,
    },
    UrlCsv {
        path: String,
    },
    Kmers {
        path: String,
        negatives: usize,
        seed: u64,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DataSource::Synthetic(cfg) => datagen::generate(cfg),
            DataSource::Csv { path } => datagen::load_csv(path),
            DataSource::UrlCsv { path } => datagen::load_url_csv(path),
            DataSource::Kmers {
                path,
                negatives,
                seed,
            } => {
                let keys = datagen::load_kmer_lines(path)?;
                if keys.is_empty() {
                    return Err(Error::DegenerateData("no k-mers in input".into()));
                }
                let negs = datagen::sample_negative_kmers(keys[0].len(), *negatives, &keys, *seed)?;
                datagen::kmer_dataset(&keys, &negs)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub dataset: DataSource,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub infeasible: usize,
}

/// Sidecar written next to every sweep CSV: schema, environment, and the
/// full configuration needed to reproduce the run. No wall-clock fields, so
/// reruns with identical configs produce identical sidecars.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSidecar {
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub timing_columns: Vec<String>,
    pub library_version: String,
    pub machine: String,
    pub threads: usize,
    pub cells: Vec<SweepCell>,
    pub rows: usize,
    pub infeasible: usize,
}

pub const SWEEP_SCHEMA_VERSION: u32 = 1;

/// Runs every cell in order, appending rows to the CSV as each finishes so
/// partial results survive an interrupted sweep, then writes the sidecar.
pub fn sweep(cells: &[SweepCell], csv_path: &Path, sidecar_path: &Path) -> Result<SweepSummary> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("no sweep cells configured".into()));
    }
    let mut writer = csv::Writer::from_path(csv_path)
        .map_err(|e| Error::Format(format!("cannot open {}: {e}", csv_path.display())))?;
    let mut rows = 0usize;
    let mut infeasible = 0usize;
    for cell in cells {
        let data = cell.dataset.load()?;
        let report = run_experiment(&data, &cell.experiment)?;
        for row in &report.rows {
            if row.status == STATUS_INFEASIBLE {
                infeasible += 1;
            }
            writer
                .serialize(row)
                .map_err(|e| Error::Format(format!("CSV write failed: {e}")))?;
            rows += 1;
        }
        writer
            .flush()
            .map_err(|e| Error::Format(format!("CSV flush failed: {e}")))?;
    }
    drop(writer);

    let sidecar = SweepSidecar {
        schema_version: SWEEP_SCHEMA_VERSION,
        columns: REPORT_COLUMNS.iter().map(|c| c.to_string()).collect(),
        timing_columns: TIMING_COLUMNS.iter().map(|c| c.to_string()).collect(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        machine: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
        threads: thread_count(),
        cells: cells.to_vec(),
        rows,
        infeasible,
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(sidecar_path)?);
    serde_json::to_writer_pretty(&mut out, &sidecar)
        .map_err(|e| Error::Format(format!("sidecar write failed: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(SweepSummary { rows, infeasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::SvmParams;

    fn easy_dataset(n1: usize, seed: u64) -> LabeledDataset {
        datagen::generate(&SynthConfig {
            a: 0.01,
            n1,
            seed,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn svm_config() -> ClassifierConfig {
        ClassifierConfig::Svm(SvmParams::default())
    }

    #[test]
    fn split_respects_proportions_and_determinism() {
        let data = easy_dataset(200, 3);
        let split = split_data(&data, 11).unwrap();
        assert_eq!(split.keys.len(), data.n_positive());
        let nk = data.n_negative();
        assert_eq!(
            split.train_non_keys.len(),
            (0.3 * nk as f64).floor() as usize
        );
        assert_eq!(split.train_non_keys.len() + split.query_non_keys.len(), nk);

        assert_eq!(split, split_data(&data, 11).unwrap());
        assert_ne!(
            split.train_non_keys,
            split_data(&data, 12).unwrap().train_non_keys
        );

        // The two parts partition the source non-keys: per-row counts add up.
        let count = |rows: &[Vec<f64>], q: &Vec<f64>| rows.iter().filter(|r| *r == q).count();
        let source = data.non_keys();
        for q in &source {
            assert_eq!(
                count(&split.train_non_keys, q) + count(&split.query_non_keys, q),
                count(&source, q)
            );
        }
    }

    #[test]
    fn split_needs_enough_non_keys() {
        let features: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, 1.0]).collect();
        let mut labels = vec![1u8; 12];
        for l in labels.iter_mut().take(5) {
            *l = 0;
        }
        let data = LabeledDataset::new(features, labels, Provenance::Adhoc).unwrap();
        assert!(matches!(
            split_data(&data, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    fn quick_config(variants: Vec<FilterVariant>, target_fprs: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            classifier: Some(svm_config()),
            variants,
            target_fprs,
            seed: 7,
            grids: GridSettings::default(),
            timing: None,
        }
    }

    #[test]
    fn experiment_reports_every_cell_within_budget() {
        let data = easy_dataset(400, 5);
        let cfg = quick_config(
            vec![
                FilterVariant::Lbf,
                FilterVariant::Slbf,
                FilterVariant::AdaBf,
            ],
            vec![0.05],
        );
        let report = run_experiment(&data, &cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert_eq!(report.rows[0].variant, "bloom");
        for row in &report.rows {
            assert_eq!(row.status, STATUS_OK, "{row:?}");
            assert_eq!(row.false_negatives, 0);
            assert!(row.total_bits <= row.budget_bits);
            assert_eq!(row.total_bits, row.classifier_bits + row.array_bits);
            let fpr = row.empirical_fpr.unwrap();
            assert!((0.0..=1.0).contains(&fpr));
            assert!(row.reject_time_ns.is_none());
        }
        assert_eq!(report.rows[0].classifier, "none");
        assert!(report.rows[1].classifier.starts_with("svm"));
    }

    #[test]
    fn oversized_cells_marked_infeasible_without_aborting() {
        let data = easy_dataset(150, 9);
        // At a 0.9 target the whole budget is under the SVM's footprint.
        let cfg = quick_config(vec![FilterVariant::Lbf], vec![0.9, 0.05]);
        let report = run_experiment(&data, &cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        let tight = &report.rows[1];
        assert_eq!(tight.status, STATUS_INFEASIBLE);
        assert!(tight.detail.contains("budget"));
        assert!(tight.empirical_fpr.is_none());
        let roomy = &report.rows[3];
        assert_eq!(roomy.status, STATUS_OK);
        // Baseline rows stay fine at both budgets.
        assert_eq!(report.rows[0].status, STATUS_OK);
        assert_eq!(report.rows[2].status, STATUS_OK);
    }

    #[test]
    fn experiments_are_deterministic_without_timing() {
        let data = easy_dataset(250, 13);
        let cfg = quick_config(
            vec![FilterVariant::Lbf, FilterVariant::AdaBf],
            vec![0.05, 0.01],
        );
        let a = run_experiment(&data, &cfg).unwrap();
        let b = run_experiment(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn timing_pass_fills_the_clock_columns() {
        let data = easy_dataset(150, 21);
        let mut cfg = quick_config(vec![FilterVariant::Lbf], vec![0.05]);
        cfg.timing = Some(TimingConfig {
            repeats: 1,
            min_queries: 300,
        });
        let report = run_experiment(&data, &cfg).unwrap();
        let base = &report.rows[0];
        assert_eq!(base.reject_time_pct_of_baseline, Some(100.0));
        assert!(base.reject_time_ns.unwrap() > 0.0);
        let learned = &report.rows[1];
        assert!(learned.reject_time_ns.unwrap() > 0.0);
        assert!(learned.reject_time_pct_of_baseline.unwrap() > 0.0);
    }

    #[test]
    fn bloom_only_runs_need_no_classifier() {
        let data = easy_dataset(150, 2);
        let cfg = ExperimentConfig {
            classifier: None,
            variants: vec![FilterVariant::Bloom],
            target_fprs: vec![0.05],
            seed: 3,
            grids: GridSettings::default(),
            timing: None,
        };
        let report = run_experiment(&data, &cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].variant, "bloom");

        let learned = quick_config(vec![FilterVariant::Lbf], vec![0.05]);
        let mut broken = learned.clone();
        broken.classifier = None;
        assert!(run_experiment(&data, &broken).is_err());
    }

    #[test]
    fn sweep_writes_csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("report.csv");
        let sidecar_path = dir.path().join("report.json");
        let cells = vec![SweepCell {
            dataset: DataSource::Synthetic(SynthConfig {
                a: 0.01,
                n1: 150,
                seed: 4,
                ..SynthConfig::default()
            }),
            experiment: quick_config(vec![FilterVariant::Lbf], vec![0.05]),
        }];
        let summary = sweep(&cells, &csv_path, &sidecar_path).unwrap();
        assert_eq!(summary.rows, 2);
        assert_eq!(summary.infeasible, 0);

        let text = std::fs::read_to_string(&csv_path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, REPORT_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 3);

        let sidecar: SweepSidecar =
            serde_json::from_str(&std::fs::read_to_string(&sidecar_path).unwrap()).unwrap();
        assert_eq!(sidecar.schema_version, SWEEP_SCHEMA_VERSION);
        assert_eq!(sidecar.cells, cells);
        assert_eq!(sidecar.rows, 2);

        // Rerunning with the same seeds reproduces the CSV byte for byte
        // (timing columns are disabled here).
        let csv2 = dir.path().join("again.csv");
        let side2 = dir.path().join("again.json");
        sweep(&cells, &csv2, &side2).unwrap();
        assert_eq!(text, std::fs::read_to_string(&csv2).unwrap());
    }

    #[test]
    fn thread_count_parsing() {
        assert_eq!(parse_thread_count(Some("4")), 4);
        assert_eq!(parse_thread_count(Some(" 2 ")), 2);
        let fallback = parse_thread_count(None);
        assert!(fallback >= 1);
        assert_eq!(parse_thread_count(Some("0")), fallback);
        assert_eq!(parse_thread_count(Some("lots")), fallback);
    }

    #[test]
    fn cost_sensitive_switches_on_for_imbalanced_data() {
        let base = svm_config();
        match effective_classifier_config(&base, 1.0) {
            ClassifierConfig::Svm(p) => assert!(!p.cost_sensitive),
            _ => unreachable!(),
        }
        match effective_classifier_config(&base, 1.49) {
            ClassifierConfig::Svm(p) => assert!(!p.cost_sensitive),
            _ => unreachable!(),
        }
        match effective_classifier_config(&base, 1.5) {
            ClassifierConfig::Svm(p) => assert!(p.cost_sensitive),
            _ => unreachable!(),
        }
        match effective_classifier_config(&base, 5.0) {
            ClassifierConfig::Svm(p) => assert!(p.cost_sensitive),
            _ => unreachable!(),
        }

        // End to end: a 5:1 dataset still yields sound filters. The key
        // count stays modest so the whole grid builds quickly.
        let data = datagen::generate(&SynthConfig {
            a: 0.01,
            n1: 120,
            rho: 5.0,
            seed: 8,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = quick_config(vec![FilterVariant::Lbf], vec![0.05]);
        let report = run_experiment(&data, &cfg).unwrap();
        for row in &report.rows {
            assert_eq!(row.false_negatives, 0);
        }
    }
}
