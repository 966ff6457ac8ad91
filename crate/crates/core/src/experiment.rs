//! k-fold cross-validated comparison of learned quantizations against the
//! uniform baseline.
//!
//! For every fold the genetic search runs on the remaining folds only; the
//! learned genome and the baseline are then scored by ranking the held-out
//! fold against itself.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::dataset::LabeledDataset;
use crate::descriptors::extract;
use crate::error::{Error, Result};
use crate::ga::{evolve, EvolutionRecord, GaConfig};
use crate::quantizer::{Descriptor, QuantizationGenome};
use crate::retrieval::{
    average_precision, ffp4_score, metrics_csv, pr_csv, pr_curve, precision_at_k,
    rank_every_query, QueryMetrics,
};
use crate::stats::{paired_t_test, TTestResult, DEFAULT_ALPHA};

/// Dimension limits swept for the limited approach, per descriptor.
pub fn default_limit_sweep(descriptor: Descriptor) -> Vec<usize> {
    match descriptor {
        Descriptor::Bic => vec![16, 32, 64, 96, 128, 256, 384],
        Descriptor::Gch => vec![8, 16, 32, 48, 64, 128, 192],
    }
}

/// Assignment of every dataset item to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle followed by round-robin assignment.
pub fn kfold_split(items: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > items {
        return Err(Error::InvalidArgument(format!(
            "cannot split {items} items into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..items).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; items];
    for (position, &item) in order.iter().enumerate() {
        assignment[item] = position % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignment,
    })
}

/// GA seed for one fold, derived from the master seed.
pub fn fold_seed(master: u64, fold: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master.wrapping_add((fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Baseline,
    /// Unconstrained search.
    Nla,
    /// Search with a dimension limit.
    La(usize),
}

impl Method {
    pub fn dimension_limit(self) -> Option<usize> {
        match self {
            Method::La(limit) => Some(limit),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Baseline => f.write_str("baseline"),
            Method::Nla => f.write_str("nla"),
            Method::La(limit) => write!(f, "la{limit}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "baseline" => Ok(Method::Baseline),
            "nla" => Ok(Method::Nla),
            other => other
                .strip_prefix("la")
                .and_then(|l| l.parse().ok())
                .filter(|&l: &usize| l > 0)
                .map(Method::La)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub descriptor: Descriptor,
    pub ga: GaConfig,
    /// Learned methods compared against the baseline; the baseline always runs.
    pub methods: Vec<Method>,
    pub baseline_bins: usize,
    pub precision_depth: usize,
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn new(descriptor: Descriptor, ga: GaConfig, methods: Vec<Method>) -> Self {
        ExperimentConfig {
            descriptor,
            ga,
            methods,
            baseline_bins: 4,
            precision_depth: 10,
            alpha: DEFAULT_ALPHA,
        }
    }

    /// Baseline first, then the learned methods in order, without duplicates.
    pub fn all_methods(&self) -> Vec<Method> {
        let mut out = vec![Method::Baseline];
        for &m in &self.methods {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }
}

/// Scores of one method on one test fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_items: usize,
    /// Effective precision depth, `min(precision_depth, test_items − 1)`.
    pub precision_depth: usize,
    pub p_at_10: f64,
    pub map: f64,
    pub ffp4: f64,
    pub dimension: usize,
    pub genome: String,
    /// Learned methods only: fitness of the genome on the training folds.
    pub train_fitness: Option<f64>,
    pub zero_relevant_queries: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (0 for a single fold).
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub p_at_10: Summary,
    pub map: Summary,
    pub ffp4: Summary,
    pub dimension: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub folds: Vec<FoldMetrics>,
    pub aggregate: Aggregate,
}

impl MethodReport {
    pub fn values(&self, metric: Metric) -> Vec<f64> {
        self.folds.iter().map(|f| metric.of(f)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PAt10,
    Map,
}

impl Metric {
    pub fn of(self, fold: &FoldMetrics) -> f64 {
        match self {
            Metric::PAt10 => fold.p_at_10,
            Metric::Map => fold.map,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestEntry {
    pub method: Method,
    pub against: Method,
    pub metric: Metric,
    pub result: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between identical runs.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub header: ReportHeader,
    pub dataset: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub fold_plan: FoldPlan,
    pub methods: Vec<MethodReport>,
    pub t_tests: Vec<TTestEntry>,
}

impl MetricsReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Fixed-width summary table: method, P@10, MAP, dimension, t-test verdicts.
    pub fn summary_table(&self) -> String {
        use std::fmt::Write as _;
        let mut out = format!(
            "{:<10} {:>16} {:>16} {:>10}  {}\n",
            "method", "P@10", "MAP", "dim", "t-test vs baseline (P@10 / MAP)"
        );
        for m in &self.methods {
            let verdict = |metric| {
                self.t_tests
                    .iter()
                    .find(|t| t.method == m.method && t.metric == metric)
                    .map(|t| format!("{} (p={:.4})", t.result.verdict.label(), t.result.p_value))
            };
            let verdicts = match (verdict(Metric::PAt10), verdict(Metric::Map)) {
                (Some(a), Some(b)) => format!("{a} / {b}"),
                _ => "-".to_string(),
            };
            let a = &m.aggregate;
            writeln!(
                out,
                "{:<10} {:>7.4} ± {:<6.4} {:>7.4} ± {:<6.4} {:>10.1}  {}",
                m.method.to_string(),
                a.p_at_10.mean,
                a.p_at_10.std,
                a.map.mean,
                a.map.std,
                a.dimension.mean,
                verdicts
            )
            .expect("write to String");
        }
        out
    }
}

/// Per-fold artifacts for one method, rendered to CSV by [`ExperimentOutput::files`].
#[derive(Debug, Clone, PartialEq)]
pub struct FoldArtifacts {
    pub fold: usize,
    pub method: Method,
    pub queries: Vec<QueryMetrics>,
    pub pr_curve: Vec<(f64, f64)>,
    pub evolution: Option<EvolutionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: MetricsReport,
    pub artifacts: Vec<FoldArtifacts>,
}

impl ExperimentOutput {
    /// Every output file as `(relative path, contents)`, in a fixed order.
    pub fn files(&self) -> Vec<(PathBuf, String)> {
        let mut files = vec![(PathBuf::from("report.json"), self.report.to_json())];
        for a in &self.artifacts {
            let dir = PathBuf::from(format!("fold{}", a.fold));
            let m = a.method;
            files.push((dir.join(format!("{m}_metrics.csv")), metrics_csv(&a.queries)));
            files.push((dir.join(format!("{m}_pr.csv")), pr_csv(&a.pr_curve)));
            if let Some(rec) = &a.evolution {
                files.push((dir.join(format!("{m}_evolution.csv")), rec.log_csv()));
                files.push((dir.join(format!("{m}_genome.txt")), rec.best_genome.to_line()));
            }
        }
        files
    }
}

struct Evaluation {
    metrics: FoldMetrics,
    queries: Vec<QueryMetrics>,
    pr_curve: Vec<(f64, f64)>,
}

/// Scores `genome` by ranking the test set against itself.
fn evaluate_on(
    genome: &QuantizationGenome,
    test: &LabeledDataset,
    fold: usize,
    cfg: &ExperimentConfig,
) -> Result<Evaluation> {
    let map = genome.decode();
    let features = test
        .items()
        .par_iter()
        .map(|item| extract(&item.image, &map, cfg.descriptor))
        .collect::<Result<Vec<_>>>()?;
    let labels = test.labels();
    let rankings = rank_every_query(&features)?;
    let depth = cfg.precision_depth.min(test.len() - 1);
    let mut queries = Vec::with_capacity(rankings.len());
    for r in &rankings {
        queries.push(QueryMetrics {
            query_id: test.items()[r.query()].id.clone(),
            class: test.class_name(r.query()).to_string(),
            p_at_10: precision_at_k(r, &labels, depth)?,
            ap: average_precision(r, &labels).unwrap_or(0.0),
            ffp4: ffp4_score(r, &labels, &cfg.ga.ffp4),
        });
    }
    let curve = pr_curve(&rankings, &labels)?;
    let n = queries.len() as f64;
    let metrics = FoldMetrics {
        fold,
        test_items: test.len(),
        precision_depth: depth,
        p_at_10: queries.iter().map(|q| q.p_at_10).sum::<f64>() / n,
        map: queries.iter().map(|q| q.ap).sum::<f64>() / n,
        ffp4: queries.iter().map(|q| q.ffp4).sum::<f64>() / n,
        dimension: genome.dimension(cfg.descriptor),
        genome: genome.to_string(),
        train_fitness: None,
        zero_relevant_queries: curve
            .zero_relevant_queries
            .iter()
            .map(|&q| test.items()[q].id.clone())
            .collect(),
    };
    Ok(Evaluation {
        metrics,
        queries,
        pr_curve: curve.value,
    })
}

/// Learned genome and its record for one fold and method.
pub fn learn_fold(
    dataset: &LabeledDataset,
    plan: &FoldPlan,
    fold: usize,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<EvolutionRecord> {
    let train = dataset.subset(&plan.train_indices(fold))?;
    let ga = GaConfig {
        seed: fold_seed(cfg.ga.seed, fold),
        dimension_limit: method.dimension_limit(),
        ..cfg.ga.clone()
    };
    evolve(&train, cfg.descriptor, &ga)
}

pub fn run_experiment(
    dataset: &LabeledDataset,
    cfg: &ExperimentConfig,
    plan: &FoldPlan,
) -> Result<ExperimentOutput> {
    if plan.assignment.len() != dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "fold plan covers {} items but the dataset has {}",
            plan.assignment.len(),
            dataset.len()
        )));
    }
    cfg.ga.validate()?;
    let baseline = QuantizationGenome::baseline(cfg.baseline_bins, cfg.ga.intervals)?;
    let methods = cfg.all_methods();
    let mut per_method: Vec<Vec<FoldMetrics>> = vec![Vec::new(); methods.len()];
    let mut artifacts = Vec::new();

    for fold in 0..plan.k {
        let test = dataset.subset(&plan.test_indices(fold))?;
        for (slot, &method) in methods.iter().enumerate() {
            let (genome, evolution) = match method {
                Method::Baseline => (baseline.clone(), None),
                _ => {
                    let rec = learn_fold(dataset, plan, fold, method, cfg)?;
                    (rec.best_genome.clone(), Some(rec))
                }
            };
            let mut eval = evaluate_on(&genome, &test, fold, cfg)?;
            eval.metrics.train_fitness = evolution.as_ref().map(|r| r.best_fitness);
            per_method[slot].push(eval.metrics);
            artifacts.push(FoldArtifacts {
                fold,
                method,
                queries: eval.queries,
                pr_curve: eval.pr_curve,
                evolution,
            });
        }
    }

    let reports: Vec<MethodReport> = methods
        .iter()
        .zip(per_method)
        .map(|(&method, folds)| {
            let col = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).collect::<Vec<_>>();
            let aggregate = Aggregate {
                p_at_10: Summary::of(&col(|f| f.p_at_10)),
                map: Summary::of(&col(|f| f.map)),
                ffp4: Summary::of(&col(|f| f.ffp4)),
                dimension: Summary::of(&col(|f| f.dimension as f64)),
            };
            MethodReport {
                method,
                folds,
                aggregate,
            }
        })
        .collect();

    let mut t_tests = Vec::new();
    if plan.k >= 2 {
        let base = &reports[0];
        for learned in &reports[1..] {
            for metric in [Metric::PAt10, Metric::Map] {
                t_tests.push(TTestEntry {
                    method: learned.method,
                    against: Method::Baseline,
                    metric,
                    result: paired_t_test(&learned.values(metric), &base.values(metric), cfg.alpha)?,
                });
            }
        }
    }

    Ok(ExperimentOutput {
        report: MetricsReport {
            header: ReportHeader {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: None,
            },
            dataset: None,
            config: cfg.clone(),
            fold_plan: plan.clone(),
            methods: reports,
            t_tests,
        },
        artifacts,
    })
}
