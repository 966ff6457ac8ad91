//! Command implementations behind the `quantevo` binary.
//!
//! Configuration comes from a flat `key = value` file (with `#` comments)
//! and command-line overrides; both go through [`RunConfig::set`], so the
//! same keys and validation apply to each.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::dataset::load_dataset;
use crate::descriptors::extract;
use crate::error::{Error, Result};
use crate::experiment::{
    default_limit_sweep, kfold_split, run_experiment, ExperimentConfig, Method, MetricsReport,
};
use crate::ga::{evolve, EvolutionRecord, GaConfig};
use crate::quantizer::{Descriptor, QuantizationGenome};

/// Keys accepted in config files and as `--key` overrides.
pub const KEYS: &[&str] = &[
    "dataset",
    "descriptor",
    "genome",
    "baseline",
    "limit",
    "methods",
    "folds",
    "seed",
    "out",
    "population",
    "generations",
    "crossover",
    "mutation",
    "tournament",
    "elitism",
    "n",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ga: GaConfig,
    pub descriptor: Descriptor,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub genome: Option<PathBuf>,
    pub baseline: Option<usize>,
    pub folds: usize,
    pub limits: Option<Vec<usize>>,
    /// `limit = sweep`: use the default limit sweep for the chosen descriptor.
    pub limit_sweep: bool,
    /// Raw `methods` list: any of `baseline`, `nla`, `la`.
    pub methods: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ga: GaConfig::default(),
            descriptor: Descriptor::Bic,
            dataset: None,
            out: None,
            genome: None,
            baseline: None,
            folds: 5,
            limits: None,
            limit_sweep: false,
            methods: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "descriptor" => self.descriptor = value.parse()?,
            "genome" => self.genome = Some(PathBuf::from(value)),
            "baseline" => self.baseline = Some(parse_num(key, value)?),
            "limit" => {
                self.limit_sweep = value == "sweep";
                self.limits = if self.limit_sweep {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|v| parse_num(key, v))
                            .collect::<Result<Vec<usize>>>()?,
                    )
                };
            }
            "methods" => {
                let methods: Vec<String> = value.split(',').map(|m| m.trim().to_string()).collect();
                if let Some(bad) = methods.iter().find(|m| !["baseline", "nla", "la"].contains(&m.as_str())) {
                    return Err(Error::Config(format!(
                        "unknown method {bad:?} (expected baseline, nla or la)"
                    )));
                }
                self.methods = Some(methods);
            }
            "folds" => self.folds = parse_num(key, value)?,
            "seed" => self.ga.seed = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "population" => self.ga.population_size = parse_num(key, value)?,
            "generations" => self.ga.generations = parse_num(key, value)?,
            "crossover" => self.ga.crossover_probability = parse_num(key, value)?,
            "mutation" => self.ga.mutation_probability = parse_num(key, value)?,
            "tournament" => self.ga.tournament_size = parse_num(key, value)?,
            "elitism" => self.ga.elitism_fraction = parse_num(key, value)?,
            "n" => self.ga.intervals = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` config file.
    pub fn apply_file_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".into()))?;
            self.set(key.trim(), value)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(())
    }

    /// Config file values first, then `overrides` in order.
    pub fn load(config_file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = config_file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_file_text(&text, path)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    fn dataset_root(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Config("missing dataset".into()))
    }

    fn out_path(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("missing out".into()))
    }

    /// Explicit limits, or the default sweep when `limit = sweep`.
    pub fn resolved_limits(&self) -> Option<Vec<usize>> {
        if self.limit_sweep {
            Some(default_limit_sweep(self.descriptor))
        } else {
            self.limits.clone()
        }
    }

    /// Learned methods to compare against the baseline. Without a `methods`
    /// key this is NLA plus one LA run per limit.
    pub fn learned_methods(&self) -> Vec<Method> {
        let limits = self.resolved_limits();
        let wanted = |m: &str| match &self.methods {
            Some(ms) => ms.iter().any(|x| x == m),
            None => m != "la" || limits.is_some(),
        };
        let mut out = Vec::new();
        if wanted("nla") {
            out.push(Method::Nla);
        }
        if wanted("la") {
            let limits = limits.unwrap_or_else(|| default_limit_sweep(self.descriptor));
            out.extend(limits.into_iter().map(Method::La));
        }
        out
    }
}

/// Writes `files` under `root`; if any write fails, everything written so far is removed.
pub fn write_outputs(root: &Path, files: &[(PathBuf, String)]) -> Result<()> {
    let mut written: Vec<PathBuf> = Vec::new();
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for (rel, contents) in files {
            let path = root.join(rel);
            if let Some(parent) = path.parent() {
                let mut missing = Vec::new();
                let mut p = parent;
                while !p.as_os_str().is_empty() && !p.exists() {
                    missing.push(p.to_path_buf());
                    match p.parent() {
                        Some(pp) => p = pp,
                        None => break,
                    }
                }
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                created_dirs.extend(missing);
            }
            fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
        // deepest first
        created_dirs.sort_by_key(|d| std::cmp::Reverse(d.components().count()));
        for dir in &created_dirs {
            let _ = fs::remove_dir(dir);
        }
    }
    result
}

fn read_genome(path: &Path, intervals: usize) -> Result<QuantizationGenome> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let genome = QuantizationGenome::parse(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    if genome.intervals() != intervals {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "genome has {} intervals per axis, config expects {intervals}",
                genome.intervals()
            ),
        });
    }
    Ok(genome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub images: usize,
    pub dimension: usize,
    pub skipped: usize,
}

/// Writes one feature line per decoded image, in manifest order, to `out`.
pub fn cmd_extract(cfg: &RunConfig) -> Result<ExtractSummary> {
    let genome = match (&cfg.genome, cfg.baseline) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("give either genome or baseline, not both".into()))
        }
        (Some(path), None) => read_genome(path, cfg.ga.intervals)?,
        (None, Some(bins)) => QuantizationGenome::baseline(bins, cfg.ga.intervals)?,
        (None, None) => return Err(Error::Config("extract needs a genome or a baseline".into())),
    };
    let out = cfg.out_path()?;
    let (dataset, manifest) = load_dataset(cfg.dataset_root()?)?;
    let map = genome.decode();
    let mut text = String::new();
    for item in dataset.items() {
        text.push_str(&extract(&item.image, &map, cfg.descriptor)?.to_line());
        text.push('\n');
    }
    fs::write(out, text).map_err(|e| Error::io(out, e))?;
    Ok(ExtractSummary {
        images: dataset.len(),
        dimension: genome.dimension(cfg.descriptor),
        skipped: manifest.skipped().count(),
    })
}

/// Learns a genome on the whole dataset; writes `genome.txt`, `evolution.csv`
/// and `manifest.json` under `out`.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<EvolutionRecord> {
    let limits = cfg.resolved_limits();
    let limit = match limits.as_deref() {
        None => None,
        Some([limit]) => Some(*limit),
        Some(_) => return Err(Error::Config("optimize takes at most one limit".into())),
    };
    let out = cfg.out_path()?;
    let (dataset, manifest) = load_dataset(cfg.dataset_root()?)?;
    let ga = GaConfig {
        dimension_limit: limit,
        ..cfg.ga.clone()
    };
    let record = evolve(&dataset, cfg.descriptor, &ga)?;
    write_outputs(
        out,
        &[
            (PathBuf::from("genome.txt"), record.best_genome.to_line()),
            (PathBuf::from("evolution.csv"), record.log_csv()),
            (PathBuf::from("manifest.json"), manifest.to_json()),
        ],
    )?;
    Ok(record)
}

/// Runs the cross-validated comparison and writes the report tree under `out`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<MetricsReport> {
    let out = cfg.out_path()?;
    let root = cfg.dataset_root()?;
    let (dataset, manifest) = load_dataset(root)?;
    let plan = kfold_split(dataset.len(), cfg.folds, cfg.ga.seed)?;
    let exp = ExperimentConfig::new(cfg.descriptor, cfg.ga.clone(), cfg.learned_methods());
    let mut output = run_experiment(&dataset, &exp, &plan)?;
    output.report.dataset = Some(root.to_path_buf());
    output.report.header.timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs());
    let mut files = output.files();
    files.push((PathBuf::from("manifest.json"), manifest.to_json()));
    write_outputs(out, &files)?;
    Ok(output.report)
}
