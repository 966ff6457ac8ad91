//! Genetic search over quantization genomes.
//!
//! Each generation is evaluated, its best individuals are recorded, and the
//! next generation is bred by elitism, tournament selection, two-point
//! crossover and one-point mutation. The returned genome is the best one
//! recorded across all generations.
//!
//! Randomness comes from a single seeded ChaCha stream consumed only by the
//! sequential breeding loop. Fitness evaluation runs in parallel but is
//! merged in population order, so a given seed always yields the same record.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::descriptors::{extract, FeatureVector};
use crate::error::{Error, Result};
use crate::quantizer::{Descriptor, QuantizationGenome, DEFAULT_INTERVALS};
use crate::retrieval::{mean_ffp4, Ffp4Config};

/// Fitness assigned to genomes whose feature dimension exceeds the limit.
pub const OVER_LIMIT_FITNESS: f64 = -1.0;

pub type GaRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    /// Breeding steps after the initial population.
    pub generations: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub tournament_size: usize,
    pub elitism_fraction: f64,
    pub top_k_recorded: usize,
    pub seed: u64,
    /// Reference intervals per axis.
    pub intervals: usize,
    /// Maximum feature dimension; `None` runs unconstrained.
    pub dimension_limit: Option<usize>,
    pub ffp4: Ffp4Config,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 200,
            generations: 200,
            crossover_probability: 0.60,
            mutation_probability: 0.40,
            tournament_size: 5,
            elitism_fraction: 0.01,
            top_k_recorded: 1,
            seed: 0,
            intervals: DEFAULT_INTERVALS,
            dimension_limit: None,
            ffp4: Ffp4Config::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        for (name, p) in [
            ("crossover probability", self.crossover_probability),
            ("mutation probability", self.mutation_probability),
            ("elitism fraction", self.elitism_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        if self.tournament_size == 0 || self.population_size < self.tournament_size {
            return bad(format!(
                "need population ({}) >= tournament ({}) >= 1",
                self.population_size, self.tournament_size
            ));
        }
        if self.top_k_recorded == 0 {
            return bad("top_k_recorded must be at least 1".into());
        }
        if self.dimension_limit == Some(0) {
            return bad("dimension limit must be positive".into());
        }
        Ffp4Config::new(self.ffp4.k8, self.ffp4.k9)?;
        QuantizationGenome::baseline(1, self.intervals)?;
        Ok(())
    }

    /// Individuals carried over unchanged each generation.
    pub fn elite_count(&self) -> usize {
        let n = (self.elitism_fraction * self.population_size as f64).round() as usize;
        n.max(1).min(self.population_size)
    }

    pub fn rng(&self) -> GaRng {
        GaRng::seed_from_u64(self.seed)
    }
}

pub fn random_genome(intervals: usize, rng: &mut impl Rng) -> QuantizationGenome {
    let bits = (0..3 * intervals).map(|_| rng.gen::<bool>()).collect();
    QuantizationGenome::repair(bits).expect("length is 3·intervals")
}

pub fn init_population(cfg: &GaConfig, rng: &mut impl Rng) -> Vec<QuantizationGenome> {
    (0..cfg.population_size)
        .map(|_| random_genome(cfg.intervals, rng))
        .collect()
}

/// Draws `tournament_size` indices with replacement and returns the fittest;
/// equal fitness goes to the lower population index.
pub fn tournament_select(fitnesses: &[f64], tournament_size: usize, rng: &mut impl Rng) -> usize {
    assert!(!fitnesses.is_empty(), "tournament over an empty population");
    let mut best = rng.gen_range(0..fitnesses.len());
    for _ in 1..tournament_size {
        let i = rng.gen_range(0..fitnesses.len());
        if fitnesses[i] > fitnesses[best] || (fitnesses[i] == fitnesses[best] && i < best) {
            best = i;
        }
    }
    best
}

/// Swaps the segment `[p1, p2)` between two parents and repairs both children.
pub fn crossover_at(
    a: &QuantizationGenome,
    b: &QuantizationGenome,
    p1: usize,
    p2: usize,
) -> Result<(QuantizationGenome, QuantizationGenome)> {
    let len = a.bits().len();
    if b.bits().len() != len {
        return Err(Error::InvalidGenome(format!(
            "crossover of genomes with lengths {len} and {}",
            b.bits().len()
        )));
    }
    if p1 > p2 || p2 > len {
        return Err(Error::InvalidArgument(format!(
            "cut points {p1}..{p2} invalid for length {len}"
        )));
    }
    let mut x = a.bits().to_vec();
    let mut y = b.bits().to_vec();
    x[p1..p2].swap_with_slice(&mut y[p1..p2]);
    Ok((QuantizationGenome::repair(x)?, QuantizationGenome::repair(y)?))
}

/// Two-point crossover with cut points drawn uniformly from `0..=len`.
pub fn crossover_two_point(
    a: &QuantizationGenome,
    b: &QuantizationGenome,
    rng: &mut impl Rng,
) -> Result<(QuantizationGenome, QuantizationGenome)> {
    let len = a.bits().len();
    let c1 = rng.gen_range(0..=len);
    let c2 = rng.gen_range(0..=len);
    crossover_at(a, b, c1.min(c2), c1.max(c2))
}

/// With probability `probability`, flips one uniformly chosen bit (then repairs).
pub fn mutate_one_point(
    genome: &QuantizationGenome,
    probability: f64,
    rng: &mut impl Rng,
) -> QuantizationGenome {
    if probability > 0.0 && rng.gen_bool(probability) {
        let pos = rng.gen_range(0..genome.bits().len());
        genome.with_flipped(pos)
    } else {
        genome.clone()
    }
}

/// Scores genomes by mean FFP4 over a fixed training set.
#[derive(Debug, Clone)]
pub struct FitnessFunction<'a> {
    training: &'a LabeledDataset,
    labels: Vec<usize>,
    descriptor: Descriptor,
    dimension_limit: Option<usize>,
    ffp4: Ffp4Config,
}

impl<'a> FitnessFunction<'a> {
    pub fn new(training: &'a LabeledDataset, descriptor: Descriptor, cfg: &GaConfig) -> Self {
        FitnessFunction {
            training,
            labels: training.labels(),
            descriptor,
            dimension_limit: cfg.dimension_limit,
            ffp4: cfg.ffp4,
        }
    }

    pub fn features(&self, genome: &QuantizationGenome) -> Result<Vec<FeatureVector>> {
        let map = genome.decode();
        self.training
            .items()
            .par_iter()
            .map(|item| extract(&item.image, &map, self.descriptor))
            .collect()
    }

    /// Mean FFP4, or [`OVER_LIMIT_FITNESS`] when the genome's dimension exceeds the limit.
    pub fn evaluate(&self, genome: &QuantizationGenome) -> Result<f64> {
        if let Some(limit) = self.dimension_limit {
            if genome.dimension(self.descriptor) > limit {
                return Ok(OVER_LIMIT_FITNESS);
            }
        }
        let features = self.features(genome)?;
        mean_ffp4(&features, &self.labels, &self.ffp4)
    }
}

pub fn fitness(
    genome: &QuantizationGenome,
    training: &LabeledDataset,
    descriptor: Descriptor,
    cfg: &GaConfig,
) -> Result<f64> {
    FitnessFunction::new(training, descriptor, cfg).evaluate(genome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_dimension: usize,
    pub best_genome: String,
    /// The `top_k_recorded` best `(genome, fitness)` pairs, best first.
    pub top: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    pub descriptor: Descriptor,
    /// Generation 0 is the initial population.
    pub generations: Vec<GenerationRecord>,
    pub best_genome: QuantizationGenome,
    pub best_fitness: f64,
    pub best_generation: usize,
    /// Every fitness evaluation performed, in evaluation order.
    pub evaluations: Vec<(QuantizationGenome, f64)>,
}

impl EvolutionRecord {
    pub fn best_dimension(&self) -> usize {
        self.best_genome.dimension(self.descriptor)
    }

    /// Evolution log: one CSV row per generation.
    pub fn log_csv(&self) -> String {
        let mut out =
            String::from("generation,best_fitness,mean_fitness,best_dimension,best_genome_bits\n");
        for g in &self.generations {
            writeln!(
                out,
                "{},{},{},{},{}",
                g.generation, g.best_fitness, g.mean_fitness, g.best_dimension, g.best_genome
            )
            .expect("write to String");
        }
        out
    }
}

/// Indices sorted by descending fitness, ties by ascending index.
fn rank_by_fitness(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
    order
}

struct Evaluator<'a> {
    function: FitnessFunction<'a>,
    cache: Option<HashMap<QuantizationGenome, f64>>,
    evaluations: Vec<(QuantizationGenome, f64)>,
}

impl Evaluator<'_> {
    fn evaluate_population(&mut self, population: &[QuantizationGenome]) -> Result<Vec<f64>> {
        let pending: Vec<&QuantizationGenome> = match &self.cache {
            Some(cache) => {
                let mut seen = std::collections::HashSet::new();
                population
                    .iter()
                    .filter(|g| !cache.contains_key(*g) && seen.insert(*g))
                    .collect()
            }
            None => population.iter().collect(),
        };
        let scores = pending
            .par_iter()
            .map(|g| self.function.evaluate(g))
            .collect::<Result<Vec<f64>>>()?;
        for (g, &s) in pending.iter().zip(&scores) {
            self.evaluations.push(((*g).clone(), s));
        }
        match &mut self.cache {
            Some(cache) => {
                for (g, s) in pending.into_iter().zip(scores) {
                    cache.insert(g.clone(), s);
                }
                Ok(population.iter().map(|g| cache[g]).collect())
            }
            None => Ok(scores),
        }
    }
}

fn run(
    training: &LabeledDataset,
    descriptor: Descriptor,
    cfg: &GaConfig,
    memoize: bool,
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let mut rng = cfg.rng();
    let mut evaluator = Evaluator {
        function: FitnessFunction::new(training, descriptor, cfg),
        cache: memoize.then(HashMap::new),
        evaluations: Vec::new(),
    };
    let mut population = init_population(cfg, &mut rng);
    let mut generations = Vec::with_capacity(cfg.generations + 1);
    let mut best: Option<(QuantizationGenome, f64, usize)> = None;

    for generation in 0..=cfg.generations {
        let fitnesses = evaluator.evaluate_population(&population)?;
        let order = rank_by_fitness(&fitnesses);
        let top_index = order[0];
        let top: Vec<(String, f64)> = order
            .iter()
            .take(cfg.top_k_recorded)
            .map(|&i| (population[i].to_string(), fitnesses[i]))
            .collect();
        generations.push(GenerationRecord {
            generation,
            best_fitness: fitnesses[top_index],
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            best_dimension: population[top_index].dimension(descriptor),
            best_genome: population[top_index].to_string(),
            top,
        });
        if best.as_ref().is_none_or(|b| fitnesses[top_index] > b.1) {
            best = Some((population[top_index].clone(), fitnesses[top_index], generation));
        }
        if generation == cfg.generations {
            break;
        }

        let mut next: Vec<QuantizationGenome> = order
            .iter()
            .take(cfg.elite_count())
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population_size {
            let a = &population[tournament_select(&fitnesses, cfg.tournament_size, &mut rng)];
            let b = &population[tournament_select(&fitnesses, cfg.tournament_size, &mut rng)];
            let (c1, c2) = if rng.gen_bool(cfg.crossover_probability) {
                crossover_two_point(a, b, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            next.push(mutate_one_point(&c1, cfg.mutation_probability, &mut rng));
            if next.len() < cfg.population_size {
                next.push(mutate_one_point(&c2, cfg.mutation_probability, &mut rng));
            }
        }
        population = next;
    }

    let (best_genome, best_fitness, best_generation) = best.expect("at least one generation");
    Ok(EvolutionRecord {
        descriptor,
        generations,
        best_genome,
        best_fitness,
        best_generation,
        evaluations: evaluator.evaluations,
    })
}

/// Runs the genetic search, memoizing fitness by genome.
pub fn evolve(
    training: &LabeledDataset,
    descriptor: Descriptor,
    cfg: &GaConfig,
) -> Result<EvolutionRecord> {
    run(training, descriptor, cfg, true)
}

/// Same search as [`evolve`] but re-evaluates every individual.
pub fn evolve_uncached(
    training: &LabeledDataset,
    descriptor: Descriptor,
    cfg: &GaConfig,
) -> Result<EvolutionRecord> {
    run(training, descriptor, cfg, false)
}
