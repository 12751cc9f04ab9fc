//! Hybrid genetic / discrete differential evolution search over candidate
//! indices.
//!
//! Each generation keeps the current best chromosome and fills the rest of
//! the population with one-point crossover children (the GA share) and
//! `r1 + F·(r2 − r3)` difference children (the DDE share). Every child is
//! mutated and evaluated against a precomputed [`FitnessTable`].

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::FULL_SET;
use crate::quality::FitnessTable;

/// Largest candidate index.
pub const MAX_GENE: u8 = (FULL_SET - 1) as u8;

pub type Rng64 = ChaCha8Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// One member holds every feature's lowest-base-score candidate.
    #[default]
    Elite,
    Random,
}

/// Which way a mutated gene steps relative to the drawn threshold `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MutationDirection {
    /// `g > x` steps up, `g < x` steps down.
    #[default]
    AwayFromDraw,
    /// `g > x` steps down, `g < x` steps up.
    TowardDraw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub population_size: usize,
    pub iterations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub ga_fraction: f64,
    pub dde_scale: f64,
    pub seed: u64,
    pub early_stop_threshold: Option<f64>,
    pub init_mode: InitMode,
    pub mutation_direction: MutationDirection,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population_size: 100,
            iterations: 10_000,
            crossover_rate: 0.5,
            mutation_rate: 0.01,
            ga_fraction: 0.70,
            dde_scale: 0.5,
            seed: 0,
            early_stop_threshold: None,
            init_mode: InitMode::Elite,
            mutation_direction: MutationDirection::AwayFromDraw,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidConfig(m));
        if self.population_size < 4 {
            return bad(format!("population size must be at least 4, got {}", self.population_size));
        }
        for (name, v) in [
            ("crossover rate", self.crossover_rate),
            ("mutation rate", self.mutation_rate),
            ("GA fraction", self.ga_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !self.dde_scale.is_finite() {
            return bad("DDE scale factor must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<u8>,
    pub fitness: f64,
}

impl Chromosome {
    pub fn evaluated(genes: Vec<u8>, table: &FitnessTable) -> Self {
        let fitness = table.evaluate(&genes);
        Chromosome { genes, fitness }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunTrace {
    /// Best fitness of the initial population.
    pub initial_best: f64,
    /// Best fitness after each generation.
    pub best: Vec<f64>,
    /// Generation (1-based) of the last strict improvement; 0 if none.
    pub last_improvement: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunTrace {
    pub fn final_best(&self) -> f64 {
        self.best.last().copied().unwrap_or(self.initial_best)
    }
}

/// Index of the lowest-fitness member; ties go to the lowest index.
pub fn best_index(pop: &[Chromosome]) -> usize {
    let mut best = 0;
    for (i, c) in pop.iter().enumerate().skip(1) {
        if c.fitness < pop[best].fitness {
            best = i;
        }
    }
    best
}

/// Index of the highest-fitness member; ties go to the highest index.
pub fn worst_index(pop: &[Chromosome]) -> usize {
    let mut worst = 0;
    for (i, c) in pop.iter().enumerate().skip(1) {
        if c.fitness >= pop[worst].fitness {
            worst = i;
        }
    }
    worst
}

fn random_genes(q: usize, rng: &mut Rng64) -> Vec<u8> {
    (0..q).map(|_| rng.random_range(0..=MAX_GENE)).collect()
}

/// Initial population. Members `1..np` are uniform random; member 0 is the
/// elite (all genes 0, the best candidate of each sorted set) or, in random
/// mode, one more random draw taken after the others so both modes share
/// the same random members.
pub fn init_population(table: &FitnessTable, cfg: &OptimizerConfig, rng: &mut Rng64) -> Vec<Chromosome> {
    let q = table.q();
    let mut pop = Vec::with_capacity(cfg.population_size);
    pop.push(Chromosome { genes: Vec::new(), fitness: 0.0 });
    for _ in 1..cfg.population_size {
        pop.push(Chromosome::evaluated(random_genes(q, rng), table));
    }
    let first = match cfg.init_mode {
        InitMode::Elite => vec![0; q],
        InitMode::Random => random_genes(q, rng),
    };
    pop[0] = Chromosome::evaluated(first, table);
    pop
}

/// One-point crossover: genes `[0, x)` from `pj`, `[x, Q)` from `pk`.
pub fn ga_offspring(pj: &[u8], pk: &[u8], x: usize) -> Vec<u8> {
    debug_assert_eq!(pj.len(), pk.len());
    let x = x.min(pj.len());
    pj[..x].iter().chain(&pk[x..]).copied().collect()
}

/// `r1 + F·(r2 − r3)` per gene, rounded half away from zero and clamped to
/// the candidate range.
pub fn dde_offspring(r1: &[u8], r2: &[u8], r3: &[u8], scale: f64) -> Vec<u8> {
    r1.iter()
        .zip(r2)
        .zip(r3)
        .map(|((&a, &b), &c)| {
            let v = a as f64 + scale * (b as f64 - c as f64);
            v.round().clamp(0.0, MAX_GENE as f64) as u8
        })
        .collect()
}

/// Steps a gene by one relative to the drawn threshold `x`.
pub fn mutate_gene(gene: u8, x: u8, direction: MutationDirection) -> u8 {
    use std::cmp::Ordering::*;
    let step: i16 = match (gene.cmp(&x), direction) {
        (Equal, _) => 0,
        (Greater, MutationDirection::AwayFromDraw) | (Less, MutationDirection::TowardDraw) => 1,
        (Less, MutationDirection::AwayFromDraw) | (Greater, MutationDirection::TowardDraw) => -1,
    };
    (gene as i16 + step).clamp(0, MAX_GENE as i16) as u8
}

/// Each gene mutates independently with probability `rate`, against a fresh
/// threshold drawn from `[0, 22]`.
pub fn mutate(genes: &mut [u8], rate: f64, direction: MutationDirection, rng: &mut Rng64) {
    for g in genes.iter_mut() {
        if rng.random_bool(rate) {
            let x = rng.random_range(0..MAX_GENE);
            *g = mutate_gene(*g, x, direction);
        }
    }
}

fn tournament(pop: &[Chromosome], rng: &mut Rng64) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if pop[b].fitness < pop[a].fitness {
        b
    } else {
        a
    }
}

/// Number of GA children among `children` offspring.
pub fn ga_share(children: usize, ga_fraction: f64) -> usize {
    ((children as f64) * ga_fraction).round() as usize
}

/// Produces the next generation: the current best survives, then GA and DDE
/// children fill the remaining slots.
pub fn evolve(pop: &[Chromosome], cfg: &OptimizerConfig, table: &FitnessTable, rng: &mut Rng64) -> Vec<Chromosome> {
    let np = pop.len();
    let q = table.q();
    let mut next = Vec::with_capacity(np);
    next.push(pop[best_index(pop)].clone());
    let children = np - 1;
    let n_ga = ga_share(children, cfg.ga_fraction);
    for _ in 0..n_ga {
        let j = tournament(pop, rng);
        let mut k = tournament(pop, rng);
        while k == j {
            k = tournament(pop, rng);
        }
        let mut genes = if rng.random_bool(cfg.crossover_rate) {
            let x = rng.random_range(0..=q);
            ga_offspring(&pop[j].genes, &pop[k].genes, x)
        } else {
            pop[j].genes.clone()
        };
        mutate(&mut genes, cfg.mutation_rate, cfg.mutation_direction, rng);
        next.push(Chromosome::evaluated(genes, table));
    }
    for _ in n_ga..children {
        let r = sample(rng, np, 3);
        let mut genes = dde_offspring(&pop[r.index(0)].genes, &pop[r.index(1)].genes, &pop[r.index(2)].genes, cfg.dde_scale);
        mutate(&mut genes, cfg.mutation_rate, cfg.mutation_direction, rng);
        next.push(Chromosome::evaluated(genes, table));
    }
    next
}

/// A single-threaded evolving population with its own generator.
#[derive(Debug, Clone)]
pub struct Optimizer<'t> {
    table: &'t FitnessTable,
    cfg: OptimizerConfig,
    rng: Rng64,
    population: Vec<Chromosome>,
    generation: usize,
    trace: RunTrace,
    started: Instant,
}

impl<'t> Optimizer<'t> {
    /// Seeds the generator from `cfg.seed` and builds the initial population.
    pub fn new(table: &'t FitnessTable, cfg: OptimizerConfig) -> Result<Self, OptimizerError> {
        cfg.validate()?;
        let started = Instant::now();
        let mut rng = Rng64::seed_from_u64(cfg.seed);
        let population = init_population(table, &cfg, &mut rng);
        let initial_best = population[best_index(&population)].fitness;
        Ok(Optimizer {
            table,
            cfg,
            rng,
            population,
            generation: 0,
            trace: RunTrace { initial_best, ..Default::default() },
            started,
        })
    }

    pub fn population(&self) -> &[Chromosome] {
        &self.population
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn best(&self) -> &Chromosome {
        &self.population[best_index(&self.population)]
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    /// True once the best fitness has reached the early-stop floor.
    pub fn reached_threshold(&self) -> bool {
        self.cfg.early_stop_threshold.is_some_and(|t| self.best().fitness <= t)
    }

    pub fn step(&mut self) {
        let previous = self.best().fitness;
        self.population = evolve(&self.population, &self.cfg, self.table, &mut self.rng);
        self.generation += 1;
        let best = self.best().fitness;
        if best < previous {
            self.trace.last_improvement = self.generation;
        }
        self.trace.best.push(best);
    }

    /// Replaces the worst member with `c`.
    pub fn inject(&mut self, c: Chromosome) {
        let w = worst_index(&self.population);
        self.population[w] = c;
    }

    /// Runs until `until` generations have elapsed or the threshold is hit.
    pub fn run_until(&mut self, until: usize) {
        while self.generation < until && !self.reached_threshold() {
            self.step();
        }
        self.trace.wall_time = self.started.elapsed();
    }

    pub fn finish(self) -> (Chromosome, RunTrace) {
        let best = self.best().clone();
        let mut trace = self.trace;
        trace.wall_time = self.started.elapsed();
        (best, trace)
    }
}

/// Evolves for `cfg.iterations` generations (or until the early-stop
/// threshold) and returns the best chromosome found with its trace.
pub fn run(table: &FitnessTable, cfg: &OptimizerConfig) -> Result<(Chromosome, RunTrace), OptimizerError> {
    let mut opt = Optimizer::new(table, cfg.clone())?;
    opt.run_until(cfg.iterations);
    Ok(opt.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{point_feature, LayerConfig, Problem};
    use crate::quality::{QualityWeights, Scorer};
    use proptest::prelude::*;
    use rand::Rng;

    fn toy_problem() -> Problem {
        let features = vec![
            point_feature(0, 0.0, 0.0, "alpha", 1.0, 2.0),
            point_feature(1, 6.0, 0.5, "beta", 1.0, 2.0),
            point_feature(2, 3.0, 3.0, "gamma", 1.0, 2.0),
        ];
        Problem::build(features, LayerConfig::default()).unwrap()
    }

    fn table(p: &Problem) -> FitnessTable {
        FitnessTable::new(p, &Scorer::new(&p.features, QualityWeights::default()))
    }

    #[test]
    fn splice_examples() {
        assert_eq!(ga_offspring(&[1, 2, 3], &[4, 5, 6], 1), vec![1, 5, 6]);
        assert_eq!(ga_offspring(&[1, 2, 3], &[4, 5, 6], 0), vec![4, 5, 6]);
        assert_eq!(ga_offspring(&[1, 2, 3], &[4, 5, 6], 3), vec![1, 2, 3]);
        assert_eq!(ga_offspring(&[7, 7], &[7, 7], 1), vec![7, 7]);
    }

    #[test]
    fn difference_examples() {
        assert_eq!(dde_offspring(&[10], &[8], &[4], 0.5), vec![12]);
        assert_eq!(dde_offspring(&[5, 9], &[3, 3], &[3, 3], 0.5), vec![5, 9]);
        assert_eq!(dde_offspring(&[23], &[23], &[0], 0.5), vec![23]);
        // 2 + 0.5 * (0 - 5) = -0.5 rounds away from zero, then clamps
        assert_eq!(dde_offspring(&[2], &[0], &[5], 0.5), vec![0]);
        // 4 + 0.5 * 1 = 4.5 rounds up
        assert_eq!(dde_offspring(&[4], &[1], &[0], 0.5), vec![5]);
    }

    #[test]
    fn mutation_examples() {
        assert_eq!(mutate_gene(5, 3, MutationDirection::AwayFromDraw), 6);
        assert_eq!(mutate_gene(5, 10, MutationDirection::AwayFromDraw), 4);
        assert_eq!(mutate_gene(5, 5, MutationDirection::AwayFromDraw), 5);
        assert_eq!(mutate_gene(23, 3, MutationDirection::AwayFromDraw), 23);
        assert_eq!(mutate_gene(0, 10, MutationDirection::AwayFromDraw), 0);
        assert_eq!(mutate_gene(5, 3, MutationDirection::TowardDraw), 4);
        assert_eq!(mutate_gene(5, 10, MutationDirection::TowardDraw), 6);
    }

    #[test]
    fn elite_member_and_size() {
        let p = toy_problem();
        let t = table(&p);
        let cfg = OptimizerConfig::default();
        let mut rng = Rng64::seed_from_u64(1);
        let pop = init_population(&t, &cfg, &mut rng);
        assert_eq!(pop.len(), 100);
        assert_eq!(pop[0].genes, vec![0, 0, 0]);
        let mut rng2 = Rng64::seed_from_u64(1);
        assert_eq!(pop, init_population(&t, &cfg, &mut rng2));
    }

    #[test]
    fn random_mode_shares_random_members() {
        let p = toy_problem();
        let t = table(&p);
        let elite = init_population(&t, &OptimizerConfig::default(), &mut Rng64::seed_from_u64(9));
        let random = init_population(
            &t,
            &OptimizerConfig { init_mode: InitMode::Random, ..Default::default() },
            &mut Rng64::seed_from_u64(9),
        );
        assert_eq!(elite[1..], random[1..]);
        assert_ne!(elite[0], random[0]);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        assert!(OptimizerConfig { population_size: 3, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { mutation_rate: 1.5, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { ga_fraction: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn elitism_and_determinism() {
        let p = toy_problem();
        let t = table(&p);
        let cfg = OptimizerConfig { iterations: 300, seed: 4, ..Default::default() };
        let (best, trace) = run(&t, &cfg).unwrap();
        assert_eq!(trace.best.len(), 300);
        assert!(trace.best[0] <= trace.initial_best);
        assert!(trace.best.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(best.fitness, trace.final_best());
        let (best2, trace2) = run(&t, &cfg).unwrap();
        assert_eq!(best, best2);
        assert_eq!(trace.best, trace2.best);
    }

    #[test]
    fn finds_exhaustive_optimum_on_tiny_problem() {
        let p = toy_problem();
        let t = table(&p);
        assert_eq!(t.q(), 3);
        let mut optimum = f64::INFINITY;
        for a in 0..=MAX_GENE {
            for b in 0..=MAX_GENE {
                for c in 0..=MAX_GENE {
                    optimum = optimum.min(t.evaluate(&[a, b, c]));
                }
            }
        }
        let (best, _) = run(&t, &OptimizerConfig { iterations: 500, seed: 11, ..Default::default() }).unwrap();
        assert!((best.fitness - optimum).abs() < 1e-9, "{} vs {}", best.fitness, optimum);
    }

    #[test]
    fn pure_ga_generation() {
        let p = toy_problem();
        let t = table(&p);
        let cfg = OptimizerConfig { ga_fraction: 1.0, iterations: 50, ..Default::default() };
        assert_eq!(ga_share(99, 1.0), 99);
        assert_eq!(ga_share(99, 0.7), 69);
        let (_, trace) = run(&t, &cfg).unwrap();
        assert!(trace.best.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn empty_search_space() {
        let features = vec![crate::candidates::area_feature(0, &[(0.0, 0.0), (80.0, 0.0), (80.0, 20.0), (0.0, 20.0)], "lake", 1.0, 2.0).unwrap()];
        let p = Problem::build(features, LayerConfig::default()).unwrap();
        assert_eq!(p.q(), 0);
        let t = table(&p);
        let (best, _) = run(&t, &OptimizerConfig { iterations: 5, ..Default::default() }).unwrap();
        assert!(best.genes.is_empty());
        let frozen = Scorer::new(&p.features, QualityWeights::default())
            .total_score(&crate::quality::Placement::from_genes(&p, &[]));
        assert!((best.fitness - frozen.fitness).abs() < 1e-12);
    }

    #[test]
    fn early_stop() {
        let p = toy_problem();
        let t = table(&p);
        let cfg = OptimizerConfig { iterations: 1000, early_stop_threshold: Some(f64::INFINITY), ..Default::default() };
        let (_, trace) = run(&t, &cfg).unwrap();
        assert!(trace.best.is_empty());
    }

    proptest! {
        #[test]
        fn operators_stay_in_range(
            a in prop::collection::vec(0u8..=MAX_GENE, 1..12),
            seed in any::<u64>(),
            x in 0usize..13,
            scale in 0.0f64..3.0,
        ) {
            let mut rng = Rng64::seed_from_u64(seed);
            let b: Vec<u8> = a.iter().map(|_| rng.random_range(0..=MAX_GENE)).collect();
            let c: Vec<u8> = a.iter().map(|_| rng.random_range(0..=MAX_GENE)).collect();
            let mut child = ga_offspring(&a, &b, x);
            child = dde_offspring(&child, &b, &c, scale);
            mutate(&mut child, 0.5, MutationDirection::AwayFromDraw, &mut rng);
            prop_assert_eq!(child.len(), a.len());
            prop_assert!(child.iter().all(|&g| g <= MAX_GENE));
        }
    }
}
