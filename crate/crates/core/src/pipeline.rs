//! End-to-end run: scatter candidate generation, island optimization,
//! sliding repair and report assembly.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{Feature, LayerConfig, Problem};
use crate::io::{PlacementReport, RunSummary, Timings};
use crate::optimizer::{Chromosome, OptimizerConfig};
use crate::parallel::{
    completion_time, optimize_islands, scatter_generate_gather, IslandOutcome, ParallelError, TaskTiming, WorkerPlan,
    DEFAULT_EXCHANGE_INTERVAL,
};
use crate::quality::{FitnessTable, Placement, QualityWeights, ScoreBreakdown, Scorer};
use crate::sliding::{apply_sliding, SlideConfig, SlideReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub workers: usize,
    pub exchange_interval: usize,
    pub exchange_timeout_secs: f64,
    /// Drops the line-priority term and skips sliding for labels that
    /// conflict with more than one kind of feature.
    pub strict_paper: bool,
    pub sliding_enabled: bool,
    pub optimizer: OptimizerConfig,
    pub weights: QualityWeights,
    pub layers: LayerConfig,
    pub sliding: SlideConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            workers: 1,
            exchange_interval: DEFAULT_EXCHANGE_INTERVAL,
            exchange_timeout_secs: 600.0,
            strict_paper: false,
            sliding_enabled: true,
            optimizer: OptimizerConfig::default(),
            weights: QualityWeights::default(),
            layers: LayerConfig::default(),
            sliding: SlideConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("worker error: {0}")]
    Worker(String),
}

impl From<ParallelError> for PipelineError {
    fn from(e: ParallelError) -> Self {
        match e {
            ParallelError::InvalidWorkerCount | ParallelError::InvalidExchangeInterval | ParallelError::Optimizer(_) => {
                PipelineError::Config(e.to_string())
            }
            ParallelError::Candidate(_) => PipelineError::Data(e.to_string()),
            ParallelError::WorkerFailure { .. } | ParallelError::ExchangeTimeout { .. } => {
                PipelineError::Worker(e.to_string())
            }
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
        if self.workers == 0 {
            return Err(cfg(&ParallelError::InvalidWorkerCount));
        }
        if self.exchange_interval == 0 {
            return Err(cfg(&ParallelError::InvalidExchangeInterval));
        }
        if !(self.exchange_timeout_secs > 0.0 && self.exchange_timeout_secs.is_finite()) {
            return Err(PipelineError::Config("exchange timeout must be positive".into()));
        }
        self.optimizer.validate().map_err(|e| cfg(&e))?;
        self.weights.validate().map_err(|e| cfg(&e))?;
        self.layers.validate().map_err(|e| cfg(&e))?;
        self.sliding.validate().map_err(|e| cfg(&e))?;
        Ok(())
    }

    pub fn slide_config(&self) -> SlideConfig {
        SlideConfig { strict: self.sliding.strict || self.strict_paper, ..self.sliding.clone() }
    }

    pub fn scorer<'a>(&self, features: &'a [Feature]) -> Scorer<'a> {
        Scorer::new(features, self.weights).strict(self.strict_paper)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub problem: Problem,
    pub best: Chromosome,
    pub islands: IslandOutcome,
    pub before: Placement,
    pub after: Placement,
    pub before_score: ScoreBreakdown,
    pub after_score: ScoreBreakdown,
    pub slide: SlideReport,
    /// Per worker: candidate tasks followed by its island run.
    pub timing: TaskTiming,
    pub wall: Duration,
}

impl PipelineOutcome {
    pub fn makespan(&self) -> f64 {
        completion_time(&self.timing).makespan
    }

    pub fn generations(&self) -> usize {
        self.islands.traces.iter().map(|t| t.best.len()).max().unwrap_or(0)
    }

    pub fn report(&self, cfg: &PipelineConfig, with_timings: bool) -> PlacementReport {
        let scorer = cfg.scorer(&self.problem.features);
        let run = RunSummary {
            features: self.problem.len(),
            searched: self.problem.q(),
            iterations: cfg.optimizer.iterations,
            generations: self.generations(),
            population: cfg.optimizer.population_size,
            workers: cfg.workers,
            seed: cfg.optimizer.seed,
            exchange_interval: cfg.exchange_interval,
            initial_best: self.islands.traces.iter().map(|t| t.initial_best).fold(f64::INFINITY, f64::min),
            best_fitness: self.best.fitness,
            timings: with_timings
                .then(|| Timings { wall_seconds: self.wall.as_secs_f64(), makespan_seconds: self.makespan() }),
        };
        PlacementReport::build(&self.problem, &scorer, &self.before, &self.after, &self.slide, run)
    }
}

pub fn run_pipeline(features: Vec<Feature>, cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    cfg.validate()?;
    let started = Instant::now();
    let plan = WorkerPlan::new(features.len(), cfg.workers, cfg.optimizer.seed, cfg.exchange_interval)?;
    let gathered = scatter_generate_gather(features, cfg.layers, &plan)?;
    let problem = gathered.problem;
    log::info!("{} features, {} in the search space", problem.len(), problem.q());

    let scorer = cfg.scorer(&problem.features);
    let table = FitnessTable::new(&problem, &scorer);
    let timeout = Duration::from_secs_f64(cfg.exchange_timeout_secs);
    let islands = optimize_islands(&table, &cfg.optimizer, &plan, timeout)?;
    let best = islands.best.clone();

    let before = Placement::from_genes(&problem, &best.genes);
    let before_score = scorer.total_score(&before);
    let (after, slide) = if cfg.sliding_enabled {
        apply_sliding(&before, &problem, &scorer, &cfg.slide_config()).map_err(|e| PipelineError::Config(e.to_string()))?
    } else {
        let report = SlideReport {
            conflicted: before_score.lf_conflict_count,
            score_before: before_score.rho2,
            score_after: before_score.rho2,
            ..Default::default()
        };
        (before.clone(), report)
    };
    let after_score = scorer.total_score(&after);

    let mut timing = gathered.timing;
    for (tasks, island) in timing.tasks.iter_mut().zip(&islands.timing.tasks) {
        tasks.extend(island);
    }
    Ok(PipelineOutcome {
        problem,
        best,
        islands,
        before,
        after,
        before_score,
        after_score,
        slide,
        timing,
        wall: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn quick() -> PipelineConfig {
        PipelineConfig {
            optimizer: OptimizerConfig { iterations: 200, population_size: 30, ..Default::default() },
            exchange_interval: 50,
            ..Default::default()
        }
    }

    #[test]
    fn runs_and_reports() {
        let cfg = PipelineConfig { workers: 2, ..quick() };
        let out = run_pipeline(synthetic::cluster(4, 8), &cfg).unwrap();
        assert!(out.after_score.rho2 <= out.before_score.rho2 + 1e-9);
        assert_eq!(out.generations(), 200);
        let r = out.report(&cfg, false);
        assert_eq!(r.features.len(), 8);
        assert_eq!(r.row_totals().0, r.after_sliding.lf_conflict_count);
        let again = run_pipeline(synthetic::cluster(4, 8), &cfg).unwrap().report(&cfg, false);
        assert_eq!(r.to_canonical_json(), again.to_canonical_json());
    }

    #[test]
    fn config_errors() {
        let bad = PipelineConfig { workers: 0, ..quick() };
        assert!(matches!(run_pipeline(Vec::new(), &bad), Err(PipelineError::Config(_))));
        let bad = PipelineConfig { weights: QualityWeights { w1: 1.0, w2: 5.0, w3: 1.0, w4: 1.0 }, ..quick() };
        assert!(matches!(bad.validate(), Err(PipelineError::Config(_))));
    }

    #[test]
    fn empty_input() {
        let out = run_pipeline(Vec::new(), &quick()).unwrap();
        assert_eq!(out.problem.q(), 0);
        assert!(out.after.is_empty());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = quick();
        let text = toml::to_string(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: PipelineConfig = toml::from_str("workers = 3\n[optimizer]\nseed = 9\n").unwrap();
        assert_eq!(partial.workers, 3);
        assert_eq!(partial.optimizer.seed, 9);
        assert_eq!(partial.optimizer.population_size, 100);
    }
}
