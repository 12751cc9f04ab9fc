//! Workloads shared by the criterion benches.

use labelforge_core::candidates::{LayerConfig, Problem};
use labelforge_core::geometry::{LabelBox, Point};
use labelforge_core::optimizer::OptimizerConfig;
use labelforge_core::{synthetic, PipelineConfig};

pub fn washington_problem() -> Problem {
    Problem::build(synthetic::washington(1), LayerConfig::default()).expect("fixture builds")
}

pub fn dense_problem() -> Problem {
    Problem::build(synthetic::dense(1), LayerConfig::default()).expect("fixture builds")
}

/// Deterministic spread of rotated boxes; neighbours overlap about half the time.
pub fn box_pairs(n: usize) -> Vec<(LabelBox, LabelBox)> {
    (0..n)
        .map(|i| {
            let t = i as f64;
            let a = LabelBox::new(Point::new(0.0, 0.0), 6.0, 2.0, t * 0.37);
            let b = LabelBox::new(Point::new((t * 0.71).sin() * 6.0, (t * 1.13).cos() * 4.0), 5.0, 1.5, t * 0.53);
            (a, b)
        })
        .collect()
}

/// Short pipeline run used to compare worker counts.
pub fn pipeline_config(workers: usize, iterations: usize) -> PipelineConfig {
    PipelineConfig {
        workers,
        exchange_interval: (iterations / 4).max(1),
        optimizer: OptimizerConfig { iterations, seed: 1, ..Default::default() },
        ..Default::default()
    }
}
