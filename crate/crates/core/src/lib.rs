//! Label placement for mixed point, line and area features.
//!
//! The pipeline generates 24 layered candidate positions per feature,
//! freezes polygons that are already conflict-free, searches the remaining
//! assignment space with a hybrid genetic / discrete differential evolution
//! optimizer run as cooperating islands, and finally slides labels that
//! still overlap map features.

pub mod candidates;
pub mod geometry;
pub mod index;
pub mod io;
pub mod optimizer;
pub mod parallel;
pub mod pipeline;
pub mod quality;
pub mod sliding;
pub mod synthetic;

pub use candidates::{CandidatePosition, CandidateSet, Feature, LabelSpec, LayerConfig, Orientation, Problem};
pub use geometry::{FeatureKind, Geometry, LabelBox, Point, Polygon, Polyline};
pub use io::{Dataset, LabelDefaults, PlacementReport};
pub use optimizer::{Chromosome, InitMode, MutationDirection, OptimizerConfig, RunTrace};
pub use parallel::{ExchangeMessage, ParallelError, TaskTiming, WorkerPlan};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineOutcome};
pub use quality::{FitnessTable, Placement, QualityWeights, ScoreBreakdown, Scorer};
pub use sliding::{SlideConfig, SlideReport};
