//! Synthetic worlds, a virtual LiDAR and camera, and a planning benchmark
//! for the `travmap` pipeline.

pub mod bench;
pub mod sensor;
pub mod trial;
pub mod world;

pub use bench::{
    benchmark, default_suite, mode_label, BenchOptions, BenchReport, Suite, SummaryRow, MODES,
};
pub use sensor::{camera_at, render, sense, Frame, Render, SensorConfig};
pub use trial::{
    build_map, evaluate, footprint_hazard, replay, run_trial, survey, survey_poses, Hazard,
    MappedWorld, SurveyConfig, TrialConfig, TrialOutcome, TrialResult,
};
pub use world::{
    generate_world, generate_world_with_texel, Feature, Scatter, ScenarioSpec, Solid, World,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Pipeline(#[from] travmap::Error),
}
