//! Terrain traversability mapping and planning.
//!
//! LiDAR points are binned into an [`ElevationGridMap`]; each cell keeps the
//! mean of its latest heights and a histogram of semantic labels obtained by
//! projecting points into a label image. Slope (PCA normal), step height and a
//! geometric score are derived from machine limits, fused with the cell's
//! majority class, cleaned of small non-traversable regions and thresholded
//! into an occupancy grid for a Hybrid A* planner.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod config;
pub mod fusion;
pub mod geometry;
pub mod gridmap;
pub mod io;
pub mod pipeline;
pub mod planner;
pub mod postprocess;
pub mod scalar;
pub mod semantics;

use thiserror::Error;

pub use config::{PipelineConfig, ThresholdOverrides};
pub use fusion::{
    fuse, update_traversability_layer, LayerSettings, ScoreSource, TraversabilityScore,
};
pub use geometry::{
    derive_thresholds, estimate_normal, geometric_traversability, roughness, slope_of, step_height,
    GeoThresholds, GeometryError, MachineSpec, Neighborhoods, NormalEstimate,
};
pub use gridmap::{
    Cell, CellIndex, ElevationGridMap, GridSpec, InsertSummary, Pose, StampedPoint, WindowedView,
};
pub use pipeline::{FrameReport, MappingMode, MappingPipeline, StageTimings};
pub use planner::{
    collision_check, holonomic_heuristic, plan, CollisionChecker, CostField, PathPose, PlanError,
    PlannedPath, PlannerConfig, VehicleFootprint,
};
pub use postprocess::{
    find_nontraversable_regions, remove_small_regions, to_occupancy, Occupancy, OccupancyGrid,
    Region, UnknownPolicy,
};
pub use scalar::Real;
pub use semantics::{
    accumulate_labels, label_cloud, majority_label, project_point, CameraModel, LabelHistogram,
    LabelImage, LabeledPoint, SemanticClass, SemanticsError,
};

pub type Grid = GridSpec<f64>;
pub type Map = ElevationGridMap<f64>;
pub type Point = StampedPoint<f64>;
pub type Camera = CameraModel<f64>;
pub type Machine = MachineSpec<f64>;
pub type Thresholds = GeoThresholds<f64>;
pub type Occupancy2D = OccupancyGrid<f64>;
pub type Footprint = VehicleFootprint<f64>;
pub type Path = PlannedPath<f64>;
pub type Config = PipelineConfig<f64>;
pub type Pipeline = MappingPipeline<f64>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
