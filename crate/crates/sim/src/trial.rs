//! Survey, mapping, planning and ground-truth replay for single trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use travmap::{
    plan, Config, GridSpec, Map, MappingMode, MappingPipeline, Occupancy2D, Path, PathPose,
    PlanError, Pose, SemanticClass, StageTimings, UnknownPolicy, VehicleFootprint,
};

use crate::sensor::{sense, Frame, SensorConfig};
use crate::world::World;
use crate::SimError;

/// Viewpoints on a regular lattice over the world, each turning through
/// evenly spaced headings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyConfig {
    /// Viewpoints along x and y.
    pub lattice: [usize; 2],
    /// Inset of the outer viewpoints from the world edge, as a fraction of the extent.
    pub inset: f64,
    pub headings: usize,
    /// Seconds between frames.
    pub frame_interval: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            lattice: [3, 3],
            inset: 0.15,
            headings: 7,
            frame_interval: 0.025,
        }
    }
}

impl SurveyConfig {
    pub fn frame_count(&self) -> usize {
        self.lattice[0] * self.lattice[1] * self.headings
    }

    pub fn duration(&self) -> f64 {
        self.frame_interval * self.frame_count().saturating_sub(1) as f64
    }
}

/// Everything a trial needs besides the world and the query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub pipeline: Config,
    pub sensor: SensorConfig,
    pub survey: SurveyConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        let mut pipeline = Config::default();
        pipeline.unknown_policy = UnknownPolicy::Free;
        pipeline.planner.safety_margin = 0.3;
        Self {
            pipeline,
            sensor: SensorConfig::default(),
            survey: SurveyConfig::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.pipeline.validate()?;
        if self.survey.frame_count() == 0 {
            return Err(SimError::InvalidSpec(
                "survey needs at least one viewpoint and heading".into(),
            ));
        }
        if !(self.survey.frame_interval >= 0.0)
            || self.survey.duration() >= self.pipeline.window_secs
        {
            return Err(SimError::InvalidSpec(format!(
                "survey lasts {:.3} s, which must be shorter than the {:.3} s map window",
                self.survey.duration(),
                self.pipeline.window_secs
            )));
        }
        if !(self.sensor.max_range > self.sensor.min_range && self.sensor.min_range >= 0.0) {
            return Err(SimError::InvalidSpec(
                "sensor range must be increasing".into(),
            ));
        }
        Ok(())
    }

    /// Pipeline configuration with the grid resized to cover `world`.
    pub fn pipeline_for(&self, world: &World) -> Result<Config, SimError> {
        let mut cfg = self.pipeline.clone();
        cfg.grid = GridSpec::covering(
            [0.0, 0.0],
            world.extent[0],
            world.extent[1],
            cfg.grid.resolution,
        )?;
        Ok(cfg)
    }
}

pub fn survey_poses(world: &World, cfg: &SurveyConfig, sensor: &SensorConfig) -> Vec<Pose<f64>> {
    let coord = |k: usize, n: usize, extent: f64| {
        if n == 1 {
            0.5 * extent
        } else {
            extent * (cfg.inset + (1.0 - 2.0 * cfg.inset) * k as f64 / (n - 1) as f64)
        }
    };
    let mut poses = vec![];
    for b in 0..cfg.lattice[1] {
        for a in 0..cfg.lattice[0] {
            let xy = [
                coord(a, cfg.lattice[0], world.extent[0]),
                coord(b, cfg.lattice[1], world.extent[1]),
            ];
            let z = world.surface_height(xy) + sensor.mount_height;
            for h in 0..cfg.headings {
                let yaw = std::f64::consts::TAU * h as f64 / cfg.headings as f64;
                let stamp = cfg.frame_interval * poses.len() as f64;
                poses.push(Pose::from_yaw([xy[0], xy[1], z], yaw, stamp));
            }
        }
    }
    poses
}

/// Senses every survey viewpoint. Frame `k` uses noise seed `seed + k`.
pub fn survey(world: &World, cfg: &TrialConfig, seed: u64) -> Vec<Frame> {
    survey_poses(world, &cfg.survey, &cfg.sensor)
        .par_iter()
        .enumerate()
        .map(|(k, pose)| sense(world, pose, &cfg.sensor, seed.wrapping_add(k as u64)))
        .collect()
}

/// Map and occupancy grid built from a survey.
#[derive(Clone, Debug)]
pub struct MappedWorld {
    pub mode: MappingMode,
    pub map: Map,
    pub occupancy: Occupancy2D,
    pub promoted_cells: usize,
    /// Per-frame projection and insertion times, plus one traversability time.
    pub timings: Vec<StageTimings>,
}

pub fn build_map(
    frames: &[Frame],
    cfg: &Config,
    mode: MappingMode,
) -> Result<MappedWorld, SimError> {
    let mut pipeline = MappingPipeline::new(cfg.clone(), mode)?;
    let mut timings = Vec::with_capacity(frames.len() + 1);
    for f in frames {
        timings.push(
            pipeline
                .ingest(&f.cloud, Some((&f.labels, &f.camera)))?
                .timings,
        );
    }
    let now = frames.iter().map(|f| f.stamp).fold(0.0, f64::max);
    let t = std::time::Instant::now();
    pipeline.refresh(now);
    let promoted_cells = pipeline.postprocess();
    timings.push(StageTimings {
        traversability: t.elapsed(),
        ..Default::default()
    });
    let occupancy = pipeline.occupancy();
    Ok(MappedWorld {
        mode,
        map: pipeline.into_map(),
        occupancy,
        promoted_cells,
        timings,
    })
}

/// Why a replayed pose is unsafe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hazard {
    Terrain(SemanticClass),
    Slope,
    OutOfWorld,
}

impl std::fmt::Display for Hazard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Hazard::Terrain(c) => write!(f, "{c}"),
            Hazard::Slope => f.write_str("slope"),
            Hazard::OutOfWorld => f.write_str("out_of_world"),
        }
    }
}

/// Ground-truth classes that make a texel unsafe to drive over.
pub fn is_hazard_class(c: SemanticClass) -> bool {
    matches!(
        c,
        SemanticClass::Water
            | SemanticClass::Obstacle
            | SemanticClass::RockPile
            | SemanticClass::Excavator
    )
}

/// First hazard under the rectangular footprint at `pose`, judged on texel centres.
pub fn footprint_hazard(
    world: &World,
    pose: &PathPose<f64>,
    length: f64,
    width: f64,
    s_cri: f64,
) -> Option<Hazard> {
    let (s, c) = pose.theta.sin_cos();
    let (hl, hw) = (length / 2.0, width / 2.0);
    let corners = [(hl, hw), (hl, -hw), (-hl, hw), (-hl, -hw)]
        .map(|(a, b)| [pose.x + a * c - b * s, pose.y + a * s + b * c]);
    if corners.iter().any(|p| !world.contains(*p)) {
        return Some(Hazard::OutOfWorld);
    }
    let lo = [
        corners.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        corners.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
    ];
    let hi = [
        corners
            .iter()
            .map(|p| p[0])
            .fold(f64::NEG_INFINITY, f64::max),
        corners
            .iter()
            .map(|p| p[1])
            .fold(f64::NEG_INFINITY, f64::max),
    ];
    let t = world.texel;
    let i0 = (lo[0] / t).floor().max(0.0) as usize;
    let j0 = (lo[1] / t).floor().max(0.0) as usize;
    let i1 = ((hi[0] / t).ceil() as usize).min(world.nx);
    let j1 = ((hi[1] / t).ceil() as usize).min(world.ny);
    for j in j0..j1 {
        for i in i0..i1 {
            let p = world.texel_center(i, j);
            let (dx, dy) = (p[0] - pose.x, p[1] - pose.y);
            if (dx * c + dy * s).abs() >= hl || (-dx * s + dy * c).abs() >= hw {
                continue;
            }
            let class = world.label(i, j);
            if is_hazard_class(class) {
                return Some(Hazard::Terrain(class));
            }
            if world.slope(i, j) > s_cri {
                return Some(Hazard::Slope);
            }
        }
    }
    None
}

/// Replays every dense sample of `path` against ground truth with the true footprint.
pub fn replay(
    world: &World,
    path: &Path,
    footprint: &VehicleFootprint<f64>,
    s_cri: f64,
) -> Option<Hazard> {
    path.samples
        .iter()
        .find_map(|p| footprint_hazard(world, p, footprint.length, footprint.width, s_cri))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialResult {
    Success,
    NoPath,
    CollisionOnReplay,
}

impl TrialResult {
    pub fn name(self) -> &'static str {
        match self {
            TrialResult::Success => "success",
            TrialResult::NoPath => "no-path",
            TrialResult::CollisionOnReplay => "collision-on-replay",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub scenario: String,
    pub trial: usize,
    pub mode: MappingMode,
    pub goal: PathPose<f64>,
    pub result: TrialResult,
    /// Length of the returned path, if any.
    pub path_length: Option<f64>,
    pub hazard: Option<Hazard>,
    pub expansions: usize,
    pub path: Option<Path>,
}

/// Plans on `mapped` and replays the result against ground truth.
pub fn evaluate(
    world: &World,
    mapped: &MappedWorld,
    start: PathPose<f64>,
    goal: PathPose<f64>,
    cfg: &Config,
) -> Result<(TrialResult, Option<Path>, Option<Hazard>), SimError> {
    let s_cri = cfg.thresholds()?.s_cri;
    match plan(&mapped.occupancy, start, goal, &cfg.footprint, &cfg.planner) {
        Ok(path) => {
            let hazard = replay(world, &path, &cfg.footprint, s_cri);
            let result = if hazard.is_some() {
                TrialResult::CollisionOnReplay
            } else {
                TrialResult::Success
            };
            Ok((result, Some(path), hazard))
        }
        Err(PlanError::NoPath | PlanError::InvalidStart | PlanError::GoalOccupied) => {
            Ok((TrialResult::NoPath, None, None))
        }
        Err(e @ PlanError::InvalidInput(_)) => Err(SimError::Pipeline(e.into())),
    }
}

/// Surveys `world`, maps it in `mode`, plans from `start` to `goal` and replays the path.
pub fn run_trial(
    world: &World,
    start: PathPose<f64>,
    goal: PathPose<f64>,
    cfg: &TrialConfig,
    mode: MappingMode,
    seed: u64,
) -> Result<TrialOutcome, SimError> {
    cfg.validate()?;
    let pipeline = cfg.pipeline_for(world)?;
    let frames = survey(world, cfg, seed);
    let mapped = build_map(&frames, &pipeline, mode)?;
    let (result, path, hazard) = evaluate(world, &mapped, start, goal, &pipeline)?;
    Ok(TrialOutcome {
        scenario: String::new(),
        trial: 0,
        mode,
        goal,
        result,
        path_length: path.as_ref().map(|p| p.total_length),
        hazard,
        expansions: path.as_ref().map_or(0, |p| p.expansions),
        path,
    })
}
