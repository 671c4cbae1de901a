//! Single-writer mapping pipeline: one frame in, refreshed layers out.

use std::time::{Duration, Instant};

use crate::config::PipelineConfig;
use crate::fusion::{update_traversability_layer, LayerSettings};
use crate::gridmap::{ElevationGridMap, StampedPoint};
use crate::postprocess::{
    find_nontraversable_regions, remove_small_regions, to_occupancy, OccupancyGrid,
};
use crate::scalar::Real;
use crate::semantics::{accumulate_labels, label_cloud, CameraModel, LabelImage};
use crate::{Error, GeoThresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingMode {
    /// Semantic labels and geometry.
    Fused,
    /// Labels are never accumulated; the geometric score is used as is.
    GeometricOnly,
}

/// Wall-clock time spent in each stage of a frame update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub projection: Duration,
    pub insertion: Duration,
    pub traversability: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.projection + self.insertion + self.traversability
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameReport {
    pub points_inserted: usize,
    pub points_labeled: usize,
    pub cells_refreshed: usize,
    pub timings: StageTimings,
}

pub struct MappingPipeline<T: Real> {
    config: PipelineConfig<T>,
    mode: MappingMode,
    map: ElevationGridMap<T>,
    settings: LayerSettings<T>,
}

impl<T: Real> MappingPipeline<T> {
    pub fn new(config: PipelineConfig<T>, mode: MappingMode) -> Result<Self, Error> {
        config.validate()?;
        let map = ElevationGridMap::new(config.grid, config.heights_per_cell)?;
        let settings = LayerSettings {
            thresholds: config.thresholds()?,
            neighborhoods: config.neighborhoods(),
            use_semantics: mode == MappingMode::Fused,
        };
        Ok(Self {
            config,
            mode,
            map,
            settings,
        })
    }

    pub fn map(&self) -> &ElevationGridMap<T> {
        &self.map
    }

    pub fn into_map(self) -> ElevationGridMap<T> {
        self.map
    }

    pub fn config(&self) -> &PipelineConfig<T> {
        &self.config
    }

    pub fn mode(&self) -> MappingMode {
        self.mode
    }

    pub fn thresholds(&self) -> &GeoThresholds<T> {
        &self.settings.thresholds
    }

    /// Labels (in fused mode), inserts and refreshes the traversability layer
    /// over the time window ending at `now`.
    pub fn process_frame(
        &mut self,
        cloud: &[StampedPoint<T>],
        labels: Option<(&LabelImage, &CameraModel<T>)>,
        now: T,
    ) -> Result<FrameReport, Error> {
        let mut report = self.ingest(cloud, labels)?;
        let t = Instant::now();
        report.cells_refreshed = self.refresh(now);
        report.timings.traversability = t.elapsed();
        Ok(report)
    }

    /// Projection and insertion only; layers are left untouched until [`refresh`](Self::refresh).
    pub fn ingest(
        &mut self,
        cloud: &[StampedPoint<T>],
        labels: Option<(&LabelImage, &CameraModel<T>)>,
    ) -> Result<FrameReport, Error> {
        let mut report = FrameReport::default();

        let t0 = Instant::now();
        let labeled = match (self.mode, labels) {
            (MappingMode::Fused, Some((image, cam))) => Some(label_cloud(cloud, image, cam)?),
            _ => None,
        };
        report.timings.projection = t0.elapsed();

        let t1 = Instant::now();
        report.points_inserted = self.map.insert_points(cloud).points_inserted;
        if let Some(labeled) = &labeled {
            report.points_labeled = labeled.iter().filter(|p| p.label.is_some()).count();
            accumulate_labels(&mut self.map, labeled, self.config.label_decay);
        }
        report.timings.insertion = t1.elapsed();
        Ok(report)
    }

    /// Recomputes geometry and fused scores for cells inside the window ending at `now`.
    pub fn refresh(&mut self, now: T) -> usize {
        update_traversability_layer(&mut self.map, &self.settings, now, self.config.window_secs)
    }

    /// Small-region cleanup (if enabled). Returns the number of promoted cells.
    pub fn postprocess(&mut self) -> usize {
        if !self.config.remove_small_regions {
            return 0;
        }
        let regions = find_nontraversable_regions(&self.map, self.config.t_occ);
        remove_small_regions(
            &mut self.map,
            &regions,
            self.settings.thresholds.h_cri,
            self.config.machine.track_separation,
            self.config.t_occ,
        )
    }

    pub fn occupancy(&self) -> OccupancyGrid<T> {
        to_occupancy(&self.map, self.config.t_occ, self.config.unknown_policy)
    }
}
