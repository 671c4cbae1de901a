//! Pipeline configuration with defaults for every field.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::geometry::{derive_thresholds, GeoThresholds, MachineSpec, Neighborhoods};
use crate::gridmap::{GridSpec, DEFAULT_HEIGHTS_PER_CELL, DEFAULT_WINDOW_SECS};
use crate::planner::{PlannerConfig, VehicleFootprint};
use crate::postprocess::UnknownPolicy;
use crate::scalar::Real;
use crate::Error;

/// Optional replacements for derived thresholds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct ThresholdOverrides<T: Real> {
    pub s_cri: Option<T>,
    pub s_safe: Option<T>,
    pub h_cri: Option<T>,
    pub h_safe: Option<T>,
    pub alpha_slope: Option<T>,
    pub alpha_step: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct PipelineConfig<T: Real> {
    pub grid: GridSpec<T>,
    pub machine: MachineSpec<T>,
    pub thresholds: ThresholdOverrides<T>,
    /// Time window for geometric computation, seconds.
    pub window_secs: T,
    pub heights_per_cell: usize,
    pub t_occ: T,
    pub unknown_policy: UnknownPolicy,
    /// Skip the small-region cleanup when false.
    pub remove_small_regions: bool,
    pub camera_calibration: Option<PathBuf>,
    /// Max clock offset between a cloud and the label image used for it, seconds.
    pub label_time_tolerance: T,
    /// Per-update histogram decay in `[0, 1)`; 0 keeps counts forever.
    pub label_decay: T,
    pub footprint: VehicleFootprint<T>,
    pub planner: PlannerConfig<T>,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                origin: [T::zero(), T::zero()],
                width: 250,
                height: 250,
                resolution: T::lit(0.2),
            },
            machine: MachineSpec::default(),
            thresholds: ThresholdOverrides::default(),
            window_secs: T::lit(DEFAULT_WINDOW_SECS),
            heights_per_cell: DEFAULT_HEIGHTS_PER_CELL,
            t_occ: T::lit(0.6),
            unknown_policy: UnknownPolicy::Occupied,
            remove_small_regions: true,
            camera_calibration: None,
            label_time_tolerance: T::lit(0.1),
            label_decay: T::zero(),
            footprint: VehicleFootprint::default(),
            planner: PlannerConfig::default(),
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    /// Derived thresholds with any overrides applied.
    pub fn thresholds(&self) -> Result<GeoThresholds<T>, Error> {
        let mut th = derive_thresholds(&self.machine, self.grid.resolution)?;
        let o = &self.thresholds;
        th.s_cri = o.s_cri.unwrap_or(th.s_cri);
        th.s_safe = o.s_safe.unwrap_or(th.s_safe);
        th.h_cri = o.h_cri.unwrap_or(th.h_cri);
        th.h_safe = o.h_safe.unwrap_or(th.h_safe);
        th.alpha_slope = o.alpha_slope.unwrap_or(th.alpha_slope);
        th.alpha_step = o.alpha_step.unwrap_or(th.alpha_step);
        th.validate()?;
        Ok(th)
    }

    pub fn neighborhoods(&self) -> Neighborhoods {
        Neighborhoods::from_machine(&self.machine, self.grid.resolution)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.grid.validate()?;
        self.thresholds()?;
        self.footprint.validate()?;
        if !(self.window_secs > T::zero()) {
            return Err(Error::Config("window_secs must be positive".into()));
        }
        if self.heights_per_cell == 0 {
            return Err(Error::Config("heights_per_cell must be at least 1".into()));
        }
        if !(self.t_occ > T::zero() && self.t_occ < T::one()) {
            return Err(Error::Config("t_occ must lie in (0, 1)".into()));
        }
        if !(self.label_decay >= T::zero() && self.label_decay < T::one()) {
            return Err(Error::Config("label_decay must lie in [0, 1)".into()));
        }
        if !(self.label_time_tolerance >= T::zero()) {
            return Err(Error::Config(
                "label_time_tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}
