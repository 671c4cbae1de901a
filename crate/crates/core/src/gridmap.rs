//! Rolling elevation grid map: cell storage, point insertion and time-windowed views.
//!
//! Cell `(i, j)` covers `[origin.x + i*res, origin.x + (i+1)*res) x [origin.y + j*res, ...)`.
//! `i` indexes x (columns) and `j` indexes y (rows); storage is row-major in `j`.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::semantics::LabelHistogram;
use crate::Error;

/// Default number of recent heights kept per cell.
pub const DEFAULT_HEIGHTS_PER_CELL: usize = 10;

/// Default time window (seconds) for geometric computation.
pub const DEFAULT_WINDOW_SECS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

impl CellIndex {
    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// Placement and size of a grid in the world XY plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
pub struct GridSpec<T: Real> {
    /// World XY of the lower-left corner of cell (0, 0), meters.
    pub origin: [T; 2],
    pub width: usize,
    pub height: usize,
    /// Cell edge length, meters.
    pub resolution: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(origin: [T; 2], width: usize, height: usize, resolution: T) -> Result<Self, Error> {
        let spec = Self {
            origin,
            width,
            height,
            resolution,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid covering `[x0, x0 + size_x) x [y0, y0 + size_y)` rounded up to whole cells.
    pub fn covering(origin: [T; 2], size_x: T, size_y: T, resolution: T) -> Result<Self, Error> {
        if !(resolution > T::zero()) {
            return Err(Error::InvalidGrid("resolution must be positive".into()));
        }
        let w = (size_x / resolution).ceil().to_usize().unwrap_or(0);
        let h = (size_y / resolution).ceil().to_usize().unwrap_or(0);
        Self::new(origin, w, h, resolution)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.resolution > T::zero()) || !self.resolution.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "resolution {} must be positive",
                self.resolution
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid dimensions {}x{} must be at least 1x1",
                self.width, self.height
            )));
        }
        if !self.origin[0].is_finite() || !self.origin[1].is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn linear(&self, idx: CellIndex) -> usize {
        idx.j * self.width + idx.i
    }

    #[inline]
    pub fn unlinear(&self, k: usize) -> CellIndex {
        CellIndex::new(k % self.width, k / self.width)
    }

    /// Cell containing world point `xy`, or `None` when outside the map extent.
    pub fn world_to_index(&self, xy: [T; 2]) -> Option<CellIndex> {
        let fx = ((xy[0] - self.origin[0]) / self.resolution).floor();
        let fy = ((xy[1] - self.origin[1]) / self.resolution).floor();
        if !(fx >= T::zero() && fy >= T::zero()) {
            return None;
        }
        let i = fx.to_usize()?;
        let j = fy.to_usize()?;
        (i < self.width && j < self.height).then_some(CellIndex::new(i, j))
    }

    /// Signed cell coordinates, possibly outside the grid.
    pub fn world_to_cell_signed(&self, xy: [T; 2]) -> (i64, i64) {
        let fx = ((xy[0] - self.origin[0]) / self.resolution).floor();
        let fy = ((xy[1] - self.origin[1]) / self.resolution).floor();
        (
            fx.to_i64().unwrap_or(i64::MIN),
            fy.to_i64().unwrap_or(i64::MIN),
        )
    }

    pub fn cell_center(&self, idx: CellIndex) -> [T; 2] {
        let half = T::lit(0.5);
        [
            self.origin[0] + (T::from_usize_lossy(idx.i) + half) * self.resolution,
            self.origin[1] + (T::from_usize_lossy(idx.j) + half) * self.resolution,
        ]
    }

    #[inline]
    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    /// In-bounds cells of the `(2r+1)^2` square centred on `idx`, including `idx`.
    pub fn neighborhood(
        &self,
        idx: CellIndex,
        radius: usize,
    ) -> impl Iterator<Item = CellIndex> + '_ {
        let r = radius as i64;
        let (ci, cj) = (idx.i as i64, idx.j as i64);
        (cj - r..=cj + r).flat_map(move |j| {
            (ci - r..=ci + r)
                .filter(move |&i| self.contains(i, j))
                .map(move |i| CellIndex::new(i as usize, j as usize))
        })
    }
}

/// A world-frame point with acquisition time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StampedPoint<T: Real> {
    pub stamp: T,
    pub xyz: [T; 3],
}

impl<T: Real> StampedPoint<T> {
    pub fn new(stamp: T, x: T, y: T, z: T) -> Self {
        Self {
            stamp,
            xyz: [x, y, z],
        }
    }
}

/// Vehicle pose in the world frame. Orientation is a unit quaternion `[w, x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Pose<T: Real> {
    pub position: [T; 3],
    pub orientation: [T; 4],
    pub stamp: T,
}

impl<T: Real> Pose<T> {
    pub fn new(position: [T; 3], orientation: [T; 4], stamp: T) -> Result<Self, Error> {
        let norm = orientation.iter().map(|&q| q * q).sum::<T>().sqrt();
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(8.0));
        if !((norm - T::one()).abs() <= tol) {
            return Err(Error::InvalidPose(format!(
                "quaternion norm {norm} is not 1"
            )));
        }
        Ok(Self {
            position,
            orientation,
            stamp,
        })
    }

    /// Planar pose: position `(x, y, z)` rotated by `yaw` about +z.
    pub fn from_yaw(position: [T; 3], yaw: T, stamp: T) -> Self {
        let half = yaw * T::lit(0.5);
        Self {
            position,
            orientation: [half.cos(), T::zero(), T::zero(), half.sin()],
            stamp,
        }
    }

    /// Body-to-world rotation matrix.
    pub fn rotation(&self) -> [[T; 3]; 3] {
        let [w, x, y, z] = self.orientation;
        let two = T::lit(2.0);
        let one = T::one();
        [
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ]
    }

    /// Homogeneous world-from-body transform.
    pub fn to_matrix(&self) -> [[T; 4]; 4] {
        let r = self.rotation();
        let p = self.position;
        let z = T::zero();
        [
            [r[0][0], r[0][1], r[0][2], p[0]],
            [r[1][0], r[1][1], r[1][2], p[1]],
            [r[2][0], r[2][1], r[2][2], p[2]],
            [z, z, z, T::one()],
        ]
    }
}

/// Per-cell statistics and derived layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell<T: Real> {
    heights: VecDeque<T>,
    mean_height: T,
    last_update: T,
    pub slope: Option<T>,
    pub step_height: Option<T>,
    pub roughness: Option<T>,
    pub labels: LabelHistogram<T>,
    pub traversability: Option<T>,
}

impl<T: Real> Default for Cell<T> {
    fn default() -> Self {
        Self {
            heights: VecDeque::new(),
            mean_height: T::zero(),
            last_update: T::neg_infinity(),
            slope: None,
            step_height: None,
            roughness: None,
            labels: LabelHistogram::default(),
            traversability: None,
        }
    }
}

impl<T: Real> Cell<T> {
    pub fn heights(&self) -> impl ExactSizeIterator<Item = T> + '_ {
        self.heights.iter().copied()
    }

    /// Mean of the retained heights, `None` for a cell that never received a point.
    pub fn mean_height(&self) -> Option<T> {
        (!self.heights.is_empty()).then_some(self.mean_height)
    }

    /// Time of the latest height sample (`-inf` if none).
    pub fn last_update(&self) -> T {
        self.last_update
    }

    pub fn is_populated(&self) -> bool {
        !self.heights.is_empty()
    }

    fn push_height(&mut self, z: T, stamp: T, capacity: usize) {
        while self.heights.len() >= capacity {
            self.heights.pop_front();
        }
        self.heights.push_back(z);
        self.mean_height =
            self.heights.iter().copied().sum::<T>() / T::from_usize_lossy(self.heights.len());
        if stamp > self.last_update {
            self.last_update = stamp;
        }
    }

    /// Clears the geometric layers (slope, step, roughness).
    pub fn clear_geometry(&mut self) {
        self.slope = None;
        self.step_height = None;
        self.roughness = None;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InsertSummary {
    /// Distinct cells that received at least one point.
    pub cells_touched: usize,
    pub points_inserted: usize,
    pub out_of_bounds: usize,
}

#[derive(Clone, Debug)]
pub struct ElevationGridMap<T: Real> {
    spec: GridSpec<T>,
    heights_per_cell: usize,
    cells: Vec<Cell<T>>,
}

impl<T: Real> ElevationGridMap<T> {
    pub fn new(spec: GridSpec<T>, heights_per_cell: usize) -> Result<Self, Error> {
        spec.validate()?;
        if heights_per_cell == 0 {
            return Err(Error::InvalidGrid(
                "heights per cell must be at least 1".into(),
            ));
        }
        Ok(Self {
            spec,
            heights_per_cell,
            cells: vec![Cell::default(); spec.len()],
        })
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn heights_per_cell(&self) -> usize {
        self.heights_per_cell
    }

    pub fn cell(&self, idx: CellIndex) -> &Cell<T> {
        &self.cells[self.spec.linear(idx)]
    }

    pub fn cell_mut(&mut self, idx: CellIndex) -> &mut Cell<T> {
        let k = self.spec.linear(idx);
        &mut self.cells[k]
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Cell<T>] {
        &mut self.cells
    }

    pub fn indices(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.spec.len()).map(|k| self.spec.unlinear(k))
    }

    pub fn world_to_index(&self, xy: [T; 2]) -> Option<CellIndex> {
        self.spec.world_to_index(xy)
    }

    /// Appends each in-bounds point's height to its cell FIFO.
    pub fn insert_points(&mut self, points: &[StampedPoint<T>]) -> InsertSummary {
        let mut touched = HashSet::new();
        let mut summary = InsertSummary::default();
        for p in points {
            match self.spec.world_to_index([p.xyz[0], p.xyz[1]]) {
                Some(idx) => {
                    let k = self.spec.linear(idx);
                    self.cells[k].push_height(p.xyz[2], p.stamp, self.heights_per_cell);
                    touched.insert(k);
                    summary.points_inserted += 1;
                }
                None => summary.out_of_bounds += 1,
            }
        }
        summary.cells_touched = touched.len();
        summary
    }

    /// View of the cells updated within `[now - window, now]`.
    ///
    /// # Panics
    /// If `window` is not positive.
    pub fn windowed_view(&self, now: T, window: T) -> WindowedView<'_, T> {
        assert!(window > T::zero(), "time window must be positive");
        WindowedView {
            map: self,
            cutoff: now - window,
        }
    }

    /// View exposing every populated cell.
    pub fn full_view(&self) -> WindowedView<'_, T> {
        WindowedView {
            map: self,
            cutoff: T::neg_infinity(),
        }
    }
}

/// Read-only map slice that hides cells not refreshed inside the time window.
#[derive(Clone, Copy, Debug)]
pub struct WindowedView<'a, T: Real> {
    map: &'a ElevationGridMap<T>,
    cutoff: T,
}

impl<'a, T: Real> WindowedView<'a, T> {
    pub fn spec(&self) -> &'a GridSpec<T> {
        &self.map.spec
    }

    pub fn map(&self) -> &'a ElevationGridMap<T> {
        self.map
    }

    /// The cell, if populated and fresh.
    pub fn get(&self, idx: CellIndex) -> Option<&'a Cell<T>> {
        let cell = self.map.cell(idx);
        (cell.is_populated() && cell.last_update >= self.cutoff).then_some(cell)
    }

    pub fn get_signed(&self, i: i64, j: i64) -> Option<&'a Cell<T>> {
        self.map
            .spec
            .contains(i, j)
            .then(|| self.get(CellIndex::new(i as usize, j as usize)))
            .flatten()
    }

    /// Cell abstracted to `(center x, center y, mean height)`.
    pub fn point(&self, idx: CellIndex) -> Option<[T; 3]> {
        let c = self.get(idx)?;
        let [x, y] = self.map.spec.cell_center(idx);
        Some([x, y, c.mean_height])
    }

    pub fn present_indices(&self) -> impl Iterator<Item = CellIndex> + 'a {
        let view = *self;
        self.map
            .indices()
            .filter(move |&idx| view.get(idx).is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec<f64> {
        GridSpec::new([0.0, 0.0], 10, 10, 0.2).unwrap()
    }

    #[test]
    fn world_to_index_examples() {
        let s = spec();
        assert_eq!(s.world_to_index([0.05, 0.05]), Some(CellIndex::new(0, 0)));
        assert_eq!(s.world_to_index([0.30, 0.10]), Some(CellIndex::new(1, 0)));
        assert_eq!(s.world_to_index([-1.0, -1.0]), None);
        assert_eq!(s.world_to_index([2.0, 0.1]), None);
        assert_eq!(s.world_to_index([f64::NAN, 0.1]), None);
    }

    #[test]
    fn index_center_within_half_cell() {
        let s = GridSpec::<f64>::new([-3.3, 1.7], 40, 30, 0.25).unwrap();
        for &(x, y) in &[(-3.2, 1.8), (0.0, 2.0), (6.6, 9.1)] {
            let idx = s.world_to_index([x, y]).unwrap();
            let c = s.cell_center(idx);
            assert!((c[0] - x).abs() <= 0.125 + 1e-12);
            assert!((c[1] - y).abs() <= 0.125 + 1e-12);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(GridSpec::new([0.0, 0.0], 0, 10, 0.2).is_err());
        assert!(GridSpec::new([0.0, 0.0], 1, 1, 0.0).is_err());
        assert!(GridSpec::<f64>::new([0.0, 0.0], 1, 1, -0.1).is_err());
    }

    #[test]
    fn single_point_sets_mean() {
        let mut map = ElevationGridMap::new(spec(), 10).unwrap();
        let s = map.insert_points(&[StampedPoint::new(0.0, 0.1, 0.1, 1.0)]);
        assert_eq!(s.cells_touched, 1);
        assert_eq!(map.cell(CellIndex::new(0, 0)).mean_height(), Some(1.0));
    }

    #[test]
    fn fifo_evicts_oldest() {
        let mut map = ElevationGridMap::new(spec(), 10).unwrap();
        let pts: Vec<_> = (0..12)
            .map(|k| StampedPoint::new(k as f64, 0.5, 0.5, k as f64))
            .collect();
        map.insert_points(&pts);
        let c = map.cell(CellIndex::new(2, 2));
        assert_eq!(
            c.heights().collect::<Vec<_>>(),
            (2..12).map(f64::from).collect::<Vec<_>>()
        );
        assert_eq!(c.mean_height(), Some(6.5));
        assert_eq!(c.last_update(), 11.0);
    }

    #[test]
    fn out_of_bounds_points_skipped() {
        let mut map = ElevationGridMap::new(spec(), 10).unwrap();
        let s = map.insert_points(&[
            StampedPoint::new(0.0, -1.0, -1.0, 1.0),
            StampedPoint::new(0.0, 5.0, 0.0, 1.0),
        ]);
        assert_eq!(
            s,
            InsertSummary {
                cells_touched: 0,
                points_inserted: 0,
                out_of_bounds: 2
            }
        );
    }

    #[test]
    fn same_point_twice_grows_one_fifo() {
        let mut map = ElevationGridMap::new(spec(), 10).unwrap();
        let p = StampedPoint::new(0.0, 0.7, 0.3, 0.4);
        map.insert_points(&[p, p]);
        let lens: Vec<usize> = map.cells().iter().map(|c| c.heights().len()).collect();
        assert_eq!(lens.iter().sum::<usize>(), 2);
        assert_eq!(lens.iter().filter(|&&l| l > 0).count(), 1);
    }

    #[test]
    fn window_hides_stale_cells() {
        let mut map = ElevationGridMap::new(spec(), 10).unwrap();
        map.insert_points(&[
            StampedPoint::new(0.0, 0.1, 0.1, 0.0),
            StampedPoint::new(4.0, 0.5, 0.1, 0.0),
        ]);
        let view = map.windowed_view(5.0, 2.0);
        assert!(view.get(CellIndex::new(0, 0)).is_none());
        assert!(view.get(CellIndex::new(2, 0)).is_some());
        let all = map.windowed_view(5.0, f64::INFINITY);
        assert_eq!(all.present_indices().count(), 2);
        assert!(all.get(CellIndex::new(5, 5)).is_none());
    }

    #[test]
    #[should_panic]
    fn window_must_be_positive() {
        let map = ElevationGridMap::new(spec(), 10).unwrap();
        let _ = map.windowed_view(1.0, 0.0);
    }

    #[test]
    fn pose_rejects_non_unit_quaternion() {
        assert!(Pose::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], 0.0).is_ok());
        assert!(Pose::new([0.0, 0.0, 0.0], [1.0, 1e-3, 0.0, 0.0], 0.0).is_err());
        let p = Pose::<f64>::from_yaw([1.0, 2.0, 0.0], std::f64::consts::FRAC_PI_2, 0.0);
        let r = p.rotation();
        assert!((r[0][1] + 1.0).abs() < 1e-12 && (r[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let s = GridSpec::<f32>::new([0.0, 0.0], 4, 4, 0.2).unwrap();
        let mut map = ElevationGridMap::new(s, 3).unwrap();
        map.insert_points(&[StampedPoint::new(0.0, 0.3, 0.1, 2.0)]);
        assert_eq!(map.cell(CellIndex::new(1, 0)).mean_height(), Some(2.0f32));
    }
}
