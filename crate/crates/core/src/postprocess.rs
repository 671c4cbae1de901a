//! Small-region cleanup of the traversability layer and conversion to an
//! occupancy grid for planning.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::gridmap::{CellIndex, ElevationGridMap, GridSpec};
use crate::scalar::Real;

/// Connected set of below-threshold cells (8-connectivity).
#[derive(Clone, Debug, PartialEq)]
pub struct Region<T: Real> {
    pub cells: Vec<CellIndex>,
    pub mean_traversability: T,
    /// Highest cell in the region minus the mean height of the traversable
    /// cells bordering it; `+inf` when either is unavailable.
    pub relative_height: T,
    pub span_x: T,
    pub span_y: T,
}

const NEIGHBORS_8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn below<T: Real>(map: &ElevationGridMap<T>, idx: CellIndex, t_occ: T) -> bool {
    map.cell(idx).traversability.is_some_and(|t| t < t_occ)
}

/// Maximal 8-connected components of cells whose traversability is present and below `t_occ`.
pub fn find_nontraversable_regions<T: Real>(map: &ElevationGridMap<T>, t_occ: T) -> Vec<Region<T>> {
    let spec = *map.spec();
    let mut seen = vec![false; spec.len()];
    let mut regions = vec![];
    for start in map.indices() {
        let k = spec.linear(start);
        if seen[k] || !below(map, start, t_occ) {
            continue;
        }
        seen[k] = true;
        let mut cells = vec![];
        let mut queue = VecDeque::from([start]);
        while let Some(idx) = queue.pop_front() {
            cells.push(idx);
            for (di, dj) in NEIGHBORS_8 {
                let (ni, nj) = (idx.i as i64 + di, idx.j as i64 + dj);
                if !spec.contains(ni, nj) {
                    continue;
                }
                let n = CellIndex::new(ni as usize, nj as usize);
                let nk = spec.linear(n);
                if !seen[nk] && below(map, n, t_occ) {
                    seen[nk] = true;
                    queue.push_back(n);
                }
            }
        }
        cells.sort_unstable_by_key(|c| (c.j, c.i));
        regions.push(region_stats(map, cells, t_occ));
    }
    regions
}

/// Computes a region's statistics from its cell set.
pub fn region_stats<T: Real>(
    map: &ElevationGridMap<T>,
    cells: Vec<CellIndex>,
    t_occ: T,
) -> Region<T> {
    let spec = map.spec();
    let n = T::from_usize_lossy(cells.len().max(1));
    let mean_traversability = cells
        .iter()
        .filter_map(|&c| map.cell(c).traversability)
        .sum::<T>()
        / n;

    let mut in_region = std::collections::HashSet::with_capacity(cells.len());
    in_region.extend(cells.iter().copied());
    let mut border = Vec::new();
    for c in &cells {
        for (di, dj) in NEIGHBORS_8 {
            let (ni, nj) = (c.i as i64 + di, c.j as i64 + dj);
            if !spec.contains(ni, nj) {
                continue;
            }
            let nb = CellIndex::new(ni as usize, nj as usize);
            if !in_region.contains(&nb) && map.cell(nb).traversability.is_some_and(|t| t >= t_occ) {
                border.push(spec.linear(nb));
            }
        }
    }
    // Sorted so the mean is summed in a fixed order.
    border.sort_unstable();
    border.dedup();
    let border_heights: Vec<T> = border
        .iter()
        .filter_map(|&k| map.cell(spec.unlinear(k)).mean_height())
        .collect();
    let top = cells
        .iter()
        .filter_map(|&c| map.cell(c).mean_height())
        .fold(None, |acc: Option<T>, z| Some(acc.map_or(z, |a| a.max(z))));
    let relative_height = match top {
        Some(top) if !border_heights.is_empty() => {
            top - border_heights.iter().copied().sum::<T>()
                / T::from_usize_lossy(border_heights.len())
        }
        _ => T::infinity(),
    };

    let (min_i, max_i) = cells
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.i), hi.max(c.i)));
    let (min_j, max_j) = cells
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.j), hi.max(c.j)));
    let span = |lo: usize, hi: usize| {
        if lo > hi {
            T::zero()
        } else {
            T::from_usize_lossy(hi - lo + 1) * spec.resolution
        }
    };
    Region {
        mean_traversability,
        relative_height,
        span_x: span(min_i, max_i),
        span_y: span(min_j, max_j),
        cells,
    }
}

/// True when all three removal criteria hold for the region.
pub fn is_removable<T: Real>(region: &Region<T>, h_cri: T, d_track: T, t_occ: T) -> bool {
    let half_track = d_track * T::lit(0.5);
    region.mean_traversability < t_occ
        && region.relative_height < h_cri
        && region.span_x < half_track
        && region.span_y < half_track
}

/// Promotes removable regions to `t_occ`. Returns the number of cells promoted.
pub fn remove_small_regions<T: Real>(
    map: &mut ElevationGridMap<T>,
    regions: &[Region<T>],
    h_cri: T,
    d_track: T,
    t_occ: T,
) -> usize {
    let mut promoted = 0;
    for region in regions
        .iter()
        .filter(|r| is_removable(r, h_cri, d_track, t_occ))
    {
        for &c in &region.cells {
            map.cell_mut(c).traversability = Some(t_occ);
            promoted += 1;
        }
    }
    promoted
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Occupancy {
    Free,
    Occupied,
    Unknown,
}

/// What cells without a traversability value become.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownPolicy {
    #[default]
    Occupied,
    Free,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid<T: Real> {
    spec: GridSpec<T>,
    cells: Vec<Occupancy>,
}

impl<T: Real> OccupancyGrid<T> {
    pub fn new(spec: GridSpec<T>, cells: Vec<Occupancy>) -> Self {
        assert_eq!(cells.len(), spec.len(), "occupancy buffer size");
        Self { spec, cells }
    }

    pub fn filled(spec: GridSpec<T>, state: Occupancy) -> Self {
        Self {
            spec,
            cells: vec![state; spec.len()],
        }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn get(&self, idx: CellIndex) -> Occupancy {
        self.cells[self.spec.linear(idx)]
    }

    pub fn set(&mut self, idx: CellIndex, state: Occupancy) {
        let k = self.spec.linear(idx);
        self.cells[k] = state;
    }

    pub fn cells(&self) -> &[Occupancy] {
        &self.cells
    }

    pub fn count(&self, state: Occupancy) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }
}

pub fn to_occupancy<T: Real>(
    map: &ElevationGridMap<T>,
    t_occ: T,
    policy: UnknownPolicy,
) -> OccupancyGrid<T> {
    let unknown = match policy {
        UnknownPolicy::Occupied => Occupancy::Occupied,
        UnknownPolicy::Free => Occupancy::Free,
        UnknownPolicy::Unknown => Occupancy::Unknown,
    };
    let cells = map
        .cells()
        .iter()
        .map(|c| match c.traversability {
            Some(t) if t >= t_occ => Occupancy::Free,
            Some(_) => Occupancy::Occupied,
            None => unknown,
        })
        .collect();
    OccupancyGrid {
        spec: *map.spec(),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::StampedPoint;

    /// 20x20 flat map at height 0 with T = 1 everywhere.
    fn base_map() -> ElevationGridMap<f64> {
        let spec = GridSpec::new([0.0, 0.0], 20, 20, 0.2).unwrap();
        let mut map = ElevationGridMap::new(spec, 10).unwrap();
        let pts: Vec<_> = map
            .indices()
            .map(|idx| {
                let c = spec.cell_center(idx);
                StampedPoint::new(0.0, c[0], c[1], 0.0)
            })
            .collect();
        map.insert_points(&pts);
        for c in map.cells_mut() {
            c.traversability = Some(1.0);
        }
        map
    }

    fn paint(
        map: &mut ElevationGridMap<f64>,
        i0: usize,
        j0: usize,
        w: usize,
        h: usize,
        t: f64,
        z: f64,
    ) {
        let spec = *map.spec();
        for j in j0..j0 + h {
            for i in i0..i0 + w {
                let idx = CellIndex::new(i, j);
                let c = spec.cell_center(idx);
                for _ in 0..10 {
                    map.insert_points(&[StampedPoint::new(0.0, c[0], c[1], z)]);
                }
                map.cell_mut(idx).traversability = Some(t);
            }
        }
    }

    #[test]
    fn no_low_cells_no_regions() {
        assert!(find_nontraversable_regions(&base_map(), 0.6).is_empty());
    }

    #[test]
    fn isolated_cell_is_one_region() {
        let mut map = base_map();
        paint(&mut map, 5, 5, 1, 1, 0.0, 0.0);
        let r = find_nontraversable_regions(&map, 0.6);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].cells.len(), 1);
        assert!((r[0].span_x - 0.2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_cells_join() {
        let mut map = base_map();
        paint(&mut map, 5, 5, 1, 1, 0.0, 0.0);
        paint(&mut map, 6, 6, 1, 1, 0.0, 0.0);
        assert_eq!(find_nontraversable_regions(&map, 0.6).len(), 1);
        paint(&mut map, 9, 9, 1, 1, 0.0, 0.0);
        assert_eq!(find_nontraversable_regions(&map, 0.6).len(), 2);
    }

    fn region(span_x: f64, span_y: f64, h: f64, t: f64) -> Region<f64> {
        Region {
            cells: vec![],
            mean_traversability: t,
            relative_height: h,
            span_x,
            span_y,
        }
    }

    #[test]
    fn three_criteria() {
        assert!(is_removable(&region(1.0, 1.0, 0.2, 0.3), 0.35, 2.75, 0.6));
        assert!(!is_removable(&region(1.0, 1.0, 0.5, 0.3), 0.35, 2.75, 0.6));
        assert!(!is_removable(&region(2.0, 1.0, 0.2, 0.3), 0.35, 2.75, 0.6));
        assert!(!is_removable(&region(1.0, 2.0, 0.2, 0.3), 0.35, 2.75, 0.6));
        assert!(!is_removable(&region(1.0, 1.0, 0.2, 0.6), 0.35, 2.75, 0.6));
    }

    #[test]
    fn promotion_on_map() {
        let mut map = base_map();
        // 5x5 cells = 1.0 m square, 0.2 m tall, T 0.3.
        paint(&mut map, 3, 3, 5, 5, 0.3, 0.2);
        let regions = find_nontraversable_regions(&map, 0.6);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert!((r.span_x - 1.0).abs() < 1e-12 && (r.span_y - 1.0).abs() < 1e-12);
        assert!((r.relative_height - 0.2).abs() < 1e-12);
        assert!((r.mean_traversability - 0.3).abs() < 1e-12);
        assert_eq!(
            remove_small_regions(&mut map, &regions, 0.35, 2.75, 0.6),
            25
        );
        assert_eq!(map.cell(CellIndex::new(4, 4)).traversability, Some(0.6));
        assert_eq!(
            to_occupancy(&map, 0.6, UnknownPolicy::Occupied).count(Occupancy::Occupied),
            0
        );
    }

    #[test]
    fn tall_or_wide_regions_stay() {
        let mut tall = base_map();
        paint(&mut tall, 3, 3, 5, 5, 0.3, 0.5);
        let r = find_nontraversable_regions(&tall, 0.6);
        assert_eq!(remove_small_regions(&mut tall, &r, 0.35, 2.75, 0.6), 0);

        let mut wide = base_map();
        paint(&mut wide, 3, 3, 10, 5, 0.3, 0.2);
        let r = find_nontraversable_regions(&wide, 0.6);
        assert!((r[0].span_x - 2.0).abs() < 1e-12);
        assert_eq!(remove_small_regions(&mut wide, &r, 0.35, 2.75, 0.6), 0);
    }

    #[test]
    fn region_without_traversable_border_is_kept() {
        let mut map = base_map();
        for c in map.cells_mut() {
            c.traversability = Some(0.1);
        }
        let r = find_nontraversable_regions(&map, 0.6);
        assert_eq!(r.len(), 1);
        assert!(r[0].relative_height.is_infinite());
    }

    #[test]
    fn occupancy_thresholds() {
        let mut map = base_map();
        assert_eq!(
            to_occupancy(&map, 0.6, UnknownPolicy::Occupied).count(Occupancy::Free),
            400
        );
        map.cell_mut(CellIndex::new(1, 1)).traversability = Some(0.59);
        map.cell_mut(CellIndex::new(2, 2)).traversability = Some(0.6);
        map.cell_mut(CellIndex::new(3, 3)).traversability = None;
        let g = to_occupancy(&map, 0.6, UnknownPolicy::Occupied);
        assert_eq!(g.get(CellIndex::new(1, 1)), Occupancy::Occupied);
        assert_eq!(g.get(CellIndex::new(2, 2)), Occupancy::Free);
        assert_eq!(g.get(CellIndex::new(3, 3)), Occupancy::Occupied);
        assert_eq!(
            to_occupancy(&map, 0.6, UnknownPolicy::Free).get(CellIndex::new(3, 3)),
            Occupancy::Free
        );
        assert_eq!(
            to_occupancy(&map, 0.6, UnknownPolicy::Unknown).get(CellIndex::new(3, 3)),
            Occupancy::Unknown
        );
    }
}
