//! Hybrid A* over an occupancy grid with a rectangular vehicle footprint.
//!
//! States are continuous `(x, y, heading)` poses; duplicates are pruned on a
//! `(cell, heading bin)` lattice. Successors follow constant-curvature arcs.
//! Once a state lies inside the goal tolerance, a short straight segment to the
//! exact goal position is tried and queued as a terminal candidate.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{CellIndex, GridSpec};
use crate::postprocess::{Occupancy, OccupancyGrid};
use crate::scalar::{wrap_angle, Real};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("no collision-free path found")]
    NoPath,
    #[error("start pose is in collision")]
    InvalidStart,
    #[error("goal cell is occupied")]
    GoalOccupied,
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
}

/// Rectangle centred on the vehicle reference point, long side along the heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct VehicleFootprint<T: Real> {
    pub length: T,
    pub width: T,
    pub min_turn_radius: T,
    pub allow_reverse: bool,
}

impl<T: Real> Default for VehicleFootprint<T> {
    fn default() -> Self {
        Self {
            length: T::lit(5.0),
            width: T::lit(3.4),
            min_turn_radius: T::lit(2.5),
            allow_reverse: true,
        }
    }
}

impl<T: Real> VehicleFootprint<T> {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.length > T::zero() && self.width > T::zero()) {
            return Err(PlanError::InvalidInput(
                "footprint length and width must be positive".into(),
            ));
        }
        if !(self.min_turn_radius >= T::zero()) {
            return Err(PlanError::InvalidInput(
                "minimum turn radius must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// The footprint grown by `margin` on every side.
    pub fn inflated(&self, margin: T) -> Self {
        let two = T::lit(2.0);
        Self {
            length: self.length + two * margin,
            width: self.width + two * margin,
            ..*self
        }
    }

    fn circumradius(&self) -> T {
        (self.length * self.length + self.width * self.width).sqrt() * T::lit(0.5)
    }

    fn inradius(&self) -> T {
        self.length.min(self.width) * T::lit(0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PathPose<T: Real> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> PathPose<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self { x, y, theta }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedPath<T: Real> {
    /// One pose per motion primitive, starting at the start pose.
    pub poses: Vec<PathPose<T>>,
    /// Dense poses at no more than half a cell apart, all checked during search.
    pub samples: Vec<PathPose<T>>,
    /// Travelled distance, meters.
    pub total_length: T,
    /// Search cost (reverse motion is penalised).
    pub cost: T,
    pub expansions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct PlannerConfig<T: Real> {
    pub heading_bins: usize,
    /// Lattice bins along each axis of a grid cell.
    pub position_bins_per_cell: usize,
    /// Arc length of a primitive in cells.
    pub step_cells: T,
    pub reverse_cost_factor: T,
    pub position_tolerance: T,
    pub heading_tolerance_deg: T,
    pub max_expansions: usize,
    pub unknown_blocks: bool,
    /// Clearance added around the footprint while planning, meters.
    pub safety_margin: T,
}

impl<T: Real> Default for PlannerConfig<T> {
    fn default() -> Self {
        Self {
            heading_bins: 72,
            position_bins_per_cell: 2,
            step_cells: T::lit(1.5),
            reverse_cost_factor: T::lit(2.0),
            position_tolerance: T::lit(0.5),
            heading_tolerance_deg: T::lit(15.0),
            max_expansions: 400_000,
            unknown_blocks: true,
            safety_margin: T::zero(),
        }
    }
}

fn is_blocked(state: Occupancy, unknown_blocks: bool) -> bool {
    match state {
        Occupancy::Occupied => true,
        Occupancy::Unknown => unknown_blocks,
        Occupancy::Free => false,
    }
}

/// Strict (positive-area) overlap of the rotated footprint rectangle at
/// `pose` with the axis-aligned square of half-size `half` centred at `sq`.
fn rect_overlaps_square<T: Real>(pose: &PathPose<T>, hl: T, hw: T, sq: [T; 2], half: T) -> bool {
    let (s, c) = pose.theta.sin_cos();
    let dx = pose.x - sq[0];
    let dy = pose.y - sq[1];
    let rx = hl * c.abs() + hw * s.abs();
    let ry = hl * s.abs() + hw * c.abs();
    if dx.abs() >= rx + half || dy.abs() >= ry + half {
        return false;
    }
    let sq_u = half * (c.abs() + s.abs());
    let du = dx * c + dy * s;
    let dv = -dx * s + dy * c;
    du.abs() < hl + sq_u && dv.abs() < hw + sq_u
}

fn footprint_corners<T: Real>(pose: &PathPose<T>, hl: T, hw: T) -> [[T; 2]; 4] {
    let (s, c) = pose.theta.sin_cos();
    let corner = |a: T, b: T| [pose.x + a * c - b * s, pose.y + a * s + b * c];
    [
        corner(hl, hw),
        corner(hl, -hw),
        corner(-hl, hw),
        corner(-hl, -hw),
    ]
}

/// Exact footprint test: true iff the footprint overlaps a blocked cell or
/// leaves the grid.
pub fn collision_check<T: Real>(
    pose: &PathPose<T>,
    footprint: &VehicleFootprint<T>,
    grid: &OccupancyGrid<T>,
    unknown_blocks: bool,
) -> bool {
    exact_collision(
        pose,
        footprint.length * T::lit(0.5),
        footprint.width * T::lit(0.5),
        grid,
        unknown_blocks,
    )
}

fn exact_collision<T: Real>(
    pose: &PathPose<T>,
    hl: T,
    hw: T,
    grid: &OccupancyGrid<T>,
    unknown_blocks: bool,
) -> bool {
    let spec = grid.spec();
    let corners = footprint_corners(pose, hl, hw);
    let x_max = spec.origin[0] + T::from_usize_lossy(spec.width) * spec.resolution;
    let y_max = spec.origin[1] + T::from_usize_lossy(spec.height) * spec.resolution;
    // Anything outside the grid counts as blocked.
    let slack = spec.resolution * T::lit(1e-9);
    if corners.iter().any(|p| {
        p[0] < spec.origin[0] - slack
            || p[1] < spec.origin[1] - slack
            || p[0] > x_max + slack
            || p[1] > y_max + slack
    }) {
        return true;
    }
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (
        T::infinity(),
        T::infinity(),
        T::neg_infinity(),
        T::neg_infinity(),
    );
    for p in corners {
        lo_x = lo_x.min(p[0]);
        lo_y = lo_y.min(p[1]);
        hi_x = hi_x.max(p[0]);
        hi_y = hi_y.max(p[1]);
    }
    let (i0, j0) = spec.world_to_cell_signed([lo_x, lo_y]);
    let (i1, j1) = spec.world_to_cell_signed([hi_x, hi_y]);
    let half = spec.resolution * T::lit(0.5);
    for j in j0.max(0)..=j1.min(spec.height as i64 - 1) {
        for i in i0.max(0)..=i1.min(spec.width as i64 - 1) {
            let idx = CellIndex::new(i as usize, j as usize);
            if is_blocked(grid.get(idx), unknown_blocks)
                && rect_overlaps_square(pose, hl, hw, spec.cell_center(idx), half)
            {
                return true;
            }
        }
    }
    false
}

/// Exact Euclidean distance (in cells) from every cell centre to the nearest
/// marked cell centre; `+inf` when nothing is marked.
pub fn distance_transform(width: usize, height: usize, marked: &[bool]) -> Vec<f64> {
    const BIG: f64 = 1e20;
    let mut g: Vec<f64> = marked.iter().map(|&m| if m { 0.0 } else { BIG }).collect();
    let mut f = vec![0.0; width.max(height)];
    let mut d = vec![0.0; width.max(height)];
    let mut v = vec![0usize; width.max(height)];
    let mut z = vec![0.0; width.max(height) + 1];
    // columns then rows
    for i in 0..width {
        for j in 0..height {
            f[j] = g[j * width + i];
        }
        edt_1d(&f[..height], &mut d[..height], &mut v, &mut z);
        for j in 0..height {
            g[j * width + i] = d[j];
        }
    }
    for j in 0..height {
        f[..width].copy_from_slice(&g[j * width..(j + 1) * width]);
        edt_1d(&f[..width], &mut d[..width], &mut v, &mut z);
        g[j * width..(j + 1) * width].copy_from_slice(&d[..width]);
    }
    g.into_iter()
        .map(|s| {
            if s >= BIG * 0.5 {
                f64::INFINITY
            } else {
                s.sqrt()
            }
        })
        .collect()
}

/// Lower envelope of parabolas (squared 1-D distance transform).
fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] is -inf, so this never steps below 0
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Footprint collision checker with a distance-transform fast path.
pub struct CollisionChecker<'a, T: Real> {
    grid: &'a OccupancyGrid<T>,
    half_length: T,
    half_width: T,
    unknown_blocks: bool,
    clearance: Vec<T>,
    circumradius: T,
    inradius: T,
}

impl<'a, T: Real> CollisionChecker<'a, T> {
    pub fn new(
        grid: &'a OccupancyGrid<T>,
        footprint: &VehicleFootprint<T>,
        unknown_blocks: bool,
    ) -> Self {
        let spec = grid.spec();
        let marked: Vec<bool> = grid
            .cells()
            .iter()
            .map(|&c| is_blocked(c, unknown_blocks))
            .collect();
        let clearance = distance_transform(spec.width, spec.height, &marked)
            .into_iter()
            .map(|d| {
                if d.is_finite() {
                    T::lit(d) * spec.resolution
                } else {
                    T::infinity()
                }
            })
            .collect();
        Self {
            grid,
            half_length: footprint.length * T::lit(0.5),
            half_width: footprint.width * T::lit(0.5),
            unknown_blocks,
            clearance,
            circumradius: footprint.circumradius(),
            inradius: footprint.inradius(),
        }
    }

    /// Distance from the cell centre to the nearest blocked cell centre, meters.
    pub fn clearance(&self, idx: CellIndex) -> T {
        self.clearance[self.grid.spec().linear(idx)]
    }

    pub fn collides(&self, pose: &PathPose<T>) -> bool {
        let spec = self.grid.spec();
        if let Some(idx) = spec.world_to_index([pose.x, pose.y]) {
            let d = self.clearance(idx);
            let cell_diag = spec.resolution * T::SQRT_2();
            let corners = footprint_corners(pose, self.half_length, self.half_width);
            let inside = corners.iter().all(|p| spec.world_to_index(*p).is_some());
            if inside && d - cell_diag > self.circumradius {
                return false;
            }
            if d + cell_diag * T::lit(0.5) < self.inradius {
                return true;
            }
        }
        exact_collision(
            pose,
            self.half_length,
            self.half_width,
            self.grid,
            self.unknown_blocks,
        )
    }
}

/// Cost-to-go field over grid cells, meters; `+inf` where unreachable.
#[derive(Clone, Debug, PartialEq)]
pub struct CostField<T: Real> {
    spec: GridSpec<T>,
    cost: Vec<T>,
}

impl<T: Real> CostField<T> {
    pub fn get(&self, idx: CellIndex) -> T {
        self.cost[self.spec.linear(idx)]
    }

    pub fn at(&self, xy: [T; 2]) -> T {
        self.spec
            .world_to_index(xy)
            .map_or(T::infinity(), |idx| self.get(idx))
    }

    pub fn values(&self) -> &[T] {
        &self.cost
    }
}

#[derive(Clone, Copy)]
struct QueueEntry<T: Real> {
    key: T,
    seq: u64,
    payload: usize,
}

impl<T: Real> PartialEq for QueueEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for QueueEntry<T> {}
impl<T: Real> PartialOrd for QueueEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for QueueEntry<T> {
    // Reversed so BinaryHeap pops the smallest key, then the earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .partial_cmp(&self.key)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}

fn dijkstra<T: Real>(
    spec: &GridSpec<T>,
    goal: CellIndex,
    allowed: &[bool],
    corner_cutting: bool,
) -> Vec<T> {
    let mut cost = vec![T::infinity(); spec.len()];
    let mut heap = BinaryHeap::new();
    let g = spec.linear(goal);
    cost[g] = T::zero();
    let mut seq = 0u64;
    heap.push(QueueEntry {
        key: T::zero(),
        seq,
        payload: g,
    });
    let straight = spec.resolution;
    let diagonal = spec.resolution * T::SQRT_2();
    while let Some(QueueEntry { key, payload, .. }) = heap.pop() {
        if key > cost[payload] {
            continue;
        }
        let c = spec.unlinear(payload);
        for (di, dj) in [
            (-1i64, -1i64),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ] {
            let (ni, nj) = (c.i as i64 + di, c.j as i64 + dj);
            if !spec.contains(ni, nj) {
                continue;
            }
            let nk = spec.linear(CellIndex::new(ni as usize, nj as usize));
            if !allowed[nk] {
                continue;
            }
            let diag = di != 0 && dj != 0;
            if diag && !corner_cutting {
                let a = spec.linear(CellIndex::new(ni as usize, c.j));
                let b = spec.linear(CellIndex::new(c.i, nj as usize));
                if !allowed[a] || !allowed[b] {
                    continue;
                }
            }
            let nc = key + if diag { diagonal } else { straight };
            if nc < cost[nk] {
                cost[nk] = nc;
                seq += 1;
                heap.push(QueueEntry {
                    key: nc,
                    seq,
                    payload: nk,
                });
            }
        }
    }
    cost
}

/// 8-connected shortest distance from every free cell to the goal cell.
/// Diagonal moves may not squeeze between two blocked cells.
pub fn holonomic_heuristic<T: Real>(
    grid: &OccupancyGrid<T>,
    goal: [T; 2],
    unknown_blocks: bool,
) -> Result<CostField<T>, PlanError> {
    let spec = *grid.spec();
    let goal_idx = spec.world_to_index(goal).ok_or(PlanError::GoalOccupied)?;
    if is_blocked(grid.get(goal_idx), unknown_blocks) {
        return Err(PlanError::GoalOccupied);
    }
    let allowed: Vec<bool> = grid
        .cells()
        .iter()
        .map(|&c| !is_blocked(c, unknown_blocks))
        .collect();
    Ok(CostField {
        spec,
        cost: dijkstra(&spec, goal_idx, &allowed, false),
    })
}

/// Cost-to-go restricted to cells the footprint centre can occupy; used as the
/// search heuristic. Corner cutting is allowed so values stay optimistic.
fn clearance_field<T: Real>(
    checker: &CollisionChecker<'_, T>,
    goal: CellIndex,
    inradius: T,
) -> CostField<T> {
    let spec = *checker.grid.spec();
    let threshold = inradius - spec.resolution * T::SQRT_2();
    let allowed: Vec<bool> = (0..spec.len())
        .map(|k| checker.clearance[k] >= threshold)
        .collect();
    if !allowed[spec.linear(goal)] {
        return CostField {
            spec,
            cost: vec![T::infinity(); spec.len()],
        };
    }
    CostField {
        spec,
        cost: dijkstra(&spec, goal, &allowed, true),
    }
}

#[derive(Clone, Copy)]
struct SearchNode<T: Real> {
    pose: PathPose<T>,
    g: T,
    parent: Option<usize>,
    /// Arc length travelled from the parent (negative when reversing).
    travel: T,
    curvature: T,
    /// In-place rotation from the parent, radians.
    spin: T,
}

struct Terminal<T: Real> {
    node: usize,
    goal_pose: PathPose<T>,
    travel: T,
    cost: T,
}

struct Search<'a, T: Real> {
    checker: CollisionChecker<'a, T>,
    field: CostField<T>,
    goal: PathPose<T>,
    cfg: PlannerConfig<T>,
    footprint: VehicleFootprint<T>,
    sample_step: T,
    heading_tol: T,
}

impl<T: Real> Search<'_, T> {
    fn heuristic(&self, p: &PathPose<T>) -> T {
        let euclid = p.distance(&self.goal);
        let field = self.field.at([p.x, p.y]);
        if field.is_infinite() {
            return T::infinity();
        }
        let res = self.checker.grid.spec().resolution;
        let grid_bound = field * (T::PI() / T::lit(8.0)).cos() - res * T::SQRT_2();
        euclid.max(grid_bound)
    }

    fn key(&self, p: &PathPose<T>) -> Option<(usize, usize, usize)> {
        let spec = self.checker.grid.spec();
        spec.world_to_index([p.x, p.y])?;
        let per_cell = T::from_usize_lossy(self.cfg.position_bins_per_cell);
        let bin = |v: T, o: T| {
            ((v - o) / spec.resolution * per_cell)
                .floor()
                .to_usize()
                .unwrap_or(0)
        };
        let bins = self.cfg.heading_bins;
        let width = (T::PI() + T::PI()) / T::from_usize_lossy(bins);
        let b = (wrap_angle(p.theta) / width)
            .round()
            .to_i64()
            .unwrap_or(0)
            .rem_euclid(bins as i64) as usize;
        Some((bin(p.x, spec.origin[0]), bin(p.y, spec.origin[1]), b))
    }

    /// Pose after travelling `s` along an arc of the given curvature (or spinning by `spin`).
    fn advance(from: &PathPose<T>, s: T, curvature: T) -> PathPose<T> {
        if curvature == T::zero() {
            let (sn, cs) = from.theta.sin_cos();
            return PathPose::new(from.x + s * cs, from.y + s * sn, from.theta);
        }
        let dtheta = s * curvature;
        let theta = from.theta + dtheta;
        let r = T::one() / curvature;
        PathPose::new(
            from.x + r * (theta.sin() - from.theta.sin()),
            from.y - r * (theta.cos() - from.theta.cos()),
            wrap_angle(theta),
        )
    }

    /// Dense samples along a primitive (excluding the start), or `None` on collision.
    fn sweep(
        &self,
        from: &PathPose<T>,
        travel: T,
        curvature: T,
        spin: T,
    ) -> Option<Vec<PathPose<T>>> {
        let n = if spin != T::zero() {
            let per = T::lit(5.0).to_radians();
            (spin.abs() / per).ceil().to_usize().unwrap_or(1).max(1)
        } else {
            (travel.abs() / self.sample_step)
                .ceil()
                .to_usize()
                .unwrap_or(1)
                .max(1)
        };
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let f = T::from_usize_lossy(k) / T::from_usize_lossy(n);
            let pose = if spin != T::zero() {
                PathPose::new(from.x, from.y, wrap_angle(from.theta + spin * f))
            } else {
                Self::advance(from, travel * f, curvature)
            };
            if self.checker.collides(&pose) {
                return None;
            }
            out.push(pose);
        }
        Some(out)
    }

    /// Straight finishing segment to the exact goal position, if admissible.
    fn finish(&self, from: &PathPose<T>) -> Option<(T, PathPose<T>)> {
        let d = from.distance(&self.goal);
        if d > self.cfg.position_tolerance
            || wrap_angle(from.theta - self.goal.theta).abs() > self.heading_tol
        {
            return None;
        }
        let final_pose = PathPose::new(self.goal.x, self.goal.y, from.theta);
        if d <= T::epsilon() * T::lit(16.0) {
            return Some((T::zero(), final_pose));
        }
        let dir = (self.goal.y - from.y).atan2(self.goal.x - from.x);
        let travel = if wrap_angle(dir - from.theta).abs() <= self.heading_tol {
            d
        } else if self.footprint.allow_reverse
            && wrap_angle(dir - from.theta - T::PI()).abs() <= self.heading_tol
        {
            -d
        } else {
            return None;
        };
        let n = (d / self.sample_step).ceil().to_usize().unwrap_or(1).max(1);
        for k in 1..=n {
            let f = T::from_usize_lossy(k) / T::from_usize_lossy(n);
            let p = PathPose::new(
                from.x + (self.goal.x - from.x) * f,
                from.y + (self.goal.y - from.y) * f,
                from.theta,
            );
            if self.checker.collides(&p) {
                return None;
            }
        }
        Some((travel, final_pose))
    }

    fn primitives(&self) -> Vec<(T, T, T)> {
        let res = self.checker.grid.spec().resolution;
        let step = self.cfg.step_cells * res;
        let mut prims = vec![];
        let r = self.footprint.min_turn_radius;
        let dirs: &[T] = if self.footprint.allow_reverse {
            &[T::one(), -T::one()]
        } else {
            &[T::one()]
        };
        for &dir in dirs {
            prims.push((dir * step, T::zero(), T::zero()));
            if r > T::zero() {
                let k = T::one() / r;
                prims.push((dir * step, k, T::zero()));
                prims.push((dir * step, -k, T::zero()));
            }
        }
        if r == T::zero() {
            let spin = T::lit(15.0).to_radians();
            prims.push((T::zero(), T::zero(), spin));
            prims.push((T::zero(), T::zero(), -spin));
        }
        prims
    }

    fn cost_of(&self, travel: T, spin: T) -> T {
        if spin != T::zero() {
            // In-place rotations cost as much as the outer track travels.
            return spin.abs() * self.footprint.width * T::lit(0.5);
        }
        if travel < T::zero() {
            -travel * self.cfg.reverse_cost_factor
        } else {
            travel
        }
    }
}

/// Plans from `start` to within tolerance of `goal`.
pub fn plan<T: Real>(
    grid: &OccupancyGrid<T>,
    start: PathPose<T>,
    goal: PathPose<T>,
    footprint: &VehicleFootprint<T>,
    cfg: &PlannerConfig<T>,
) -> Result<PlannedPath<T>, PlanError> {
    footprint.validate()?;
    if cfg.heading_bins == 0 || cfg.position_bins_per_cell == 0 || !(cfg.step_cells > T::zero()) {
        return Err(PlanError::InvalidInput(
            "lattice bins and step length must be positive".into(),
        ));
    }
    let planning_fp = footprint.inflated(cfg.safety_margin);
    let checker = CollisionChecker::new(grid, &planning_fp, cfg.unknown_blocks);
    if checker.collides(&start) {
        return Err(PlanError::InvalidStart);
    }
    if checker.collides(&goal) {
        return Err(PlanError::NoPath);
    }
    let spec = *grid.spec();
    let goal_idx = spec
        .world_to_index([goal.x, goal.y])
        .ok_or(PlanError::NoPath)?;
    let field = clearance_field(&checker, goal_idx, planning_fp.inradius());
    let search = Search {
        checker,
        field,
        goal,
        cfg: *cfg,
        footprint: planning_fp,
        sample_step: spec.resolution * T::lit(0.5),
        heading_tol: cfg.heading_tolerance_deg.to_radians(),
    };
    let h0 = search.heuristic(&start);
    if h0.is_infinite() {
        return Err(PlanError::NoPath);
    }

    let prims = search.primitives();
    let mut nodes = vec![SearchNode {
        pose: start,
        g: T::zero(),
        parent: None,
        travel: T::zero(),
        curvature: T::zero(),
        spin: T::zero(),
    }];
    let mut terminals: Vec<Terminal<T>> = vec![];
    let mut best_g: HashMap<(usize, usize, usize), T> = HashMap::new();
    let mut closed: HashSet<(usize, usize, usize)> = HashSet::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    // payload < TERMINAL_BASE: search node, otherwise terminal index offset
    const TERMINAL_BASE: usize = usize::MAX / 2;
    if let Some(k) = search.key(&start) {
        best_g.insert(k, T::zero());
    }
    open.push(QueueEntry {
        key: h0,
        seq,
        payload: 0,
    });
    if let Some((travel, pose)) = search.finish(&start) {
        let cost = search.cost_of(travel, T::zero());
        terminals.push(Terminal {
            node: 0,
            goal_pose: pose,
            travel,
            cost,
        });
        seq += 1;
        open.push(QueueEntry {
            key: cost,
            seq,
            payload: TERMINAL_BASE,
        });
    }

    let mut expansions = 0usize;
    while let Some(entry) = open.pop() {
        if entry.payload >= TERMINAL_BASE {
            let t = &terminals[entry.payload - TERMINAL_BASE];
            return Ok(reconstruct(&search, &nodes, t, expansions));
        }
        let node = nodes[entry.payload];
        let Some(key) = search.key(&node.pose) else {
            continue;
        };
        if closed.contains(&key) || best_g.get(&key).is_some_and(|&g| node.g > g) {
            continue;
        }
        closed.insert(key);
        expansions += 1;
        if expansions > cfg.max_expansions {
            return Err(PlanError::NoPath);
        }
        for &(travel, curvature, spin) in &prims {
            let end = if spin != T::zero() {
                PathPose::new(node.pose.x, node.pose.y, wrap_angle(node.pose.theta + spin))
            } else {
                Search::advance(&node.pose, travel, curvature)
            };
            let Some(child_key) = search.key(&end) else {
                continue;
            };
            if closed.contains(&child_key) {
                continue;
            }
            let g = node.g + search.cost_of(travel, spin);
            if best_g.get(&child_key).is_some_and(|&old| g >= old) {
                continue;
            }
            let h = search.heuristic(&end);
            if h.is_infinite() {
                continue;
            }
            if search.sweep(&node.pose, travel, curvature, spin).is_none() {
                continue;
            }
            best_g.insert(child_key, g);
            let idx = nodes.len();
            nodes.push(SearchNode {
                pose: end,
                g,
                parent: Some(entry.payload),
                travel,
                curvature,
                spin,
            });
            seq += 1;
            open.push(QueueEntry {
                key: g + h,
                seq,
                payload: idx,
            });
            if let Some((ftravel, pose)) = search.finish(&end) {
                let cost = g + search.cost_of(ftravel, T::zero());
                terminals.push(Terminal {
                    node: idx,
                    goal_pose: pose,
                    travel: ftravel,
                    cost,
                });
                seq += 1;
                open.push(QueueEntry {
                    key: cost,
                    seq,
                    payload: TERMINAL_BASE + terminals.len() - 1,
                });
            }
        }
    }
    Err(PlanError::NoPath)
}

fn reconstruct<T: Real>(
    search: &Search<'_, T>,
    nodes: &[SearchNode<T>],
    t: &Terminal<T>,
    expansions: usize,
) -> PlannedPath<T> {
    let mut chain = vec![t.node];
    while let Some(p) = nodes[*chain.last().unwrap()].parent {
        chain.push(p);
    }
    chain.reverse();
    let mut poses = vec![];
    let mut samples = vec![nodes[chain[0]].pose];
    let mut length = T::zero();
    for (k, &n) in chain.iter().enumerate() {
        let node = &nodes[n];
        if k > 0 {
            let parent = &nodes[chain[k - 1]];
            samples.extend(
                search
                    .sweep(&parent.pose, node.travel, node.curvature, node.spin)
                    .expect("path re-sweep is collision-free"),
            );
            length += node.travel.abs();
        }
        poses.push(node.pose);
    }
    let last = nodes[t.node].pose;
    if t.travel != T::zero() {
        let n = (t.travel.abs() / search.sample_step)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        for k in 1..=n {
            let f = T::from_usize_lossy(k) / T::from_usize_lossy(n);
            samples.push(PathPose::new(
                last.x + (t.goal_pose.x - last.x) * f,
                last.y + (t.goal_pose.y - last.y) * f,
                last.theta,
            ));
        }
        length += t.travel.abs();
        poses.push(t.goal_pose);
    }
    PlannedPath {
        poses,
        samples,
        total_length: length,
        cost: t.cost,
        expansions,
    }
}

/// Lower bound the planner uses for the remaining cost from `pose`.
pub fn planner_heuristic<T: Real>(
    grid: &OccupancyGrid<T>,
    pose: &PathPose<T>,
    goal: &PathPose<T>,
    footprint: &VehicleFootprint<T>,
    cfg: &PlannerConfig<T>,
) -> T {
    let fp = footprint.inflated(cfg.safety_margin);
    let checker = CollisionChecker::new(grid, &fp, cfg.unknown_blocks);
    let Some(goal_idx) = grid.spec().world_to_index([goal.x, goal.y]) else {
        return T::infinity();
    };
    let field = clearance_field(&checker, goal_idx, fp.inradius());
    let search = Search {
        checker,
        field,
        goal: *goal,
        cfg: *cfg,
        footprint: fp,
        sample_step: grid.spec().resolution * T::lit(0.5),
        heading_tol: cfg.heading_tolerance_deg.to_radians(),
    };
    search.heuristic(pose)
}
