//! Synthetic terrain: a heightfield, a semantic texture and raised obstacles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use travmap::SemanticClass;

use crate::SimError;

pub const DEFAULT_TEXEL: f64 = 0.1;

/// One terrain feature. Heights add up; labels are painted in list order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Feature {
    /// Up-slope of length `run`, a flat top of length `top`, then a matching down-slope.
    Ramp {
        start: [f64; 2],
        heading_deg: f64,
        slope_deg: f64,
        run: f64,
        top: f64,
        width: f64,
    },
    /// Smooth (raised cosine) mound.
    Hill {
        center: [f64; 2],
        radius: f64,
        height: f64,
    },
    Pit {
        center: [f64; 2],
        radius: f64,
        depth: f64,
    },
    Water {
        min: [f64; 2],
        max: [f64; 2],
    },
    Mixed {
        min: [f64; 2],
        max: [f64; 2],
    },
    Bumpy {
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default = "default_bump_amplitude")]
        amplitude: f64,
        #[serde(default = "default_bump_wavelength")]
        wavelength: f64,
    },
    RockPile {
        center: [f64; 2],
        radius: f64,
        height: f64,
    },
    /// Thin straight obstacle such as a steel bar lying on the ground.
    Bar {
        start: [f64; 2],
        end: [f64; 2],
        width: f64,
        height: f64,
        #[serde(default = "default_obstacle_class")]
        class: SemanticClass,
    },
    /// Axis-aligned box standing on the terrain.
    Block {
        min: [f64; 2],
        max: [f64; 2],
        height: f64,
        #[serde(default = "default_obstacle_class")]
        class: SemanticClass,
    },
}

fn default_bump_amplitude() -> f64 {
    0.03
}

fn default_bump_wavelength() -> f64 {
    1.5
}

fn default_obstacle_class() -> SemanticClass {
    SemanticClass::Obstacle
}

/// `count` copies of `feature` moved to uniformly random positions inside `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatter {
    pub feature: Feature,
    pub count: usize,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    /// World size along x and y, meters.
    pub extent: [f64; 2],
    #[serde(default)]
    pub features: Vec<Feature>,
    #[serde(default)]
    pub scatter: Vec<Scatter>,
    #[serde(default)]
    pub difficult_terrain: bool,
    #[serde(default)]
    pub obstacles: bool,
}

impl Feature {
    fn anchor(&self) -> [f64; 2] {
        match *self {
            Feature::Ramp { start, .. } => start,
            Feature::Hill { center, .. }
            | Feature::Pit { center, .. }
            | Feature::RockPile { center, .. } => center,
            Feature::Water { min, max }
            | Feature::Mixed { min, max }
            | Feature::Bumpy { min, max, .. } => [(min[0] + max[0]) / 2.0, (min[1] + max[1]) / 2.0],
            Feature::Block { min, max, .. } => [(min[0] + max[0]) / 2.0, (min[1] + max[1]) / 2.0],
            Feature::Bar { start, end, .. } => {
                [(start[0] + end[0]) / 2.0, (start[1] + end[1]) / 2.0]
            }
        }
    }

    /// The same feature shifted so its anchor lands on `to`.
    pub fn moved_to(&self, to: [f64; 2]) -> Feature {
        let a = self.anchor();
        let d = [to[0] - a[0], to[1] - a[1]];
        let sh = |p: [f64; 2]| [p[0] + d[0], p[1] + d[1]];
        let mut f = self.clone();
        match &mut f {
            Feature::Ramp { start, .. } => *start = sh(*start),
            Feature::Hill { center, .. }
            | Feature::Pit { center, .. }
            | Feature::RockPile { center, .. } => *center = sh(*center),
            Feature::Water { min, max }
            | Feature::Mixed { min, max }
            | Feature::Bumpy { min, max, .. }
            | Feature::Block { min, max, .. } => {
                *min = sh(*min);
                *max = sh(*max);
            }
            Feature::Bar { start, end, .. } => {
                *start = sh(*start);
                *end = sh(*end);
            }
        }
        f
    }

    /// Axis-aligned bounds of the area the feature touches.
    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Feature::Ramp {
                start,
                heading_deg,
                run,
                top,
                width,
                ..
            } => {
                let (s, c) = heading_deg.to_radians().sin_cos();
                let len = 2.0 * run + top;
                let hw = width / 2.0;
                let pts = [
                    [start[0] - hw * s, start[1] + hw * c],
                    [start[0] + hw * s, start[1] - hw * c],
                    [start[0] + len * c - hw * s, start[1] + len * s + hw * c],
                    [start[0] + len * c + hw * s, start[1] + len * s - hw * c],
                ];
                bbox(&pts)
            }
            Feature::Hill { center, radius, .. }
            | Feature::Pit { center, radius, .. }
            | Feature::RockPile { center, radius, .. } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Feature::Water { min, max }
            | Feature::Mixed { min, max }
            | Feature::Bumpy { min, max, .. }
            | Feature::Block { min, max, .. } => (min, max),
            Feature::Bar {
                start, end, width, ..
            } => {
                let (lo, hi) = bbox(&[start, end]);
                let r = width / 2.0;
                ([lo[0] - r, lo[1] - r], [hi[0] + r, hi[1] + r])
            }
        }
    }

    fn validate(&self, extent: [f64; 2]) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                bad(format!("{name} must be positive"))
            }
        };
        match *self {
            Feature::Ramp {
                slope_deg,
                run,
                top,
                width,
                ..
            } => {
                if !(0.0..90.0).contains(&slope_deg) {
                    return bad("ramp slope must lie in [0, 90) degrees".into());
                }
                positive("ramp run", run)?;
                positive("ramp width", width)?;
                if !(top >= 0.0) {
                    return bad("ramp top must be non-negative".into());
                }
            }
            Feature::Hill { radius, height, .. } | Feature::RockPile { radius, height, .. } => {
                positive("radius", radius)?;
                positive("height", height)?;
            }
            Feature::Pit { radius, depth, .. } => {
                positive("radius", radius)?;
                positive("depth", depth)?;
            }
            Feature::Water { min, max } | Feature::Mixed { min, max } => {
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return bad("patch min must be below max".into());
                }
            }
            Feature::Bumpy {
                min,
                max,
                amplitude,
                wavelength,
            } => {
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return bad("patch min must be below max".into());
                }
                positive("amplitude", amplitude)?;
                positive("wavelength", wavelength)?;
            }
            Feature::Bar {
                start,
                end,
                width,
                height,
                ..
            } => {
                positive("bar width", width)?;
                positive("bar height", height)?;
                if start == end {
                    return bad("bar start and end coincide".into());
                }
            }
            Feature::Block {
                min, max, height, ..
            } => {
                if !(min[0] < max[0] && min[1] < max[1]) {
                    return bad("block min must be below max".into());
                }
                positive("block height", height)?;
            }
        }
        let (lo, hi) = self.bounds();
        let eps = 1e-9;
        if lo[0] < -eps || lo[1] < -eps || hi[0] > extent[0] + eps || hi[1] > extent[1] + eps {
            return bad(format!("feature {self:?} leaves the world extent"));
        }
        Ok(())
    }
}

fn bbox(pts: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

fn raised_cosine(d: f64, radius: f64) -> f64 {
    if d >= radius {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * d / radius).cos())
    }
}

fn in_rect(p: [f64; 2], min: [f64; 2], max: [f64; 2]) -> bool {
    p[0] >= min[0] && p[0] < max[0] && p[1] >= min[1] && p[1] < max[1]
}

/// Distance along and across the segment from `a` to `b`.
fn segment_coords(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64, f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    let u = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len;
    let v = (-(p[0] - a[0]) * d[1] + (p[1] - a[1]) * d[0]) / len;
    (u, v, len)
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.extent[0] > 0.0 && self.extent[1] > 0.0)
            || !self.extent.iter().all(|v| v.is_finite())
        {
            return Err(SimError::InvalidSpec("extent must be positive".into()));
        }
        for f in &self.features {
            f.validate(self.extent)?;
        }
        for s in &self.scatter {
            if !(s.min[0] <= s.max[0] && s.min[1] <= s.max[1]) {
                return Err(SimError::InvalidSpec(
                    "scatter min must not exceed max".into(),
                ));
            }
            for corner in [s.min, s.max] {
                s.feature.moved_to(corner).validate(self.extent)?;
            }
        }
        Ok(())
    }

    /// Explicit features followed by the scattered copies drawn from `seed`.
    pub fn realized_features(&self) -> Vec<Feature> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = self.features.clone();
        for s in &self.scatter {
            for _ in 0..s.count {
                let x = if s.max[0] > s.min[0] {
                    rng.random_range(s.min[0]..s.max[0])
                } else {
                    s.min[0]
                };
                let y = if s.max[1] > s.min[1] {
                    rng.random_range(s.min[1]..s.max[1])
                } else {
                    s.min[1]
                };
                out.push(s.feature.moved_to([x, y]));
            }
        }
        out
    }

    /// True when a water patch spans the full height of the world except for a
    /// gap, so every straight crossing meets water.
    pub fn has_water_barrier(&self) -> bool {
        self.realized_features().iter().any(|f| match f {
            Feature::Water { min, max } => max[1] - min[1] >= 0.5 * self.extent[1] && min[0] > 0.0,
            _ => false,
        })
    }
}

/// Ground truth for one scenario on a regular texel lattice.
///
/// Terrain heights live on texel corners (`(nx + 1) x (ny + 1)` nodes);
/// labels, raised obstacle heights and true slopes live on texels.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub extent: [f64; 2],
    pub texel: f64,
    pub nx: usize,
    pub ny: usize,
    terrain: Vec<f64>,
    labels: Vec<SemanticClass>,
    raised: Vec<f64>,
    slope_deg: Vec<f64>,
    /// Raised features (bars and blocks) for face sampling.
    pub solids: Vec<Solid>,
}

/// Footprint polygon (as a rectangle in its own frame) of a raised feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Solid {
    pub center: [f64; 2],
    /// Unit direction of the long axis.
    pub axis: [f64; 2],
    pub half_length: f64,
    pub half_width: f64,
    pub height: f64,
    pub class: SemanticClass,
}

/// Offset used for ground-truth slope differences, meters.
pub const TRUE_SLOPE_BASELINE: f64 = 0.3;

pub fn generate_world(spec: &ScenarioSpec) -> Result<World, SimError> {
    generate_world_with_texel(spec, DEFAULT_TEXEL)
}

pub fn generate_world_with_texel(spec: &ScenarioSpec, texel: f64) -> Result<World, SimError> {
    spec.validate()?;
    if !(texel > 0.0) {
        return Err(SimError::InvalidSpec("texel size must be positive".into()));
    }
    let nx = (spec.extent[0] / texel).round() as usize;
    let ny = (spec.extent[1] / texel).round() as usize;
    if nx == 0 || ny == 0 {
        return Err(SimError::InvalidSpec("world smaller than one texel".into()));
    }
    let features = spec.realized_features();
    let mut terrain = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 0..=ny {
        for i in 0..=nx {
            let p = [i as f64 * texel, j as f64 * texel];
            terrain[j * (nx + 1) + i] = features.iter().map(|f| terrain_offset(f, p)).sum();
        }
    }
    let mut labels = vec![SemanticClass::Flat; nx * ny];
    let mut raised = vec![0.0; nx * ny];
    let mut solids = vec![];
    for f in &features {
        if let Some(s) = solid_of(f) {
            solids.push(s);
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let p = [(i as f64 + 0.5) * texel, (j as f64 + 0.5) * texel];
            let k = j * nx + i;
            for f in &features {
                if let Some(c) = paint(f, p) {
                    labels[k] = c;
                }
            }
            raised[k] = solids
                .iter()
                .filter(|s| s.contains(p))
                .map(|s| s.height)
                .fold(0.0, f64::max);
        }
    }
    let mut world = World {
        extent: spec.extent,
        texel,
        nx,
        ny,
        terrain,
        labels,
        raised,
        slope_deg: vec![],
        solids,
    };
    world.slope_deg = (0..nx * ny)
        .map(|k| {
            let p = world.texel_center(k % nx, k / nx);
            world.true_slope_deg(p)
        })
        .collect();
    Ok(world)
}

fn terrain_offset(f: &Feature, p: [f64; 2]) -> f64 {
    match *f {
        Feature::Ramp {
            start,
            heading_deg,
            slope_deg,
            run,
            top,
            width,
        } => {
            let (s, c) = heading_deg.to_radians().sin_cos();
            let (dx, dy) = (p[0] - start[0], p[1] - start[1]);
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            if v.abs() > width / 2.0 || u < 0.0 || u > 2.0 * run + top {
                return 0.0;
            }
            let t = slope_deg.to_radians().tan();
            t * u.min(run).min(2.0 * run + top - u)
        }
        Feature::Hill {
            center,
            radius,
            height,
        }
        | Feature::RockPile {
            center,
            radius,
            height,
        } => height * raised_cosine((p[0] - center[0]).hypot(p[1] - center[1]), radius),
        Feature::Pit {
            center,
            radius,
            depth,
        } => -depth * raised_cosine((p[0] - center[0]).hypot(p[1] - center[1]), radius),
        Feature::Bumpy {
            min,
            max,
            amplitude,
            wavelength,
        } => {
            if in_rect(p, min, max) {
                let w = 2.0 * std::f64::consts::PI / wavelength;
                amplitude * (w * (p[0] - min[0])).sin() * (w * (p[1] - min[1])).sin()
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

fn paint(f: &Feature, p: [f64; 2]) -> Option<SemanticClass> {
    match *f {
        Feature::Water { min, max } => in_rect(p, min, max).then_some(SemanticClass::Water),
        Feature::Mixed { min, max } => {
            in_rect(p, min, max).then_some(SemanticClass::MixedWaterDirt)
        }
        Feature::Bumpy { min, max, .. } => in_rect(p, min, max).then_some(SemanticClass::Bumpy),
        Feature::RockPile { center, radius, .. } => {
            ((p[0] - center[0]).hypot(p[1] - center[1]) < radius).then_some(SemanticClass::RockPile)
        }
        Feature::Bar { .. } | Feature::Block { .. } => {
            solid_of(f).filter(|s| s.contains(p)).map(|s| s.class)
        }
        _ => None,
    }
}

fn solid_of(f: &Feature) -> Option<Solid> {
    match *f {
        Feature::Bar {
            start,
            end,
            width,
            height,
            class,
        } => {
            let (_, _, len) = segment_coords(start, start, end);
            let axis = [(end[0] - start[0]) / len, (end[1] - start[1]) / len];
            Some(Solid {
                center: [(start[0] + end[0]) / 2.0, (start[1] + end[1]) / 2.0],
                axis,
                half_length: len / 2.0,
                half_width: width / 2.0,
                height,
                class,
            })
        }
        Feature::Block {
            min,
            max,
            height,
            class,
        } => Some(Solid {
            center: [(min[0] + max[0]) / 2.0, (min[1] + max[1]) / 2.0],
            axis: [1.0, 0.0],
            half_length: (max[0] - min[0]) / 2.0,
            half_width: (max[1] - min[1]) / 2.0,
            height,
            class,
        }),
        _ => None,
    }
}

impl Solid {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        let u = dx * self.axis[0] + dy * self.axis[1];
        let v = -dx * self.axis[1] + dy * self.axis[0];
        u.abs() <= self.half_length && v.abs() <= self.half_width
    }

    /// The four vertical faces as (corner a, corner b, outward normal).
    pub fn faces(&self) -> [([f64; 2], [f64; 2], [f64; 2]); 4] {
        let [ax, ay] = self.axis;
        let n = [-ay, ax];
        let pt = |u: f64, v: f64| {
            [
                self.center[0] + u * ax + v * n[0],
                self.center[1] + u * ay + v * n[1],
            ]
        };
        let (l, w) = (self.half_length, self.half_width);
        [
            (pt(l, -w), pt(l, w), [ax, ay]),
            (pt(-l, w), pt(-l, -w), [-ax, -ay]),
            (pt(l, w), pt(-l, w), n),
            (pt(-l, -w), pt(l, -w), [-n[0], -n[1]]),
        ]
    }
}

impl World {
    pub fn texel_center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.texel, (j as f64 + 0.5) * self.texel]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= self.extent[0] && p[1] <= self.extent[1]
    }

    pub fn texel_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        if !(p[0] >= 0.0 && p[1] >= 0.0) {
            return None;
        }
        let i = (p[0] / self.texel).floor() as usize;
        let j = (p[1] / self.texel).floor() as usize;
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Bilinear terrain height (obstacles excluded); clamped at the world edge.
    pub fn terrain_height(&self, p: [f64; 2]) -> f64 {
        let fx = (p[0] / self.texel).clamp(0.0, self.nx as f64);
        let fy = (p[1] / self.texel).clamp(0.0, self.ny as f64);
        let i = (fx.floor() as usize).min(self.nx - 1);
        let j = (fy.floor() as usize).min(self.ny - 1);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let w = self.nx + 1;
        let z = |a: usize, b: usize| self.terrain[b * w + a];
        let bottom = z(i, j) * (1.0 - tx) + z(i + 1, j) * tx;
        let top = z(i, j + 1) * (1.0 - tx) + z(i + 1, j + 1) * tx;
        bottom * (1.0 - ty) + top * ty
    }

    /// Height of the visible surface: terrain plus any obstacle standing on it.
    pub fn surface_height(&self, p: [f64; 2]) -> f64 {
        let extra = self
            .texel_of(p)
            .map_or(0.0, |(i, j)| self.raised[j * self.nx + i]);
        self.terrain_height(p) + extra
    }

    pub fn raised_height(&self, i: usize, j: usize) -> f64 {
        self.raised[j * self.nx + i]
    }

    pub fn label(&self, i: usize, j: usize) -> SemanticClass {
        self.labels[j * self.nx + i]
    }

    pub fn label_at(&self, p: [f64; 2]) -> Option<SemanticClass> {
        self.texel_of(p).map(|(i, j)| self.label(i, j))
    }

    /// Precomputed true terrain slope of a texel, degrees.
    pub fn slope(&self, i: usize, j: usize) -> f64 {
        self.slope_deg[j * self.nx + i]
    }

    /// Terrain slope from central differences over [`TRUE_SLOPE_BASELINE`].
    pub fn true_slope_deg(&self, p: [f64; 2]) -> f64 {
        let d = TRUE_SLOPE_BASELINE;
        let gx = (self.terrain_height([p[0] + d, p[1]]) - self.terrain_height([p[0] - d, p[1]]))
            / (2.0 * d);
        let gy = (self.terrain_height([p[0], p[1] + d]) - self.terrain_height([p[0], p[1] - d]))
            / (2.0 * d);
        gx.hypot(gy).atan().to_degrees()
    }

    /// Class fractions over the whole world, for reports.
    pub fn label_counts(&self) -> [usize; travmap::semantics::CLASS_COUNT] {
        let mut out = [0; travmap::semantics::CLASS_COUNT];
        for l in &self.labels {
            out[l.index()] += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(features: Vec<Feature>) -> ScenarioSpec {
        ScenarioSpec {
            id: "t".into(),
            seed: 7,
            extent: [20.0, 20.0],
            features,
            scatter: vec![],
            difficult_terrain: false,
            obstacles: false,
        }
    }

    #[test]
    fn ramp_has_requested_slope() {
        let w = generate_world(&spec(vec![Feature::Ramp {
            start: [2.0, 10.0],
            heading_deg: 0.0,
            slope_deg: 30.0,
            run: 6.0,
            top: 2.0,
            width: 6.0,
        }]))
        .unwrap();
        for x in [3.0, 4.5, 6.0, 7.0] {
            let s = w.true_slope_deg([x, 10.0]);
            assert!((s - 30.0).abs() <= 0.5, "slope {s} at x={x}");
        }
        assert!(w.true_slope_deg([9.0, 10.0]) < 0.5);
    }

    #[test]
    fn same_seed_same_world() {
        let mut s = spec(vec![]);
        s.scatter.push(Scatter {
            feature: Feature::RockPile {
                center: [0.0, 0.0],
                radius: 1.0,
                height: 0.2,
            },
            count: 5,
            min: [2.0, 2.0],
            max: [18.0, 18.0],
        });
        assert_eq!(generate_world(&s).unwrap(), generate_world(&s).unwrap());
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(generate_world(&s).unwrap(), generate_world(&other).unwrap());
    }

    #[test]
    fn water_patch_paints_water() {
        let w = generate_world(&spec(vec![Feature::Water {
            min: [5.0, 5.0],
            max: [8.0, 7.0],
        }]))
        .unwrap();
        for j in 0..w.ny {
            for i in 0..w.nx {
                let c = w.texel_center(i, j);
                let inside = (5.0..8.0).contains(&c[0]) && (5.0..7.0).contains(&c[1]);
                assert_eq!(w.label(i, j) == SemanticClass::Water, inside);
            }
        }
        assert_eq!(w.terrain_height([6.0, 6.0]), 0.0);
    }

    #[test]
    fn bar_is_raised_and_labeled() {
        let w = generate_world(&spec(vec![Feature::Bar {
            start: [5.0, 10.0],
            end: [8.0, 10.0],
            width: 0.2,
            height: 0.08,
            class: SemanticClass::Obstacle,
        }]))
        .unwrap();
        assert_eq!(w.surface_height([6.0, 10.05]), 0.08);
        assert_eq!(w.label_at([6.0, 10.05]), Some(SemanticClass::Obstacle));
        assert_eq!(w.surface_height([6.0, 10.5]), 0.0);
    }

    #[test]
    fn features_outside_extent_rejected() {
        let s = spec(vec![Feature::Hill {
            center: [19.0, 10.0],
            radius: 3.0,
            height: 1.0,
        }]);
        assert!(matches!(generate_world(&s), Err(SimError::InvalidSpec(_))));
        let s = spec(vec![Feature::Pit {
            center: [10.0, 10.0],
            radius: 3.0,
            depth: -1.0,
        }]);
        assert!(generate_world(&s).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let text = r#"
            id = "demo"
            seed = 3
            extent = [20.0, 20.0]
            obstacles = true

            [[features]]
            kind = "water"
            min = [1.0, 1.0]
            max = [4.0, 4.0]

            [[features]]
            kind = "block"
            min = [10.0, 10.0]
            max = [12.0, 11.0]
            height = 1.5
            class = "excavator"
        "#;
        let s: ScenarioSpec = toml::from_str(text).unwrap();
        assert_eq!(s.features.len(), 2);
        assert!(matches!(
            s.features[1],
            Feature::Block {
                class: SemanticClass::Excavator,
                ..
            }
        ));
        let again: ScenarioSpec = toml::from_str(&toml::to_string(&s).unwrap()).unwrap();
        assert_eq!(again, s);
    }
}
