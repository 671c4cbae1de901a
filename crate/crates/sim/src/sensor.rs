//! Virtual camera and LiDAR.
//!
//! The label image is a z-buffered splat of the semantic texture (plus the
//! vertical faces of raised obstacles). LiDAR points are drawn uniformly over
//! the camera's ground footprint and kept only when the depth buffer shows them
//! as visible, so occlusion matches the image.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use travmap::semantics::UNLABELED;
use travmap::{Camera, CameraModel, LabelImage, Point, Pose, SemanticClass};

use crate::world::World;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub image_width: usize,
    pub image_height: usize,
    pub hfov_deg: f64,
    /// Downward tilt of the optical axis, degrees.
    pub pitch_deg: f64,
    /// Sensor height above the terrain at each survey viewpoint, meters.
    pub mount_height: f64,
    /// Candidate ground samples drawn per frame before visibility culling.
    pub points_per_frame: usize,
    /// Standard deviation of the Gaussian height noise, meters.
    pub noise_sigma: f64,
    pub min_range: f64,
    pub max_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            image_width: 640,
            image_height: 360,
            hfov_deg: 56.8,
            pitch_deg: 25.0,
            mount_height: 4.0,
            points_per_frame: 20_000,
            noise_sigma: 0.02,
            min_range: 1.0,
            max_range: 30.0,
        }
    }
}

/// One synchronized sensor sample.
#[derive(Clone, Debug)]
pub struct Frame {
    pub stamp: f64,
    pub pose: Pose<f64>,
    pub camera: Camera,
    pub cloud: Vec<Point>,
    pub labels: LabelImage,
}

/// World-to-camera model for a sensor at `position` facing `yaw`, tilted down by `pitch_deg`.
pub fn camera_at(position: [f64; 3], yaw: f64, cfg: &SensorConfig) -> Camera {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = cfg.pitch_deg.to_radians().sin_cos();
    let right = [sy, -cy, 0.0];
    let down = [-sp * cy, -sp * sy, -cp];
    let forward = [cp * cy, cp * sy, -sp];
    let rows = [right, down, forward];
    let mut e = [[0.0; 4]; 4];
    for r in 0..3 {
        e[r][..3].copy_from_slice(&rows[r]);
        e[r][3] = -(0..3).map(|c| rows[r][c] * position[c]).sum::<f64>();
    }
    e[3][3] = 1.0;
    let k = CameraModel::intrinsics_from_fov(cfg.image_width, cfg.image_height, cfg.hfov_deg);
    CameraModel::new(k, e, cfg.image_width, cfg.image_height).expect("rigid extrinsics")
}

/// Rendered label image and its depth buffer (camera z, `+inf` where empty).
pub struct Render {
    pub labels: LabelImage,
    pub depth: Vec<f64>,
}

struct Canvas {
    w: usize,
    h: usize,
    depth: Vec<f64>,
    label: Vec<u8>,
}

impl Canvas {
    /// Fills the pixels covered by a square of side `size` pixels centred at `uv`.
    fn splat(&mut self, uv: [f64; 2], size: f64, depth: f64, label: u8) {
        let half = 0.5 * size;
        if uv[0] + half < 0.0
            || uv[1] + half < 0.0
            || uv[0] - half >= self.w as f64
            || uv[1] - half >= self.h as f64
        {
            return;
        }
        let u0 = (uv[0] - half).floor().max(0.0) as usize;
        let v0 = (uv[1] - half).floor().max(0.0) as usize;
        let u1 = ((uv[0] + half).floor() as usize).min(self.w - 1);
        let v1 = ((uv[1] + half).floor() as usize).min(self.h - 1);
        for v in v0..=v1 {
            let row = v * self.w;
            for u in u0..=u1 {
                let k = row + u;
                if depth < self.depth[k] {
                    self.depth[k] = depth;
                    self.label[k] = label;
                }
            }
        }
    }
}

/// Axis-aligned world region that can appear in front of the camera.
fn view_bounds(
    world: &World,
    position: [f64; 3],
    yaw: f64,
    cfg: &SensorConfig,
) -> ([f64; 2], [f64; 2]) {
    let half = 0.5 * cfg.hfov_deg.to_radians() + 0.2;
    let reach = cfg.max_range * 1.5;
    let mut lo = [position[0], position[1]];
    let mut hi = lo;
    for k in 0..=8 {
        let a = yaw - half + 2.0 * half * k as f64 / 8.0;
        let p = [position[0] + reach * a.cos(), position[1] + reach * a.sin()];
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (
        [lo[0].max(0.0), lo[1].max(0.0)],
        [hi[0].min(world.extent[0]), hi[1].min(world.extent[1])],
    )
}

pub fn render(
    world: &World,
    camera: &Camera,
    position: [f64; 3],
    yaw: f64,
    cfg: &SensorConfig,
) -> Render {
    let (w, h) = (camera.width, camera.height);
    let mut canvas = Canvas {
        w,
        h,
        depth: vec![f64::INFINITY; w * h],
        label: vec![UNLABELED; w * h],
    };
    let f = camera.k[0][0];
    let (lo, hi) = view_bounds(world, position, yaw, cfg);
    let t = world.texel;
    let i0 = (lo[0] / t).floor() as usize;
    let j0 = (lo[1] / t).floor() as usize;
    let i1 = ((hi[0] / t).ceil() as usize).min(world.nx);
    let j1 = ((hi[1] / t).ceil() as usize).min(world.ny);
    for j in j0..j1 {
        for i in i0..i1 {
            let c = world.texel_center(i, j);
            let z = world.terrain_height(c) + world.raised_height(i, j);
            let p = [c[0], c[1], z];
            let depth = camera.to_camera(p)[2];
            if !(depth > 0.05) {
                continue;
            }
            let Some(uv) = project_unclipped(camera, p) else {
                continue;
            };
            let size = 1.05 * f * t / depth;
            if uv[0] + size < 0.0
                || uv[1] + size < 0.0
                || uv[0] - size >= w as f64
                || uv[1] - size >= h as f64
            {
                continue;
            }
            canvas.splat(uv, size, depth, world.label(i, j) as u8);
        }
    }
    for solid in &world.solids {
        for (a, b, n) in solid.faces() {
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            if n[0] * (position[0] - mid[0]) + n[1] * (position[1] - mid[1]) <= 0.0 {
                continue;
            }
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let nu = (len / t).ceil().max(1.0) as usize;
            let nv = (solid.height / t).ceil().max(1.0) as usize;
            for ku in 0..nu {
                let s = (ku as f64 + 0.5) / nu as f64;
                let q = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let base = world.terrain_height(q);
                for kv in 0..nv {
                    let p = [
                        q[0],
                        q[1],
                        base + (kv as f64 + 0.5) / nv as f64 * solid.height,
                    ];
                    let depth = camera.to_camera(p)[2];
                    if !(depth > 0.05) {
                        continue;
                    }
                    let Some(uv) = project_unclipped(camera, p) else {
                        continue;
                    };
                    canvas.splat(uv, 1.05 * f * t / depth, depth, solid.class as u8);
                }
            }
        }
    }
    let labels = LabelImage::new(w, h, canvas.label).expect("texture holds valid classes");
    Render {
        labels,
        depth: canvas.depth,
    }
}

/// Pixel coordinates without the image-bounds check.
fn project_unclipped(camera: &Camera, p: [f64; 3]) -> Option<[f64; 2]> {
    let c = camera.to_camera(p);
    if !(c[2] > 0.0) {
        return None;
    }
    let k = &camera.k;
    let wz = k[2][2] * c[2];
    Some([
        (k[0][0] * c[0] + k[0][1] * c[1] + k[0][2] * c[2]) / wz,
        (k[1][1] * c[1] + k[1][2] * c[2]) / wz,
    ])
}

fn visible(camera: &Camera, render: &Render, p: [f64; 3]) -> bool {
    let Some(uv) = camera.project(p) else {
        return false;
    };
    let k = uv[1] as usize * camera.width + uv[0] as usize;
    let depth = camera.to_camera(p)[2];
    depth <= render.depth[k] + (0.1 + 0.01 * depth)
}

/// Samples a point cloud and renders a label image from `pose`
/// (sensor position and heading; the tilt comes from `cfg`).
pub fn sense(world: &World, pose: &Pose<f64>, cfg: &SensorConfig, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let yaw = pose_yaw(pose);
    let position = pose.position;
    let camera = camera_at(position, yaw, cfg);
    let render = render(world, &camera, position, yaw, cfg);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).expect("finite sigma");
    let jitter = |rng: &mut ChaCha8Rng| {
        if cfg.noise_sigma > 0.0 {
            noise.sample(rng)
        } else {
            0.0
        }
    };

    let half = 0.5 * cfg.hfov_deg.to_radians();
    let (r0, r1) = (cfg.min_range, cfg.max_range);
    let mut cloud = Vec::with_capacity(cfg.points_per_frame);
    for _ in 0..cfg.points_per_frame {
        let r = (r0 * r0 + rng.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
        let a = yaw + rng.random_range(-half..half);
        let xy = [position[0] + r * a.cos(), position[1] + r * a.sin()];
        let dz = jitter(&mut rng);
        if !world.contains(xy) {
            continue;
        }
        let p = [xy[0], xy[1], world.surface_height(xy)];
        if visible(&camera, &render, p) {
            cloud.push(Point::new(pose.stamp, p[0], p[1], p[2] + dz));
        }
    }

    // Facing sides of raised obstacles at the ground sampling density.
    let density = cfg.points_per_frame as f64 / (half * (r1 * r1 - r0 * r0));
    for solid in &world.solids {
        for (a, b, n) in solid.faces() {
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            if n[0] * (position[0] - mid[0]) + n[1] * (position[1] - mid[1]) <= 0.0 {
                continue;
            }
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let count = (density * len * solid.height).round() as usize;
            for _ in 0..count {
                let s: f64 = rng.random();
                let hz: f64 = rng.random();
                let dz = jitter(&mut rng);
                // Nudged outward so the point sits in front of its own face.
                let q = [
                    a[0] + s * (b[0] - a[0]) + 1e-3 * n[0],
                    a[1] + s * (b[1] - a[1]) + 1e-3 * n[1],
                ];
                let p = [q[0], q[1], world.terrain_height(q) + hz * solid.height];
                if world.contains(q) && visible(&camera, &render, p) {
                    cloud.push(Point::new(pose.stamp, p[0], p[1], p[2] + dz));
                }
            }
        }
    }
    Frame {
        stamp: pose.stamp,
        pose: *pose,
        camera,
        cloud,
        labels: render.labels,
    }
}

pub fn pose_yaw(pose: &Pose<f64>) -> f64 {
    let [w, x, y, z] = pose.orientation;
    (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
}

/// Fraction of image pixels carrying `class`.
pub fn label_fraction(img: &LabelImage, class: SemanticClass) -> f64 {
    let n = img.pixels().iter().filter(|&&p| p == class as u8).count();
    n as f64 / img.pixels().len().max(1) as f64
}
