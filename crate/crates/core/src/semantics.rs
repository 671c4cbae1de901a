//! Camera projection of LiDAR points into semantic label images and per-cell
//! label voting.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{ElevationGridMap, StampedPoint};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticsError {
    #[error("label image is {image_w}x{image_h} but camera expects {cam_w}x{cam_h}")]
    DimensionMismatch {
        image_w: usize,
        image_h: usize,
        cam_w: usize,
        cam_h: usize,
    },
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("invalid label value {value} at pixel {index}")]
    InvalidLabel { value: u8, index: usize },
}

/// Pixel value marking "no label".
pub const UNLABELED: u8 = 255;

pub const CLASS_COUNT: usize = 7;

/// Terrain classes, indexed 0..=6 in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticClass {
    Flat = 0,
    Bumpy = 1,
    MixedWaterDirt = 2,
    Water = 3,
    RockPile = 4,
    Obstacle = 5,
    Excavator = 6,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; CLASS_COUNT] = [
        SemanticClass::Flat,
        SemanticClass::Bumpy,
        SemanticClass::MixedWaterDirt,
        SemanticClass::Water,
        SemanticClass::RockPile,
        SemanticClass::Obstacle,
        SemanticClass::Excavator,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    /// Rank in the danger order used for tie-breaking; higher is more dangerous.
    pub fn danger_rank(self) -> u8 {
        match self {
            SemanticClass::Flat => 0,
            SemanticClass::Bumpy => 1,
            SemanticClass::MixedWaterDirt => 2,
            SemanticClass::Water => 3,
            SemanticClass::RockPile => 4,
            SemanticClass::Excavator => 5,
            SemanticClass::Obstacle => 6,
        }
    }

    /// Classes the vehicle must never enter.
    pub fn is_forbidden(self) -> bool {
        matches!(
            self,
            SemanticClass::RockPile
                | SemanticClass::Excavator
                | SemanticClass::Obstacle
                | SemanticClass::Water
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Flat => "flat",
            SemanticClass::Bumpy => "bumpy",
            SemanticClass::MixedWaterDirt => "mixed_water_dirt",
            SemanticClass::Water => "water",
            SemanticClass::RockPile => "rock_pile",
            SemanticClass::Obstacle => "obstacle",
            SemanticClass::Excavator => "excavator",
        }
    }
}

impl fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-class label counts of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LabelHistogram<T: Real> {
    counts: [T; CLASS_COUNT],
}

impl<T: Real> LabelHistogram<T> {
    pub fn from_counts(counts: [T; CLASS_COUNT]) -> Self {
        Self { counts }
    }

    pub fn add(&mut self, class: SemanticClass, weight: T) {
        self.counts[class.index()] += weight;
    }

    pub fn count(&self, class: SemanticClass) -> T {
        self.counts[class.index()]
    }

    pub fn counts(&self) -> &[T; CLASS_COUNT] {
        &self.counts
    }

    pub fn total(&self) -> T {
        self.counts.iter().copied().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c <= T::zero())
    }

    pub fn scale(&mut self, factor: T) {
        for c in &mut self.counts {
            *c *= factor;
        }
    }

    /// Most frequent class; ties go to the more dangerous class.
    pub fn majority(&self) -> Option<SemanticClass> {
        SemanticClass::ALL
            .iter()
            .copied()
            .filter(|c| self.count(*c) > T::zero())
            .max_by(|a, b| {
                self.count(*a)
                    .partial_cmp(&self.count(*b))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.danger_rank().cmp(&b.danger_rank()))
            })
    }
}

pub fn majority_label<T: Real>(hist: &LabelHistogram<T>) -> Option<SemanticClass> {
    hist.majority()
}

/// Pinhole camera: intrinsics `K`, world-to-camera extrinsics `E`, image size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CameraModel<T: Real> {
    pub k: [[T; 3]; 3],
    pub e: [[T; 4]; 4],
    pub width: usize,
    pub height: usize,
}

impl<T: Real> CameraModel<T> {
    pub fn new(
        k: [[T; 3]; 3],
        e: [[T; 4]; 4],
        width: usize,
        height: usize,
    ) -> Result<Self, SemanticsError> {
        let cam = Self {
            k,
            e,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Intrinsics for a horizontal field of view, principal point at the image centre.
    pub fn intrinsics_from_fov(width: usize, height: usize, hfov_deg: T) -> [[T; 3]; 3] {
        let half = T::lit(0.5);
        let f = T::from_usize_lossy(width) * half / (hfov_deg.to_radians() * half).tan();
        let z = T::zero();
        [
            [f, z, T::from_usize_lossy(width) * half],
            [z, f, T::from_usize_lossy(height) * half],
            [z, z, T::one()],
        ]
    }

    pub fn validate(&self) -> Result<(), SemanticsError> {
        let k = &self.k;
        if self.width == 0 || self.height == 0 {
            return Err(SemanticsError::InvalidCamera(
                "image size must be positive".into(),
            ));
        }
        if k[1][0] != T::zero() || k[2][0] != T::zero() || k[2][1] != T::zero() {
            return Err(SemanticsError::InvalidCamera(
                "K must be upper triangular".into(),
            ));
        }
        if !(k[0][0] > T::zero() && k[1][1] > T::zero() && k[2][2] > T::zero()) {
            return Err(SemanticsError::InvalidCamera(
                "K diagonal must be positive".into(),
            ));
        }
        let tol = T::lit(1e-6).max(T::epsilon() * T::lit(64.0));
        let r = self.rotation();
        for a in 0..3 {
            for b in 0..3 {
                let dot: T = (0..3).map(|c| r[a][c] * r[b][c]).sum();
                let want = if a == b { T::one() } else { T::zero() };
                if (dot - want).abs() > tol {
                    return Err(SemanticsError::InvalidCamera(
                        "E rotation block is not orthonormal".into(),
                    ));
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - T::one()).abs() > tol {
            return Err(SemanticsError::InvalidCamera(
                "E rotation has determinant != +1".into(),
            ));
        }
        let last = self.e[3];
        if last[0] != T::zero()
            || last[1] != T::zero()
            || last[2] != T::zero()
            || last[3] != T::one()
        {
            return Err(SemanticsError::InvalidCamera(
                "E last row must be [0 0 0 1]".into(),
            ));
        }
        Ok(())
    }

    fn rotation(&self) -> [[T; 3]; 3] {
        let e = &self.e;
        [
            [e[0][0], e[0][1], e[0][2]],
            [e[1][0], e[1][1], e[1][2]],
            [e[2][0], e[2][1], e[2][2]],
        ]
    }

    /// World point to camera frame.
    pub fn to_camera(&self, p: [T; 3]) -> [T; 3] {
        let e = &self.e;
        let mut c = [T::zero(); 3];
        for (r, out) in c.iter_mut().enumerate() {
            *out = e[r][0] * p[0] + e[r][1] * p[1] + e[r][2] * p[2] + e[r][3];
        }
        c
    }

    /// Continuous pixel coordinates, or `None` when behind the camera or off-image.
    pub fn project(&self, p: [T; 3]) -> Option<[T; 2]> {
        let c = self.to_camera(p);
        if !(c[2] > T::zero()) {
            return None;
        }
        let k = &self.k;
        let w = k[2][2] * c[2];
        let u = (k[0][0] * c[0] + k[0][1] * c[1] + k[0][2] * c[2]) / w;
        let v = (k[1][1] * c[1] + k[1][2] * c[2]) / w;
        let inside = u >= T::zero()
            && v >= T::zero()
            && u < T::from_usize_lossy(self.width)
            && v < T::from_usize_lossy(self.height);
        inside.then_some([u, v])
    }

    /// World point on the ray through pixel `uv` at camera depth `depth`.
    pub fn back_project(&self, uv: [T; 2], depth: T) -> [T; 3] {
        let k = &self.k;
        let v_n = (uv[1] * k[2][2] - k[1][2]) / k[1][1];
        let u_n = (uv[0] * k[2][2] - k[0][2] - k[0][1] * v_n) / k[0][0];
        let c = [u_n * depth, v_n * depth, depth];
        let r = self.rotation();
        let t = [self.e[0][3], self.e[1][3], self.e[2][3]];
        let d = [c[0] - t[0], c[1] - t[1], c[2] - t[2]];
        [
            r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2],
            r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2],
            r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2],
        ]
    }

    /// Composes a body-to-camera mount transform with a world-from-body pose matrix.
    pub fn with_world_from_body(&self, world_from_body: &[[T; 4]; 4]) -> Self {
        let inv = rigid_inverse(world_from_body);
        let mut e = [[T::zero(); 4]; 4];
        for (r, row) in e.iter_mut().enumerate() {
            for (c, out) in row.iter_mut().enumerate() {
                *out = (0..4).map(|m| self.e[r][m] * inv[m][c]).sum();
            }
        }
        Self { e, ..*self }
    }
}

pub fn project_point<T: Real>(p: [T; 3], cam: &CameraModel<T>) -> Option<[T; 2]> {
    cam.project(p)
}

/// Inverse of a rigid homogeneous transform.
pub fn rigid_inverse<T: Real>(m: &[[T; 4]; 4]) -> [[T; 4]; 4] {
    let mut inv = [[T::zero(); 4]; 4];
    for r in 0..3 {
        for c in 0..3 {
            inv[r][c] = m[c][r];
        }
        inv[r][3] = -(0..3).map(|c| m[c][r] * m[c][3]).sum::<T>();
    }
    inv[3][3] = T::one();
    inv
}

/// Dense per-pixel class map (row-major, row 0 at the top).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl LabelImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, SemanticsError> {
        assert_eq!(pixels.len(), width * height, "pixel buffer size");
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, &v)| v != UNLABELED && v as usize >= CLASS_COUNT)
        {
            return Err(SemanticsError::InvalidLabel { value, index });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, label: Option<SemanticClass>) -> Self {
        let v = label.map_or(UNLABELED, |c| c as u8);
        Self {
            width,
            height,
            pixels: vec![v; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, u: usize, v: usize) -> Option<SemanticClass> {
        SemanticClass::from_index(self.pixels[v * self.width + u])
    }

    pub fn set(&mut self, u: usize, v: usize, label: Option<SemanticClass>) {
        self.pixels[v * self.width + u] = label.map_or(UNLABELED, |c| c as u8);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledPoint<T: Real> {
    pub point: StampedPoint<T>,
    /// `None` for points outside the image.
    pub label: Option<SemanticClass>,
}

/// Looks up the class of every point in the label image.
pub fn label_cloud<T: Real>(
    points: &[StampedPoint<T>],
    image: &LabelImage,
    cam: &CameraModel<T>,
) -> Result<Vec<LabeledPoint<T>>, SemanticsError> {
    if image.width != cam.width || image.height != cam.height {
        return Err(SemanticsError::DimensionMismatch {
            image_w: image.width,
            image_h: image.height,
            cam_w: cam.width,
            cam_h: cam.height,
        });
    }
    Ok(points
        .iter()
        .map(|&point| {
            let label = cam.project(point.xyz).and_then(|[u, v]| {
                let (pu, pv) = (u.floor().to_usize()?, v.floor().to_usize()?);
                (pu < image.width && pv < image.height)
                    .then(|| image.get(pu, pv))
                    .flatten()
            });
            LabeledPoint { point, label }
        })
        .collect())
}

/// Adds every labeled point to its cell's histogram. Unlabeled and
/// out-of-bounds points are ignored. With `decay > 0`, each touched cell's
/// histogram is first scaled by `1 - decay` once per call.
pub fn accumulate_labels<T: Real>(
    map: &mut ElevationGridMap<T>,
    labeled: &[LabeledPoint<T>],
    decay: T,
) -> usize {
    let spec = *map.spec();
    let mut touched = HashSet::new();
    for lp in labeled {
        let Some(class) = lp.label else { continue };
        let Some(idx) = spec.world_to_index([lp.point.xyz[0], lp.point.xyz[1]]) else {
            continue;
        };
        let cell = map.cell_mut(idx);
        if touched.insert(spec.linear(idx)) && decay > T::zero() {
            cell.labels.scale(T::one() - decay);
        }
        cell.labels.add(class, T::one());
    }
    touched.len()
}

/// Index of the stamp closest to `target`, if within `tolerance`.
pub fn nearest_by_stamp<T: Real>(stamps: &[T], target: T, tolerance: T) -> Option<usize> {
    stamps
        .iter()
        .enumerate()
        .map(|(k, &s)| (k, (s - target).abs()))
        .filter(|&(_, d)| d <= tolerance)
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{CellIndex, GridSpec};

    fn identity_e() -> [[f64; 4]; 4] {
        let mut e = [[0.0; 4]; 4];
        for (k, row) in e.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        e
    }

    fn cam() -> CameraModel<f64> {
        CameraModel::new(
            [[500.0, 0.0, 320.0], [0.0, 500.0, 240.0], [0.0, 0.0, 1.0]],
            identity_e(),
            640,
            480,
        )
        .unwrap()
    }

    #[test]
    fn principal_point_on_axis() {
        assert_eq!(project_point([0.0, 0.0, 3.0], &cam()), Some([320.0, 240.0]));
    }

    #[test]
    fn behind_camera_not_visible() {
        assert_eq!(project_point([0.0, 0.0, -1.0], &cam()), None);
        assert_eq!(project_point([0.0, 0.0, 0.0], &cam()), None);
    }

    #[test]
    fn hand_computed_pixel() {
        assert_eq!(project_point([1.0, 0.0, 2.0], &cam()), Some([570.0, 240.0]));
        assert_eq!(project_point([10.0, 0.0, 2.0], &cam()), None);
    }

    #[test]
    fn invalid_cameras_rejected() {
        let mut k = cam().k;
        k[1][0] = 1.0;
        assert!(CameraModel::new(k, identity_e(), 640, 480).is_err());
        let mut e = identity_e();
        e[0][0] = -1.0;
        assert!(CameraModel::new(cam().k, e, 640, 480).is_err());
    }

    #[test]
    fn uniform_image_labels_everything() {
        let img = LabelImage::filled(640, 480, Some(SemanticClass::Flat));
        let pts: Vec<_> = (0..20)
            .map(|k| StampedPoint::new(0.0, 0.05 * k as f64 - 0.5, 0.1, 2.0))
            .collect();
        let out = label_cloud(&pts, &img, &cam()).unwrap();
        assert!(out.iter().all(|p| p.label == Some(SemanticClass::Flat)));
        assert!(label_cloud(&[], &img, &cam()).unwrap().is_empty());
    }

    #[test]
    fn points_behind_are_unlabeled() {
        let img = LabelImage::filled(640, 480, Some(SemanticClass::Bumpy));
        let pts: Vec<_> = (0..10)
            .map(|k| StampedPoint::new(0.0, 0.0, 0.0, if k % 2 == 0 { 2.0 } else { -2.0 }))
            .collect();
        let out = label_cloud(&pts, &img, &cam()).unwrap();
        for (p, lp) in pts.iter().zip(&out) {
            assert_eq!(lp.label.is_none(), p.xyz[2] < 0.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let img = LabelImage::filled(10, 10, None);
        assert!(matches!(
            label_cloud(&[], &img, &cam()),
            Err(SemanticsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_pixel_values_rejected() {
        assert!(LabelImage::new(2, 1, vec![7, 0]).is_err());
        assert!(LabelImage::new(2, 1, vec![255, 6]).is_ok());
    }

    #[test]
    fn histogram_accumulation() {
        let spec = GridSpec::new([0.0, 0.0], 4, 4, 0.2).unwrap();
        let mut map = ElevationGridMap::new(spec, 10).unwrap();
        let p = StampedPoint::new(0.0, 0.1, 0.1, 0.0);
        let batch: Vec<_> = [
            SemanticClass::Flat,
            SemanticClass::Flat,
            SemanticClass::Flat,
            SemanticClass::RockPile,
        ]
        .iter()
        .map(|&c| LabeledPoint {
            point: p,
            label: Some(c),
        })
        .collect();
        assert_eq!(accumulate_labels(&mut map, &batch, 0.0), 1);
        let h = map.cell(CellIndex::new(0, 0)).labels;
        assert_eq!(h.count(SemanticClass::Flat), 3.0);
        assert_eq!(h.count(SemanticClass::RockPile), 1.0);
        assert_eq!(h.total(), 4.0);

        accumulate_labels(&mut map, &batch, 0.0);
        let h2 = map.cell(CellIndex::new(0, 0)).labels;
        assert_eq!(h2.count(SemanticClass::Flat), 6.0);
        assert_eq!(h2.count(SemanticClass::RockPile), 2.0);

        let unlabeled = [LabeledPoint {
            point: p,
            label: None,
        }];
        assert_eq!(accumulate_labels(&mut map, &unlabeled, 0.0), 0);
        assert_eq!(map.cell(CellIndex::new(0, 0)).labels, h2);
    }

    #[test]
    fn decay_scales_before_adding() {
        let spec = GridSpec::new([0.0, 0.0], 2, 2, 0.2).unwrap();
        let mut map = ElevationGridMap::new(spec, 10).unwrap();
        let lp = LabeledPoint {
            point: StampedPoint::new(0.0, 0.1, 0.1, 0.0),
            label: Some(SemanticClass::Water),
        };
        accumulate_labels(&mut map, &[lp, lp], 0.5);
        accumulate_labels(&mut map, &[lp], 0.5);
        assert_eq!(
            map.cell(CellIndex::new(0, 0))
                .labels
                .count(SemanticClass::Water),
            2.0
        );
    }

    #[test]
    fn majority_examples() {
        let mut h = LabelHistogram::<f64>::default();
        assert_eq!(majority_label(&h), None);
        h.add(SemanticClass::Flat, 5.0);
        h.add(SemanticClass::Bumpy, 2.0);
        assert_eq!(majority_label(&h), Some(SemanticClass::Flat));

        let mut tie = LabelHistogram::<f64>::default();
        tie.add(SemanticClass::Water, 3.0);
        tie.add(SemanticClass::Flat, 3.0);
        assert_eq!(majority_label(&tie), Some(SemanticClass::Water));

        let mut tie2 = LabelHistogram::<f64>::default();
        tie2.add(SemanticClass::Excavator, 1.0);
        tie2.add(SemanticClass::Obstacle, 1.0);
        assert_eq!(majority_label(&tie2), Some(SemanticClass::Obstacle));
    }

    #[test]
    fn nearest_stamp_association() {
        let stamps = [0.0, 0.1, 0.2, 0.5];
        assert_eq!(nearest_by_stamp(&stamps, 0.12, 0.1), Some(1));
        assert_eq!(nearest_by_stamp(&stamps, 0.35, 0.1), None);
        assert_eq!(nearest_by_stamp::<f64>(&[], 0.0, 0.1), None);
    }
}
