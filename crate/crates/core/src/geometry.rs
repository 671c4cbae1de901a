//! Per-cell surface normal, slope, step height, roughness and the geometric
//! traversability score derived from machine limits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{CellIndex, WindowedView};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("insufficient data to estimate cell geometry")]
    InsufficientData,
    #[error("invalid machine specification: {0}")]
    InvalidSpec(String),
}

/// Physical limits of the machine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct MachineSpec<T: Real> {
    pub max_climb_deg: T,
    pub safe_climb_deg: T,
    /// Width of a single track, meters.
    pub track_width: T,
    /// Distance between the two tracks, meters.
    pub track_separation: T,
    /// Critical slope is set this many degrees below `max_climb_deg`.
    pub critical_margin_deg: T,
}

impl<T: Real> Default for MachineSpec<T> {
    fn default() -> Self {
        Self {
            max_climb_deg: T::lit(35.0),
            safe_climb_deg: T::lit(10.0),
            track_width: T::lit(0.6),
            track_separation: T::lit(2.75),
            critical_margin_deg: T::lit(5.0),
        }
    }
}

impl<T: Real> MachineSpec<T> {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ninety = T::lit(90.0);
        if !(T::zero() < self.safe_climb_deg
            && self.safe_climb_deg < self.max_climb_deg
            && self.max_climb_deg < ninety)
        {
            return Err(GeometryError::InvalidSpec(format!(
                "need 0 < safe climb ({}) < max climb ({}) < 90",
                self.safe_climb_deg, self.max_climb_deg
            )));
        }
        if !(self.track_width > T::zero()) {
            return Err(GeometryError::InvalidSpec(
                "track width must be positive".into(),
            ));
        }
        if !(self.track_separation > self.track_width) {
            return Err(GeometryError::InvalidSpec(
                "track separation must exceed track width".into(),
            ));
        }
        if !(self.critical_margin_deg >= T::zero()) {
            return Err(GeometryError::InvalidSpec(
                "critical margin must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Safety and danger thresholds for slope (degrees) and step height (meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GeoThresholds<T: Real> {
    pub s_cri: T,
    pub s_safe: T,
    pub h_cri: T,
    pub h_safe: T,
    pub alpha_slope: T,
    pub alpha_step: T,
}

impl<T: Real> GeoThresholds<T> {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let all_positive = [
            self.s_cri,
            self.s_safe,
            self.h_cri,
            self.h_safe,
            self.alpha_slope,
            self.alpha_step,
        ]
        .iter()
        .all(|&v| v > T::zero());
        if !all_positive {
            return Err(GeometryError::InvalidSpec(
                "thresholds and weights must be positive".into(),
            ));
        }
        if !(self.s_safe < self.s_cri) || !(self.h_safe < self.h_cri) {
            return Err(GeometryError::InvalidSpec(format!(
                "safe thresholds must lie below critical ones (s {} < {}, h {} < {})",
                self.s_safe, self.s_cri, self.h_safe, self.h_cri
            )));
        }
        if (self.alpha_slope + self.alpha_step - T::one()).abs() > T::lit(1e-6) {
            return Err(GeometryError::InvalidSpec("weights must sum to 1".into()));
        }
        Ok(())
    }
}

/// Slope and step thresholds implied by the machine's climbing limits.
///
/// Step limits approximate the height gained over three cells at the
/// corresponding slope: `h = 3 tan(s) d_res`.
pub fn derive_thresholds<T: Real>(
    machine: &MachineSpec<T>,
    d_res: T,
) -> Result<GeoThresholds<T>, GeometryError> {
    machine.validate()?;
    if !(d_res > T::zero()) {
        return Err(GeometryError::InvalidSpec(
            "resolution must be positive".into(),
        ));
    }
    let s_cri = machine.max_climb_deg - machine.critical_margin_deg;
    let s_safe = machine.safe_climb_deg;
    if !(s_safe < s_cri) {
        return Err(GeometryError::InvalidSpec(format!(
            "safe slope {s_safe} is not below critical slope {s_cri}"
        )));
    }
    let three = T::lit(3.0);
    let th = GeoThresholds {
        s_cri,
        s_safe,
        h_cri: three * s_cri.to_radians().tan() * d_res,
        h_safe: three * s_safe.to_radians().tan() * d_res,
        alpha_slope: T::lit(0.5),
        alpha_step: T::lit(0.5),
    };
    th.validate()?;
    Ok(th)
}

/// Geometric traversability in `[0, 1]` from slope `s` (degrees) and step height `h` (meters).
pub fn geometric_traversability<T: Real>(s: T, h: T, th: &GeoThresholds<T>) -> T {
    if s > th.s_cri || h > th.h_cri {
        T::zero()
    } else if s < th.s_safe && h < th.h_safe {
        T::one()
    } else {
        (T::one() - (th.alpha_slope * s / th.s_cri + th.alpha_step * h / th.h_cri)).max(T::zero())
    }
}

/// Neighborhood half-widths (in cells) for the slope and step-height estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhoods {
    /// 1 means a 3x3 window.
    pub normal_radius: usize,
    /// 3 means a 7x7 window.
    pub step_radius: usize,
}

impl Default for Neighborhoods {
    fn default() -> Self {
        Self {
            normal_radius: 1,
            step_radius: 3,
        }
    }
}

impl Neighborhoods {
    /// Normal window spans one track width (nearest odd cell count, at least 3);
    /// the step window is `2 * normal + 1` cells wide.
    pub fn from_machine<T: Real>(machine: &MachineSpec<T>, d_res: T) -> Self {
        let ratio = (machine.track_width / d_res).as_f64();
        let window = nearest_odd(ratio).max(3);
        let step_window = 2 * window + 1;
        Self {
            normal_radius: window / 2,
            step_radius: step_window / 2,
        }
    }
}

fn nearest_odd(x: f64) -> usize {
    if !(x.is_finite() && x > 0.0) {
        return 1;
    }
    let n = x.round() as usize;
    if n % 2 == 1 {
        n
    } else if x >= n as f64 {
        n + 1
    } else {
        n.saturating_sub(1).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalEstimate<T: Real> {
    /// Unit normal with non-negative z.
    pub normal: [T; 3],
    /// Covariance eigenvalues, ascending.
    pub eigenvalues: [T; 3],
    pub neighbor_count: usize,
    pub centroid: [T; 3],
}

/// Ascending eigenvalues of a symmetric 3x3 matrix (trigonometric closed form).
pub fn symmetric_eigenvalues<T: Real>(a: &[[T; 3]; 3]) -> [T; 3] {
    let p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let q = (a[0][0] + a[1][1] + a[2][2]) / three;
    let d0 = a[0][0] - q;
    let d1 = a[1][1] - q;
    let d2 = a[2][2] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + two * p1;
    if p2 <= T::zero() {
        return [q, q, q];
    }
    let p = (p2 / T::lit(6.0)).sqrt();
    let b = [
        [d0 / p, a[0][1] / p, a[0][2] / p],
        [a[1][0] / p, d1 / p, a[1][2] / p],
        [a[2][0] / p, a[2][1] / p, d2 / p],
    ];
    let r = (det3(&b) / two).max(-T::one()).min(T::one());
    let phi = r.acos() / three;
    let largest = q + two * p * phi.cos();
    let smallest = q + two * p * (phi + two * T::PI() / three).cos();
    let middle = three * q - largest - smallest;
    let mut ev = [smallest, middle, largest];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm_sq<T: Real>(a: [T; 3]) -> T {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

/// Unit eigenvector for a simple eigenvalue `lambda` of the symmetric matrix `a`,
/// or `None` if `a - lambda I` has rank below 2.
pub fn symmetric_eigenvector<T: Real>(a: &[[T; 3]; 3], lambda: T) -> Option<[T; 3]> {
    let rows = [
        [a[0][0] - lambda, a[0][1], a[0][2]],
        [a[1][0], a[1][1] - lambda, a[1][2]],
        [a[2][0], a[2][1], a[2][2] - lambda],
    ];
    let candidates = [
        cross(rows[0], rows[1]),
        cross(rows[0], rows[2]),
        cross(rows[1], rows[2]),
    ];
    let (best, best_n) =
        candidates
            .iter()
            .map(|&c| (c, norm_sq(c)))
            .fold((candidates[0], T::zero()), |acc, c| {
                if c.1 > acc.1 {
                    c
                } else {
                    acc
                }
            });
    let scale = rows.iter().map(|&r| norm_sq(r)).fold(T::zero(), T::max);
    if !(best_n > T::epsilon() * T::epsilon() * scale * scale) || best_n <= T::min_positive_value()
    {
        return None;
    }
    let n = best_n.sqrt();
    Some([best[0] / n, best[1] / n, best[2] / n])
}

// Closed-form roots of a repeated eigenvalue are only accurate to about sqrt(eps).
fn tie_tolerance<T: Real>(largest: T) -> T {
    T::lit(1e-12).max(T::lit(16.0) * T::epsilon().sqrt() * largest.abs())
}

fn neighborhood_points<T: Real>(
    view: &WindowedView<'_, T>,
    idx: CellIndex,
    radius: usize,
) -> Vec<[T; 3]> {
    view.spec()
        .neighborhood(idx, radius)
        .filter_map(|n| view.point(n))
        .collect()
}

/// PCA fit over the neighborhood points: the normal is the eigenvector of the
/// covariance with the smallest eigenvalue, flipped to point up.
pub fn fit_normal<T: Real>(points: &[[T; 3]]) -> Result<NormalEstimate<T>, GeometryError> {
    let k = points.len();
    if k < 3 {
        return Err(GeometryError::InsufficientData);
    }
    let kt = T::from_usize_lossy(k);
    let mut centroid = [T::zero(); 3];
    for p in points {
        for a in 0..3 {
            centroid[a] += p[a];
        }
    }
    for c in &mut centroid {
        *c /= kt;
    }
    let mut cov = [[T::zero(); 3]; 3];
    for p in points {
        let d = [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]];
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += d[r] * d[c];
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= kt;
        }
    }
    let ev = symmetric_eigenvalues(&cov);
    if ev[1] - ev[0] < tie_tolerance(ev[2]) {
        return Err(GeometryError::InsufficientData);
    }
    let mut n = symmetric_eigenvector(&cov, ev[0]).ok_or(GeometryError::InsufficientData)?;
    if n[2] < T::zero() {
        n = [-n[0], -n[1], -n[2]];
    }
    Ok(NormalEstimate {
        normal: n,
        eigenvalues: ev,
        neighbor_count: k,
        centroid,
    })
}

/// Normal of the cell's neighborhood (half-width `radius` cells) in the view.
pub fn estimate_normal<T: Real>(
    view: &WindowedView<'_, T>,
    idx: CellIndex,
    radius: usize,
) -> Result<NormalEstimate<T>, GeometryError> {
    if view.get(idx).is_none() {
        return Err(GeometryError::InsufficientData);
    }
    fit_normal(&neighborhood_points(view, idx, radius))
}

/// Angle between the normal and +z, in degrees.
pub fn slope_of<T: Real>(normal: &[T; 3]) -> T {
    normal[2].max(T::zero()).min(T::one()).acos().to_degrees()
}

/// Largest absolute height difference between the cell and any present neighbor.
pub fn step_height<T: Real>(
    view: &WindowedView<'_, T>,
    idx: CellIndex,
    radius: usize,
) -> Result<T, GeometryError> {
    let center = view
        .get(idx)
        .and_then(|c| c.mean_height())
        .ok_or(GeometryError::InsufficientData)?;
    view.spec()
        .neighborhood(idx, radius)
        .filter(|&n| n != idx)
        .filter_map(|n| view.get(n).and_then(|c| c.mean_height()))
        .map(|z| (center - z).abs())
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.max(d))))
        .ok_or(GeometryError::InsufficientData)
}

/// Root-sum-of-squares distance of neighborhood points to their fitted plane.
pub fn roughness_from_fit<T: Real>(points: &[[T; 3]], fit: &NormalEstimate<T>) -> T {
    let n = fit.normal;
    let len = norm_sq(n).sqrt();
    points
        .iter()
        .map(|p| {
            let d = ((p[0] - fit.centroid[0]) * n[0]
                + (p[1] - fit.centroid[1]) * n[1]
                + (p[2] - fit.centroid[2]) * n[2])
                / len;
            d * d
        })
        .sum::<T>()
        .sqrt()
}

pub fn roughness<T: Real>(
    view: &WindowedView<'_, T>,
    idx: CellIndex,
    radius: usize,
) -> Result<T, GeometryError> {
    if view.get(idx).is_none() {
        return Err(GeometryError::InsufficientData);
    }
    let pts = neighborhood_points(view, idx, radius);
    let fit = fit_normal(&pts)?;
    Ok(roughness_from_fit(&pts, &fit))
}

/// Geometric layers of one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGeometry<T: Real> {
    pub slope: Option<T>,
    pub step_height: Option<T>,
    pub roughness: Option<T>,
}

impl<T: Real> CellGeometry<T> {
    /// `T_geo`, available only when both slope and step height are.
    pub fn traversability(&self, th: &GeoThresholds<T>) -> Option<T> {
        Some(geometric_traversability(self.slope?, self.step_height?, th))
    }
}

pub fn cell_geometry<T: Real>(
    view: &WindowedView<'_, T>,
    idx: CellIndex,
    hoods: &Neighborhoods,
) -> CellGeometry<T> {
    let pts = neighborhood_points(view, idx, hoods.normal_radius);
    let fit = if view.get(idx).is_some() {
        fit_normal(&pts).ok()
    } else {
        None
    };
    CellGeometry {
        slope: fit.as_ref().map(|f| slope_of(&f.normal)),
        step_height: step_height(view, idx, hoods.step_radius).ok(),
        roughness: fit.as_ref().map(|f| roughness_from_fit(&pts, f)),
    }
}
