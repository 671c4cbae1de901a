//! Semantic-geometric fusion into the final traversability layer.

use serde::{Deserialize, Serialize};

use crate::geometry::{cell_geometry, GeoThresholds, Neighborhoods};
use crate::gridmap::ElevationGridMap;
use crate::scalar::Real;
use crate::semantics::SemanticClass;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreSource {
    SemanticForbidden,
    SemanticFlat,
    Geometric,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraversabilityScore<T: Real> {
    pub value: Option<T>,
    pub source: ScoreSource,
}

/// Final score from a cell's majority class and its geometric score.
///
/// Forbidden classes give 0 regardless of geometry, flat ground gives 1 unless
/// geometry rules it out, everything else passes `t_geo` through.
pub fn fuse<T: Real>(class: Option<SemanticClass>, t_geo: Option<T>) -> TraversabilityScore<T> {
    match (class, t_geo) {
        (Some(c), _) if c.is_forbidden() => TraversabilityScore {
            value: Some(T::zero()),
            source: ScoreSource::SemanticForbidden,
        },
        (Some(SemanticClass::Flat), None) => TraversabilityScore {
            value: Some(T::one()),
            source: ScoreSource::SemanticFlat,
        },
        (Some(SemanticClass::Flat), Some(t)) if t > T::zero() => TraversabilityScore {
            value: Some(T::one()),
            source: ScoreSource::SemanticFlat,
        },
        (_, Some(t)) => TraversabilityScore {
            value: Some(t),
            source: ScoreSource::Geometric,
        },
        (_, None) => TraversabilityScore {
            value: None,
            source: ScoreSource::Unknown,
        },
    }
}

/// Settings for a traversability layer refresh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerSettings<T: Real> {
    pub thresholds: GeoThresholds<T>,
    pub neighborhoods: Neighborhoods,
    /// When false the semantic histograms are ignored (geometric-only baseline).
    pub use_semantics: bool,
}

/// Recomputes geometry and the fused score of every cell inside the time
/// window. Cells outside the window keep their previous layers. Returns the
/// number of cells written.
pub fn update_traversability_layer<T: Real>(
    map: &mut ElevationGridMap<T>,
    settings: &LayerSettings<T>,
    now: T,
    window: T,
) -> usize {
    let updates: Vec<_> = {
        let view = map.windowed_view(now, window);
        view.present_indices()
            .map(|idx| {
                let geo = cell_geometry(&view, idx, &settings.neighborhoods);
                let class = if settings.use_semantics {
                    map.cell(idx).labels.majority()
                } else {
                    None
                };
                let score = fuse(class, geo.traversability(&settings.thresholds));
                (idx, geo, score.value)
            })
            .collect()
    };
    let n = updates.len();
    for (idx, geo, value) in updates {
        let cell = map.cell_mut(idx);
        cell.slope = geo.slope;
        cell.step_height = geo.step_height;
        cell.roughness = geo.roughness;
        cell.traversability = value;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{derive_thresholds, MachineSpec};
    use crate::gridmap::{CellIndex, GridSpec, StampedPoint};
    use crate::semantics::{accumulate_labels, LabeledPoint};

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse(Some(SemanticClass::Water), Some(1.0)).value, Some(0.0));
        assert_eq!(fuse(Some(SemanticClass::Flat), Some(0.4)).value, Some(1.0));
        let f0 = fuse(Some(SemanticClass::Flat), Some(0.0));
        assert_eq!(f0.value, Some(0.0));
        assert_eq!(f0.source, ScoreSource::Geometric);
        assert_eq!(
            fuse(Some(SemanticClass::Bumpy), Some(0.38)).value,
            Some(0.38)
        );
        assert_eq!(
            fuse::<f64>(None, None),
            TraversabilityScore {
                value: None,
                source: ScoreSource::Unknown
            }
        );
        assert_eq!(
            fuse::<f64>(Some(SemanticClass::Flat), None).value,
            Some(1.0)
        );
        assert_eq!(fuse::<f64>(Some(SemanticClass::Bumpy), None).value, None);
        assert_eq!(
            fuse::<f64>(Some(SemanticClass::Obstacle), None).value,
            Some(0.0)
        );
    }

    #[test]
    fn forbidden_dominates() {
        for c in SemanticClass::ALL.into_iter().filter(|c| c.is_forbidden()) {
            for t in [0.0, 0.5, 1.0] {
                assert_eq!(
                    fuse(Some(c), Some(t)),
                    TraversabilityScore {
                        value: Some(0.0),
                        source: ScoreSource::SemanticForbidden
                    }
                );
            }
        }
    }

    #[test]
    fn flat_never_downgrades() {
        for k in 0..=100 {
            let t = k as f64 / 100.0;
            assert!(fuse(Some(SemanticClass::Flat), Some(t)).value >= fuse(None, Some(t)).value);
        }
    }

    fn plane_map(
        label: impl Fn(usize, usize) -> Option<SemanticClass>,
        slope_deg: f64,
    ) -> ElevationGridMap<f64> {
        let spec = GridSpec::new([0.0, 0.0], 20, 20, 0.2).unwrap();
        let mut map = ElevationGridMap::new(spec, 10).unwrap();
        let t = slope_deg.to_radians().tan();
        let mut labeled = vec![];
        for idx in map.indices().collect::<Vec<_>>() {
            let c = spec.cell_center(idx);
            let p = StampedPoint::new(1.0, c[0], c[1], t * c[0]);
            labeled.push(LabeledPoint {
                point: p,
                label: label(idx.i, idx.j),
            });
        }
        let pts: Vec<_> = labeled.iter().map(|l| l.point).collect();
        map.insert_points(&pts);
        accumulate_labels(&mut map, &labeled, 0.0);
        map
    }

    fn settings() -> LayerSettings<f64> {
        let m = MachineSpec::default();
        LayerSettings {
            thresholds: derive_thresholds(&m, 0.2).unwrap(),
            neighborhoods: Neighborhoods::from_machine(&m, 0.2),
            use_semantics: true,
        }
    }

    #[test]
    fn flat_labeled_plane_is_fully_traversable() {
        let mut map = plane_map(|_, _| Some(SemanticClass::Flat), 0.0);
        assert_eq!(
            update_traversability_layer(&mut map, &settings(), 1.0, 2.0),
            400
        );
        assert!(map.cells().iter().all(|c| c.traversability == Some(1.0)));
    }

    #[test]
    fn water_patch_is_forbidden() {
        let water = |i: usize, j: usize| (8..12).contains(&i) && (8..12).contains(&j);
        let mut map = plane_map(
            |i, j| {
                Some(if water(i, j) {
                    SemanticClass::Water
                } else {
                    SemanticClass::Flat
                })
            },
            0.0,
        );
        update_traversability_layer(&mut map, &settings(), 1.0, 2.0);
        for idx in map.indices() {
            let want = if water(idx.i, idx.j) { 0.0 } else { 1.0 };
            assert_eq!(map.cell(idx).traversability, Some(want));
        }
    }

    #[test]
    fn unlabeled_ramp_uses_geometry() {
        let mut map = plane_map(|_, _| None, 20.0);
        let s = settings();
        update_traversability_layer(&mut map, &s, 1.0, 2.0);
        let c = map.cell(CellIndex::new(10, 10));
        let slope = c.slope.unwrap();
        let step = c.step_height.unwrap();
        assert!((slope - 20.0).abs() < 1e-6);
        assert!((step - 0.6 * 20f64.to_radians().tan()).abs() < 1e-9);
        let th = s.thresholds;
        let want = (1.0 - (0.5 * slope / th.s_cri + 0.5 * step / th.h_cri)).max(0.0);
        assert!((c.traversability.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn update_is_idempotent() {
        let mut map = plane_map(|i, _| (i % 3 == 0).then_some(SemanticClass::Bumpy), 12.0);
        let s = settings();
        update_traversability_layer(&mut map, &s, 1.0, 2.0);
        let before = map.cells().to_vec();
        update_traversability_layer(&mut map, &s, 1.0, 2.0);
        assert_eq!(before, map.cells());
    }

    #[test]
    fn geometric_only_ignores_labels() {
        let mut map = plane_map(|_, _| Some(SemanticClass::Water), 0.0);
        let s = LayerSettings {
            use_semantics: false,
            ..settings()
        };
        update_traversability_layer(&mut map, &s, 1.0, 2.0);
        assert_eq!(map.cell(CellIndex::new(5, 5)).traversability, Some(1.0));
    }

    #[test]
    fn stale_cells_untouched() {
        let mut map = plane_map(|_, _| Some(SemanticClass::Flat), 0.0);
        assert_eq!(
            update_traversability_layer(&mut map, &settings(), 10.0, 2.0),
            0
        );
        assert!(map.cells().iter().all(|c| c.traversability.is_none()));
    }
}
