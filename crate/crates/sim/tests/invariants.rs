use travmap::{GridSpec, MappingMode, PathPose, Pose, SemanticClass};
use travmap_sim::{
    benchmark, build_map, generate_world, replay, sense, survey, Feature, Hazard, Scatter,
    ScenarioSpec, SensorConfig, Suite, TrialConfig, TrialResult,
};

fn spec(
    id: &str,
    seed: u64,
    extent: [f64; 2],
    features: Vec<Feature>,
    scatter: Vec<Scatter>,
) -> ScenarioSpec {
    ScenarioSpec {
        id: id.into(),
        seed,
        extent,
        features,
        scatter,
        difficult_terrain: false,
        obstacles: false,
    }
}

#[test]
fn noiseless_ramp_slope_survives_mapping() {
    for slope in [10.0, 20.0, 30.0] {
        let world = generate_world(&spec(
            "ramp",
            0,
            [40.0, 20.0],
            vec![Feature::Ramp {
                start: [14.0, 10.0],
                heading_deg: 0.0,
                slope_deg: slope,
                run: 5.0,
                top: 2.0,
                width: 8.0,
            }],
            vec![],
        ))
        .unwrap();
        let sensor = SensorConfig {
            noise_sigma: 0.0,
            points_per_frame: 40_000,
            ..Default::default()
        };
        let frames: Vec<_> = [8.0, 10.0, 12.0]
            .iter()
            .enumerate()
            .map(|(k, &y)| {
                sense(
                    &world,
                    &Pose::from_yaw([2.0, y, 4.0], 0.0, 0.01 * k as f64),
                    &sensor,
                    k as u64,
                )
            })
            .collect();
        let mut cfg = TrialConfig::default().pipeline;
        cfg.grid = GridSpec::covering([0.0, 0.0], 40.0, 20.0, 0.2).unwrap();
        let mapped = build_map(&frames, &cfg, MappingMode::GeometricOnly).unwrap();

        // Cells whose neighbourhood lies well inside the sloped face.
        let mut errors = vec![];
        for idx in mapped.map.indices() {
            let c = mapped.map.spec().cell_center(idx);
            if (14.6..=18.4).contains(&c[0]) && (7.0..=13.0).contains(&c[1]) {
                if let Some(s) = mapped.map.cell(idx).slope {
                    errors.push((s - slope).abs());
                }
            }
        }
        assert!(errors.len() > 300, "only {} cells observed", errors.len());
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        assert!(mean <= 1.5, "slope {slope}: mean error {mean}");
    }
}

#[test]
fn fused_paths_never_cross_ground_truth_hazards() {
    let mut trial = TrialConfig::default();
    trial.sensor.noise_sigma = 0.0;
    let mut returned = 0;
    for seed in [1, 2, 3] {
        let world = generate_world(&spec(
            "hazards",
            seed,
            [30.0, 30.0],
            vec![Feature::Water {
                min: [12.0, 0.0],
                max: [15.0, 18.0],
            }],
            vec![
                Scatter {
                    feature: Feature::RockPile {
                        center: [0.0, 0.0],
                        radius: 1.2,
                        height: 0.15,
                    },
                    count: 3,
                    min: [8.0, 4.0],
                    max: [24.0, 26.0],
                },
                Scatter {
                    feature: Feature::Bar {
                        start: [0.0, -1.5],
                        end: [0.0, 1.5],
                        width: 0.3,
                        height: 0.08,
                        class: SemanticClass::Obstacle,
                    },
                    count: 3,
                    min: [8.0, 4.0],
                    max: [24.0, 26.0],
                },
            ],
        ))
        .unwrap();
        let cfg = trial.pipeline_for(&world).unwrap();
        let frames = survey(&world, &trial, seed);
        let mapped = build_map(&frames, &cfg, MappingMode::Fused).unwrap();
        let start = PathPose::new(3.5, 15.0, 0.0);
        for goal in [[26.0, 5.0], [26.0, 15.0], [26.0, 25.0]] {
            let goal = PathPose::new(goal[0], goal[1], 0.0);
            let (result, path, _) =
                travmap_sim::evaluate(&world, &mapped, start, goal, &cfg).unwrap();
            if let Some(path) = path {
                returned += 1;
                let hazard = replay(&world, &path, &cfg.footprint, 30.0);
                assert!(
                    !matches!(hazard, Some(Hazard::Terrain(_))),
                    "seed {seed}: path to {goal:?} crosses {hazard:?}"
                );
            } else {
                assert_eq!(result, TrialResult::NoPath);
            }
        }
    }
    assert!(returned >= 3, "only {returned} paths returned");
}

#[test]
fn reordering_the_suite_does_not_change_results() {
    let mut suite = Suite::default();
    suite
        .scenarios
        .retain(|s| ["S3", "S8"].contains(&s.id.as_str()));
    suite.bench.trials = 2;
    let a = benchmark(&suite).unwrap();
    suite.scenarios.reverse();
    let b = benchmark(&suite).unwrap();
    let sorted = |csv: String| {
        let mut lines: Vec<String> = csv.lines().map(str::to_owned).collect();
        lines.sort();
        lines
    };
    assert_eq!(sorted(a.trials_csv()), sorted(b.trials_csv()));
}
