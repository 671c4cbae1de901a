//! Multi-scenario benchmark comparing geometric-only and fused mapping.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use travmap::{MappingMode, Occupancy2D, PathPose, SemanticClass};

use crate::trial::{
    build_map, evaluate, footprint_hazard, survey, TrialConfig, TrialOutcome, TrialResult,
};
use crate::world::{generate_world, Feature, Scatter, ScenarioSpec};
use crate::SimError;

pub const MODES: [MappingMode; 2] = [MappingMode::GeometricOnly, MappingMode::Fused];

pub fn mode_label(mode: MappingMode) -> &'static str {
    match mode {
        MappingMode::GeometricOnly => "Geometric",
        MappingMode::Fused => "Fused",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    pub seed: u64,
    pub trials: usize,
    /// Start pose `[x, y, theta]` shared by every trial.
    pub start: [f64; 3],
    /// Goal positions are drawn uniformly from this box, heading `goal_theta`.
    pub goal_min: [f64; 2],
    pub goal_max: [f64; 2],
    pub goal_theta: f64,
    pub trial: TrialConfig,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            trials: 10,
            start: [4.0, 20.0, 0.0],
            goal_min: [30.0, 6.0],
            goal_max: [36.0, 26.0],
            goal_theta: 0.0,
            trial: TrialConfig::default(),
        }
    }
}

/// Benchmark options plus the scenarios to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub bench: BenchOptions,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
}

impl Default for Suite {
    fn default() -> Self {
        default_suite()
    }
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::InvalidSpec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("suite serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let b = &self.bench;
        if b.trials == 0 {
            return Err(SimError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(SimError::InvalidSpec("suite has no scenarios".into()));
        }
        if !(b.goal_min[0] <= b.goal_max[0] && b.goal_min[1] <= b.goal_max[1]) {
            return Err(SimError::InvalidSpec(
                "goal_min must not exceed goal_max".into(),
            ));
        }
        let mut ids: Vec<&str> = self.scenarios.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::InvalidSpec("scenario ids must be unique".into()));
        }
        b.trial.validate()?;
        for s in &self.scenarios {
            s.validate()?;
        }
        Ok(())
    }
}

fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOAL_ATTEMPTS: usize = 10_000;

/// Goals drawn from the goal box that are safe on ground truth for the
/// footprint grown by the planner margin.
fn sample_goals(
    world: &crate::World,
    opts: &BenchOptions,
    seed: u64,
) -> Result<Vec<PathPose<f64>>, SimError> {
    let cfg = &opts.trial.pipeline;
    let fp = cfg.footprint.inflated(cfg.planner.safety_margin);
    let s_cri = cfg.thresholds()?.s_cri;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut goals = Vec::with_capacity(opts.trials);
    for _ in 0..GOAL_ATTEMPTS {
        if goals.len() == opts.trials {
            break;
        }
        let x = rng.random_range(opts.goal_min[0]..=opts.goal_max[0]);
        let y = rng.random_range(opts.goal_min[1]..=opts.goal_max[1]);
        let goal = PathPose::new(x, y, opts.goal_theta);
        if footprint_hazard(world, &goal, fp.length, fp.width, s_cri).is_none() {
            goals.push(goal);
        }
    }
    if goals.len() < opts.trials {
        return Err(SimError::InvalidSpec(format!(
            "could not place {} safe goals",
            opts.trials
        )));
    }
    Ok(goals)
}

/// Results depend on the master seed and the scenario's own seed, not on its
/// position in the suite.
fn run_scenario(
    spec: &ScenarioSpec,
    opts: &BenchOptions,
) -> Result<(Vec<TrialOutcome>, [Occupancy2D; 2]), SimError> {
    let world = generate_world(spec)?;
    let pipeline = opts.trial.pipeline_for(&world)?;
    let base = mix(opts.seed, spec.seed);
    let frames = survey(&world, &opts.trial, mix(base, 1));
    let goals = sample_goals(&world, opts, mix(base, 2))?;
    let start = PathPose::new(opts.start[0], opts.start[1], opts.start[2]);
    let maps = [
        build_map(&frames, &pipeline, MODES[0])?,
        build_map(&frames, &pipeline, MODES[1])?,
    ];
    let jobs: Vec<(usize, usize)> = (0..goals.len())
        .flat_map(|t| (0..MODES.len()).map(move |m| (t, m)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(t, m)| {
            let (result, path, hazard) = evaluate(&world, &maps[m], start, goals[t], &pipeline)?;
            Ok(TrialOutcome {
                scenario: spec.id.clone(),
                trial: t,
                mode: MODES[m],
                goal: goals[t],
                result,
                path_length: path.as_ref().map(|p| p.total_length),
                hazard,
                expansions: path.as_ref().map_or(0, |p| p.expansions),
                path,
            })
        })
        .collect::<Result<_, SimError>>()?;
    let [a, b] = maps;
    Ok((outcomes, [a.occupancy, b.occupancy]))
}

/// Success counts for one row of the summary table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryRow {
    pub scenario: String,
    pub difficult_terrain: bool,
    pub obstacles: bool,
    pub trials: usize,
    /// Indexed like [`MODES`].
    pub successes: [usize; 2],
    pub collisions: [usize; 2],
    pub no_path: [usize; 2],
}

impl SummaryRow {
    pub fn rate(&self, mode: MappingMode) -> f64 {
        let m = MODES.iter().position(|&x| x == mode).unwrap();
        if self.trials == 0 {
            0.0
        } else {
            100.0 * self.successes[m] as f64 / self.trials as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub seed: u64,
    pub outcomes: Vec<TrialOutcome>,
    /// One row per scenario, then the overall row.
    pub summary: Vec<SummaryRow>,
    /// Ids of scenarios whose water cannot be bypassed without a detour.
    pub flat_water: Vec<String>,
    /// Occupancy grids planned on, per scenario, indexed like [`MODES`].
    pub occupancy: Vec<[Occupancy2D; 2]>,
}

pub fn benchmark(suite: &Suite) -> Result<BenchReport, SimError> {
    suite.validate()?;
    let opts = &suite.bench;
    let (per_scenario, occupancy): (Vec<Vec<TrialOutcome>>, Vec<[Occupancy2D; 2]>) = suite
        .scenarios
        .par_iter()
        .map(|s| run_scenario(s, opts))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();

    let mut summary = Vec::with_capacity(suite.scenarios.len() + 1);
    let mut overall = SummaryRow {
        scenario: "overall".into(),
        difficult_terrain: false,
        obstacles: false,
        trials: 0,
        successes: [0; 2],
        collisions: [0; 2],
        no_path: [0; 2],
    };
    for (spec, outcomes) in suite.scenarios.iter().zip(&per_scenario) {
        let mut row = SummaryRow {
            scenario: spec.id.clone(),
            difficult_terrain: spec.difficult_terrain,
            obstacles: spec.obstacles,
            trials: opts.trials,
            successes: [0; 2],
            collisions: [0; 2],
            no_path: [0; 2],
        };
        for o in outcomes {
            let m = MODES.iter().position(|&x| x == o.mode).unwrap();
            match o.result {
                TrialResult::Success => row.successes[m] += 1,
                TrialResult::CollisionOnReplay => row.collisions[m] += 1,
                TrialResult::NoPath => row.no_path[m] += 1,
            }
        }
        overall.trials += row.trials;
        for m in 0..2 {
            overall.successes[m] += row.successes[m];
            overall.collisions[m] += row.collisions[m];
            overall.no_path[m] += row.no_path[m];
        }
        summary.push(row);
    }
    summary.push(overall);
    Ok(BenchReport {
        seed: opts.seed,
        outcomes: per_scenario.into_iter().flatten().collect(),
        summary,
        flat_water: suite
            .scenarios
            .iter()
            .filter(|s| s.has_water_barrier())
            .map(|s| s.id.clone())
            .collect(),
        occupancy,
    })
}

impl BenchReport {
    pub fn overall(&self) -> &SummaryRow {
        self.summary.last().expect("summary has an overall row")
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::from(
            "scenario,trial,mode,goal_x,goal_y,goal_theta,result,path_length,hazard\n",
        );
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{},{},{},{:.3},{:.3},{:.3},{},{},{}",
                o.scenario,
                o.trial,
                mode_label(o.mode),
                o.goal.x,
                o.goal.y,
                o.goal.theta,
                o.result.name(),
                o.path_length.map_or(String::new(), |l| format!("{l:.3}")),
                o.hazard.map_or(String::new(), |h| h.to_string()),
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "scenario,difficult_terrain,obstacles,trials,geometric_success,fused_success,geometric_rate,fused_rate,geometric_collisions,fused_collisions\n",
        );
        for r in &self.summary {
            let flag = |b: bool, overall: bool| {
                if overall {
                    ""
                } else if b {
                    "yes"
                } else {
                    "no"
                }
            };
            let is_overall = std::ptr::eq(r, self.overall());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.1},{:.1},{},{}",
                r.scenario,
                flag(r.difficult_terrain, is_overall),
                flag(r.obstacles, is_overall),
                r.trials,
                r.successes[0],
                r.successes[1],
                r.rate(MappingMode::GeometricOnly),
                r.rate(MappingMode::Fused),
                r.collisions[0],
                r.collisions[1],
            );
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:^9} {:^9} {:>6} {:>10} {:>10}",
            "Scenario", "Terrain", "Obstacle", "Trials", "Geometric", "Fused"
        );
        let rule = "-".repeat(59);
        let _ = writeln!(out, "{rule}");
        let n = self.summary.len();
        for (k, r) in self.summary.iter().enumerate() {
            if k + 1 == n {
                let _ = writeln!(out, "{rule}");
            }
            let mark = |b: bool| {
                if k + 1 == n {
                    ""
                } else if b {
                    "x"
                } else {
                    ""
                }
            };
            let _ = writeln!(
                out,
                "{:<10} {:^9} {:^9} {:>6} {:>9.1}% {:>9.1}%",
                r.scenario,
                mark(r.difficult_terrain),
                mark(r.obstacles),
                r.trials,
                r.rate(MappingMode::GeometricOnly),
                r.rate(MappingMode::Fused),
            );
        }
        out
    }
}

fn block(min: [f64; 2], max: [f64; 2], height: f64, class: SemanticClass) -> Feature {
    Feature::Block {
        min,
        max,
        height,
        class,
    }
}

fn water_barrier(min: [f64; 2], max: [f64; 2]) -> Feature {
    Feature::Water { min, max }
}

fn bar(start: [f64; 2], end: [f64; 2]) -> Feature {
    Feature::Bar {
        start,
        end,
        width: 0.3,
        height: 0.08,
        class: SemanticClass::Obstacle,
    }
}

fn rock(radius: f64) -> Feature {
    Feature::RockPile {
        center: [0.0, 0.0],
        radius,
        height: 0.15,
    }
}

fn scenario(
    id: &str,
    seed: u64,
    terrain: bool,
    obstacles: bool,
    features: Vec<Feature>,
    scatter: Vec<Scatter>,
) -> ScenarioSpec {
    ScenarioSpec {
        id: id.into(),
        seed,
        extent: [40.0, 40.0],
        features,
        scatter,
        difficult_terrain: terrain,
        obstacles,
    }
}

/// Nine 40 m × 40 m sites: six with difficult terrain, seven with obstacles.
/// The area around the default start is kept clear.
pub fn default_suite() -> Suite {
    use SemanticClass::{Excavator, Obstacle};
    let scenarios = vec![
        scenario(
            "S1",
            11,
            true,
            true,
            vec![
                Feature::Bumpy {
                    min: [22.0, 26.0],
                    max: [34.0, 36.0],
                    amplitude: 0.03,
                    wavelength: 1.5,
                },
                block([26.0, 2.0], [29.0, 5.0], 1.2, Obstacle),
            ],
            vec![Scatter {
                feature: rock(1.8),
                count: 5,
                min: [14.0, 6.0],
                max: [26.0, 34.0],
            }],
        ),
        scenario(
            "S2",
            12,
            true,
            true,
            vec![
                water_barrier([16.0, 8.0], [24.0, 18.0]),
                block([17.0, 24.0], [22.0, 27.0], 3.0, Excavator),
                Feature::Mixed {
                    min: [10.0, 28.0],
                    max: [16.0, 36.0],
                },
            ],
            vec![],
        ),
        scenario(
            "S3",
            13,
            true,
            false,
            vec![water_barrier([17.0, 0.0], [21.0, 32.0])],
            vec![],
        ),
        scenario(
            "S4",
            14,
            true,
            true,
            vec![
                Feature::Pit {
                    center: [22.0, 14.0],
                    radius: 3.0,
                    depth: 1.5,
                },
                bar([14.0, 24.0], [14.0, 30.0]),
                bar([26.0, 20.0], [26.0, 26.0]),
                Feature::Mixed {
                    min: [28.0, 30.0],
                    max: [36.0, 38.0],
                },
            ],
            vec![],
        ),
        scenario(
            "S5",
            15,
            false,
            true,
            vec![
                block([14.0, 12.0], [17.0, 17.0], 1.0, Obstacle),
                block([20.0, 24.0], [25.0, 28.0], 3.0, Excavator),
                bar([24.0, 8.0], [24.0, 16.0]),
            ],
            vec![],
        ),
        scenario(
            "S6",
            16,
            true,
            true,
            vec![
                water_barrier([15.0, 8.0], [19.0, 40.0]),
                block([27.0, 30.0], [30.0, 33.0], 1.0, Obstacle),
                block([6.0, 30.0], [9.0, 34.0], 1.0, Obstacle),
            ],
            vec![],
        ),
        scenario(
            "S7",
            17,
            false,
            true,
            vec![
                block([12.0, 4.0], [14.0, 8.0], 1.0, Obstacle),
                block([28.0, 30.0], [31.0, 33.0], 1.5, Obstacle),
            ],
            vec![Scatter {
                feature: rock(1.5),
                count: 6,
                min: [12.0, 8.0],
                max: [28.0, 32.0],
            }],
        ),
        scenario(
            "S8",
            18,
            false,
            true,
            vec![],
            vec![Scatter {
                feature: bar([0.0, -1.5], [0.0, 1.5]),
                count: 6,
                min: [12.0, 6.0],
                max: [28.0, 34.0],
            }],
        ),
        scenario(
            "S9",
            19,
            true,
            false,
            vec![
                water_barrier([20.0, 0.0], [23.0, 31.0]),
                Feature::Hill {
                    center: [10.0, 34.0],
                    radius: 4.0,
                    height: 0.8,
                },
                Feature::Hill {
                    center: [30.0, 36.0],
                    radius: 3.0,
                    height: 0.6,
                },
            ],
            vec![],
        ),
    ];
    Suite {
        bench: BenchOptions::default(),
        scenarios,
    }
}
