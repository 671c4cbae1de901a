use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use travmap::io::{self, Layer};
use travmap::postprocess::Occupancy;
use travmap::{CellIndex, Config, GridSpec, OccupancyGrid, UnknownPolicy};
use travmap_cli::{load_config, EXIT_INVALID_INPUT, EXIT_NO_PATH};

fn travmap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_travmap"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_defaults() {
    let cfg = Config::default();
    let th = cfg.thresholds().unwrap();
    assert_eq!(cfg.grid.resolution, 0.2);
    assert_eq!(cfg.t_occ, 0.6);
    assert_eq!(cfg.machine.track_separation, 2.75);
    assert!((th.s_cri - 30.0).abs() < 1e-12);
    assert!((th.s_safe - 10.0).abs() < 1e-12);
    assert_eq!((th.alpha_slope, th.alpha_step), (0.5, 0.5));
    assert!((th.h_cri - 0.35).abs() < 0.01);
    assert_eq!(cfg.heights_per_cell, 10);
    assert_eq!(cfg.window_secs, 2.0);
}

#[test]
fn config_file_fills_defaults_and_rejects_typos() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    assert_eq!(load_config(Some(&empty)).unwrap(), Config::default());

    let partial = dir.path().join("partial.toml");
    fs::write(
        &partial,
        "t_occ = 0.5\ncamera_calibration = \"cam.json\"\n[machine]\ntrack_separation = 3.0\n",
    )
    .unwrap();
    let cfg = load_config(Some(&partial)).unwrap();
    assert_eq!(cfg.t_occ, 0.5);
    assert_eq!(cfg.machine.track_separation, 3.0);
    assert_eq!(cfg.machine.max_climb_deg, 35.0);
    assert_eq!(cfg.camera_calibration, Some(dir.path().join("cam.json")));

    let typo = dir.path().join("typo.toml");
    fs::write(&typo, "t_ocq = 0.5\n").unwrap();
    assert_eq!(
        load_config(Some(&typo)).unwrap_err().code,
        EXIT_INVALID_INPUT
    );
}

#[test]
fn map_from_one_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let mut cloud = String::from("# t x y z\n");
    for k in 0..200 {
        cloud += &format!(
            "0.5 {} {} 0.0\n",
            1.0 + 0.05 * (k % 20) as f64,
            1.0 + 0.05 * (k / 20) as f64
        );
    }
    fs::write(dir.path().join("c.txt"), cloud).unwrap();
    let o = travmap(&["map", "--cloud", "c.txt", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("segmentation-projection") && stdout.contains("traversability"));
    let (spec, heights) =
        io::read_dump_layer::<f64>(&dir.path().join("out"), Layer::Height).unwrap();
    assert_eq!(spec, Config::default().grid);
    assert!(heights.iter().flatten().count() >= 1);
    for f in [
        "grid.json",
        "occupancy.pgm",
        "occupancy.json",
        "traversability.png",
        "timings.txt",
    ] {
        assert!(dir.path().join("out").join(f).exists(), "{f} missing");
    }
}

#[test]
fn malformed_point_line_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "0 1 1 0\n0 1 oops 0\n").unwrap();
    let o = travmap(&["map", "--cloud", "bad.txt", "--out", "out"], dir.path());
    assert_eq!(code(&o), i32::from(EXIT_INVALID_INPUT));
    assert!(stderr(&o).contains("bad.txt:2"), "{}", stderr(&o));
}

#[test]
fn fused_map_needs_calibration_for_labels() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), "0 1 1 0\n").unwrap();
    let o = travmap(
        &[
            "map", "--cloud", "c.txt", "--label", "0:l.pgm", "--out", "out",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), i32::from(EXIT_INVALID_INPUT));
}

const SMALL_SUITE: &str = r#"
[bench]
trials = 2
seed = 5
start = [4.0, 12.0, 0.0]
goal_min = [22.0, 8.0]
goal_max = [24.0, 16.0]

[bench.trial.survey]
lattice = [2, 2]
headings = 4

[bench.trial.sensor]
points_per_frame = 8000

[[scenario]]
id = "pond"
seed = 3
extent = [30.0, 24.0]

[[scenario.features]]
kind = "water"
min = [13.0, 0.0]
max = [16.0, 15.0]
"#;

#[test]
fn simulate_then_map_marks_water() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("suite.toml"), SMALL_SUITE).unwrap();
    let o = travmap(
        &[
            "simulate",
            "--suite",
            "suite.toml",
            "--scenario",
            "pond",
            "--out",
            "sim",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let sim = dir.path().join("sim");
    let stamps: Vec<f64> = io::read_poses::<f64>(&sim.join("poses.txt"))
        .unwrap()
        .iter()
        .map(|p| p.stamp)
        .collect();
    assert_eq!(stamps.len(), 16);
    let mut args: Vec<String> = [
        "map",
        "--config",
        "sim/config.toml",
        "--poses",
        "sim/poses.txt",
        "--out",
        "map",
    ]
    .map(String::from)
    .to_vec();
    for (k, s) in stamps.iter().enumerate() {
        args.extend(["--cloud".into(), format!("sim/cloud_{k:03}.txt")]);
        args.extend(["--label".into(), format!("{s}:sim/label_{k:03}.pgm")]);
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = travmap(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Frames facing off the edge of the world see nothing and are skipped.
    let non_empty = (0..16)
        .filter(|k| {
            fs::metadata(sim.join(format!("cloud_{k:03}.txt")))
                .unwrap()
                .len()
                > 0
        })
        .count();
    assert!(non_empty >= 8);
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(
        report.contains(&format!("({non_empty} clouds)")),
        "{report}"
    );
    for stage in ["segmentation-projection", "insertion", "traversability"] {
        assert!(
            report.lines().any(|l| l.starts_with(stage)),
            "{stage} missing from\n{report}"
        );
    }

    let grid = io::read_occupancy::<f64>(&dir.path().join("map/occupancy.pgm")).unwrap();
    let at = |x: f64, y: f64| grid.get(grid.spec().world_to_index([x, y]).unwrap());
    assert_eq!(at(14.5, 8.0), Occupancy::Occupied);
    assert_eq!(at(8.0, 12.0), Occupancy::Free);
    assert_eq!(at(20.0, 20.0), Occupancy::Free);

    let (_, labels) = io::read_dump_layer::<f64>(&dir.path().join("map"), Layer::Label).unwrap();
    assert!(labels
        .iter()
        .flatten()
        .any(|&c| c == travmap::SemanticClass::Water as u8 as f64));

    for out in ["trav.png", "slope.pgm"] {
        let layer = if out == "trav.png" {
            "traversability"
        } else {
            "slope"
        };
        let o = travmap(
            &["export", "--dump", "map", "--layer", layer, "--out", out],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let pgm = io::read_pgm(&dir.path().join("slope.pgm")).unwrap();
    assert_eq!((pgm.width, pgm.height), (150, 120));
    let o = travmap(
        &[
            "export", "--dump", "map", "--layer", "colour", "--out", "x.png",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), i32::from(EXIT_INVALID_INPUT));
}

fn write_grid(dir: &Path, blocked: impl Fn(usize, usize) -> bool) {
    let spec = GridSpec::new([0.0, 0.0], 150, 100, 0.2).unwrap();
    let mut g = OccupancyGrid::filled(spec, Occupancy::Free);
    for j in 0..100 {
        for i in 0..150 {
            if blocked(i, j) {
                g.set(CellIndex::new(i, j), Occupancy::Occupied);
            }
        }
    }
    io::write_occupancy(&dir.join("occ.pgm"), &g).unwrap();
}

#[test]
fn plan_on_empty_map_is_straight() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path(), |_, _| false);
    let o = travmap(
        &[
            "plan", "--map", "occ.pgm", "--start", "4,10,0", "--goal", "24,10,0", "--out", "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let path = io::parse_path_csv::<f64>(Path::new("p.csv"), &text).unwrap();
    assert!(path
        .iter()
        .all(|p| (p.y - 10.0).abs() < 1e-6 && p.theta.abs() < 1e-6));
    let last = path.last().unwrap();
    assert!((last.x - 24.0).abs() < 1e-9);

    // Path CSV goes to stdout without --out.
    let o = travmap(
        &[
            "plan", "--map", "occ.pgm", "--start", "4,10,0", "--goal", "24,10,0",
        ],
        dir.path(),
    );
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("x,y,theta"));
}

#[test]
fn plan_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_grid(dir.path(), |i, j| {
        (90..110).contains(&i) && (40..60).contains(&j)
    });
    let goal_blocked = travmap(
        &[
            "plan", "--map", "occ.pgm", "--start", "4,10,0", "--goal", "20,10,0",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&goal_blocked),
        i32::from(EXIT_NO_PATH),
        "{}",
        stderr(&goal_blocked)
    );
    let start_blocked = travmap(
        &[
            "plan", "--map", "occ.pgm", "--start", "20,10,0", "--goal", "4,10,0",
        ],
        dir.path(),
    );
    assert_eq!(
        code(&start_blocked),
        i32::from(EXIT_INVALID_INPUT),
        "{}",
        stderr(&start_blocked)
    );
    let missing = travmap(
        &[
            "plan", "--map", "nope.pgm", "--start", "4,10,0", "--goal", "8,10,0",
        ],
        dir.path(),
    );
    assert_eq!(code(&missing), i32::from(EXIT_INVALID_INPUT));
    let bad_pose = travmap(
        &[
            "plan", "--map", "occ.pgm", "--start", "4,10", "--goal", "8,10,0",
        ],
        dir.path(),
    );
    assert_eq!(code(&bad_pose), i32::from(EXIT_INVALID_INPUT));
}

#[test]
fn bench_with_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("suite.toml"), SMALL_SUITE).unwrap();
    let o = travmap(
        &["bench", "--suite", "suite.toml", "--out", "res"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("Geometric") && table.contains("Fused") && table.contains("overall"));
    let trials = fs::read_to_string(dir.path().join("res/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 2);
    assert!(trials
        .lines()
        .skip(1)
        .filter(|l| l.contains(",Geometric,"))
        .all(|l| l.contains("collision-on-replay")));
    assert_eq!(
        fs::read_to_string(dir.path().join("res/summary.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );

    let o = travmap(
        &[
            "bench",
            "--suite",
            "suite.toml",
            "--trials",
            "0",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), i32::from(EXIT_INVALID_INPUT));
}

#[test]
fn bench_config_override_and_suite_printing() {
    let dir = tempfile::tempdir().unwrap();
    let o = travmap(&["bench", "--print-suite"], dir.path());
    assert_eq!(code(&o), 0);
    let printed = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(
        travmap_sim::Suite::from_toml(&printed).unwrap(),
        travmap_sim::default_suite()
    );
    assert_eq!(printed.matches("[[scenario]]").count(), 9);

    let mut cfg = Config::default();
    cfg.unknown_policy = UnknownPolicy::Free;
    cfg.grid.resolution = -1.0;
    fs::write(dir.path().join("bad.toml"), toml::to_string(&cfg).unwrap()).unwrap();
    let o = travmap(&["bench", "--config", "bad.toml"], dir.path());
    assert_eq!(code(&o), i32::from(EXIT_INVALID_INPUT));
}

#[test]
fn usage_errors_are_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&travmap(&["frobnicate"], dir.path())),
        i32::from(EXIT_INVALID_INPUT)
    );
    assert_eq!(code(&travmap(&["--help"], dir.path())), 0);
}
