//! Library side of the `travmap` command-line tool.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use travmap::io::{self, Gray8, Layer};
use travmap::semantics::nearest_by_stamp;
use travmap::{
    plan, Camera, Config, GridSpec, LabelImage, MappingMode, MappingPipeline, PathPose, PlanError,
    Point, Pose, StageTimings,
};
use travmap_sim::{benchmark, default_suite, generate_world, survey, Suite, World};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO_PATH: u8 = 2;
pub const EXIT_INVALID_INPUT: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INVALID_INPUT,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            error: error.into(),
        }
    }

    fn from_plan(e: PlanError) -> Self {
        match e {
            PlanError::NoPath | PlanError::GoalOccupied => Self {
                code: EXIT_NO_PATH,
                error: e.into(),
            },
            PlanError::InvalidStart | PlanError::InvalidInput(_) => Self::invalid(e),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

type CliResult<T> = Result<T, CliError>;

trait OrInvalid<T> {
    fn invalid(self) -> CliResult<T>;
    fn internal(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> OrInvalid<T> for Result<T, E> {
    fn invalid(self) -> CliResult<T> {
        self.map_err(CliError::invalid)
    }

    fn internal(self) -> CliResult<T> {
        self.map_err(CliError::internal)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "travmap",
    version,
    about = "Traversability mapping, planning and benchmarking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a traversability map from point clouds and label images.
    Map(MapArgs),
    /// Plan a path on an occupancy grid.
    Plan(PlanArgs),
    /// Run the scenario benchmark and print the success-rate table.
    Bench(BenchArgs),
    /// Generate a synthetic world and dump a sensor survey of it.
    Simulate(SimulateArgs),
    /// Render one layer of a map dump as PNG or PGM.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fused,
    GeometricOnly,
}

impl From<ModeArg> for MappingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fused => MappingMode::Fused,
            ModeArg::GeometricOnly => MappingMode::GeometricOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Pipeline configuration (TOML). Omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Point cloud files with `t x y z` lines in the world frame.
    #[arg(long = "cloud", required = true)]
    pub clouds: Vec<PathBuf>,
    /// Label image (binary PGM of class indices) taken at STAMP.
    #[arg(long = "label", value_name = "STAMP:PATH", value_parser = parse_label_arg)]
    pub labels: Vec<(f64, PathBuf)>,
    /// Camera calibration JSON; overrides `camera_calibration` in the config.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    /// Body poses (`t x y z qw qx qy qz`). When given, the calibration
    /// extrinsic is read as body-to-camera; otherwise as world-to-camera.
    #[arg(long)]
    pub poses: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fused")]
    pub mode: ModeArg,
    /// Output directory for the map dump, occupancy grid and PNG.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Occupancy PGM with its JSON sidecar next to it.
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, value_name = "X,Y,THETA", value_parser = parse_pose_arg, allow_hyphen_values = true)]
    pub start: PathPose<f64>,
    #[arg(long, value_name = "X,Y,THETA", value_parser = parse_pose_arg, allow_hyphen_values = true)]
    pub goal: PathPose<f64>,
    /// Path CSV destination; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario suite (TOML). The bundled nine-scenario suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Pipeline configuration replacing the suite's own.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Directory for `trials.csv`, `summary.csv` and `table.txt`.
    #[arg(long, default_value = "bench-results")]
    pub out: PathBuf,
    /// Print the suite as TOML and exit.
    #[arg(long)]
    pub print_suite: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Scenario id within the suite.
    #[arg(long, default_value = "S1")]
    pub scenario: String,
    /// Sensor noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Map dump directory written by `map`.
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long, default_value = "traversability")]
    pub layer: String,
    /// Output file; `.pgm` writes greyscale PGM, anything else PNG.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_label_arg(s: &str) -> Result<(f64, PathBuf), String> {
    let (stamp, path) = s
        .split_once(':')
        .ok_or_else(|| format!("expected STAMP:PATH, got `{s}`"))?;
    let stamp: f64 = stamp
        .trim()
        .parse()
        .map_err(|_| format!("bad stamp `{stamp}`"))?;
    if !stamp.is_finite() || path.is_empty() {
        return Err(format!("expected STAMP:PATH, got `{s}`"));
    }
    Ok((stamp, PathBuf::from(path)))
}

fn parse_pose_arg(s: &str) -> Result<PathPose<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{p}` in `{s}`"))
        })
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, theta] if v.iter().all(|c| c.is_finite()) => Ok(PathPose::new(x, y, theta)),
        _ => Err(format!("expected X,Y,THETA, got `{s}`")),
    }
}

/// Reads a pipeline configuration; every omitted field takes its default.
/// A relative calibration path is resolved against the config file's directory.
pub fn load_config(path: Option<&Path>) -> CliResult<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .invalid()?;
    let mut cfg: Config = toml::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .invalid()?;
    if let Some(cal) = &cfg.camera_calibration {
        if cal.is_relative() {
            cfg.camera_calibration = Some(path.parent().unwrap_or(Path::new(".")).join(cal));
        }
    }
    cfg.validate()
        .with_context(|| format!("validating {}", path.display()))
        .invalid()?;
    Ok(cfg)
}

/// Mean and worst per-stage times over the processed clouds.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingReport {
    pub frames: usize,
    pub projection: [Duration; 2],
    pub insertion: [Duration; 2],
    pub traversability: [Duration; 2],
}

impl TimingReport {
    pub fn from_frames(t: &[StageTimings]) -> Self {
        let stat = |f: fn(&StageTimings) -> Duration| {
            let sum: Duration = t.iter().map(f).sum();
            let mean = if t.is_empty() {
                Duration::ZERO
            } else {
                sum / t.len() as u32
            };
            [mean, t.iter().map(f).max().unwrap_or_default()]
        };
        Self {
            frames: t.len(),
            projection: stat(|s| s.projection),
            insertion: stat(|s| s.insertion),
            traversability: stat(|s| s.traversability),
        }
    }

    pub fn render(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let mut out = format!(
            "{:<26} {:>10} {:>10}\n",
            format!("stage ({} clouds)", self.frames),
            "mean ms",
            "max ms"
        );
        for (name, [mean, max]) in [
            ("segmentation-projection", self.projection),
            ("insertion", self.insertion),
            ("traversability", self.traversability),
        ] {
            let _ = writeln!(out, "{name:<26} {:>10.2} {:>10.2}", ms(mean), ms(max));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct MapSummary {
    pub populated_cells: usize,
    pub promoted_cells: usize,
    pub timings: TimingReport,
}

fn cloud_stamp(cloud: &[Point]) -> Option<f64> {
    cloud.iter().map(|p| p.stamp).reduce(f64::max)
}

pub fn cmd_map(args: &MapArgs) -> CliResult<MapSummary> {
    let cfg = load_config(args.config.as_deref())?;
    let mode: MappingMode = args.mode.into();
    let calibration = args
        .camera
        .clone()
        .or_else(|| cfg.camera_calibration.clone());
    if mode == MappingMode::Fused && !args.labels.is_empty() && calibration.is_none() {
        return Err(CliError::invalid(anyhow!(
            "label images need a camera calibration (--camera or camera_calibration)"
        )));
    }
    let camera: Option<Camera> = calibration
        .as_deref()
        .map(io::read_camera)
        .transpose()
        .invalid()?;
    let poses: Vec<Pose<f64>> = args
        .poses
        .as_deref()
        .map(io::read_poses)
        .transpose()
        .invalid()?
        .unwrap_or_default();
    let pose_stamps: Vec<f64> = poses.iter().map(|p| p.stamp).collect();
    let mut labels: Vec<(f64, LabelImage)> = Vec::with_capacity(args.labels.len());
    for (stamp, path) in &args.labels {
        labels.push((*stamp, io::read_label_image(path).invalid()?));
    }
    let label_stamps: Vec<f64> = labels.iter().map(|l| l.0).collect();

    let mut clouds = Vec::with_capacity(args.clouds.len());
    for path in &args.clouds {
        let cloud: Vec<Point> = io::read_point_cloud(path).invalid()?;
        match cloud_stamp(&cloud) {
            Some(stamp) => clouds.push((stamp, cloud)),
            None => eprintln!("warning: {}: no points, skipped", path.display()),
        }
    }
    // Stable sort keeps the given order for equal stamps.
    clouds.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut pipeline = MappingPipeline::new(cfg.clone(), mode).invalid()?;
    let mut timings = Vec::with_capacity(clouds.len());
    for (stamp, cloud) in &clouds {
        let view = match (
            &camera,
            nearest_by_stamp(&label_stamps, *stamp, cfg.label_time_tolerance),
        ) {
            (Some(cam), Some(k)) if args.poses.is_some() => {
                let label_stamp = label_stamps[k];
                let p = nearest_by_stamp(&pose_stamps, label_stamp, cfg.label_time_tolerance)
                    .ok_or_else(|| {
                        CliError::invalid(anyhow!(
                            "no pose within {} s of label stamp {label_stamp}",
                            cfg.label_time_tolerance
                        ))
                    })?;
                Some((
                    &labels[k].1,
                    cam.with_world_from_body(&poses[p].to_matrix()),
                ))
            }
            (Some(cam), Some(k)) => Some((&labels[k].1, *cam)),
            _ => None,
        };
        let report = pipeline
            .process_frame(cloud, view.as_ref().map(|(img, cam)| (*img, cam)), *stamp)
            .invalid()?;
        timings.push(report.timings);
    }
    let promoted_cells = pipeline.postprocess();

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .internal()?;
    io::write_map_dump(&args.out, pipeline.map()).internal()?;
    io::write_occupancy(&args.out.join("occupancy.pgm"), &pipeline.occupancy()).internal()?;
    let spec = *pipeline.map().spec();
    let values = io::layer_values(pipeline.map(), Layer::Traversability);
    render_layer(&spec, &values, Layer::Traversability)
        .save(args.out.join("traversability.png"))
        .context("writing traversability.png")
        .internal()?;
    let report = TimingReport::from_frames(&timings);
    fs::write(args.out.join("timings.txt"), report.render())
        .context("writing timings.txt")
        .internal()?;
    Ok(MapSummary {
        populated_cells: pipeline
            .map()
            .cells()
            .iter()
            .filter(|c| c.is_populated())
            .count(),
        promoted_cells,
        timings: report,
    })
}

/// Traversability fades from grey (0) to green (1); other layers are
/// stretched to greyscale. Absent cells are black. Top row is the highest y.
pub fn render_layer(spec: &GridSpec<f64>, values: &[Option<f64>], layer: Layer) -> image::RgbImage {
    let (lo, hi) = match layer {
        Layer::Traversability => (0.0, 1.0),
        _ => values
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            }),
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    image::RgbImage::from_fn(spec.width as u32, spec.height as u32, |x, y| {
        let j = spec.height - 1 - y as usize;
        let Some(v) = values[j * spec.width + x as usize] else {
            return image::Rgb([0, 0, 0]);
        };
        let t = ((v - lo) / span).clamp(0.0, 1.0);
        match layer {
            Layer::Traversability => {
                let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
                image::Rgb([lerp(128.0, 30.0), lerp(128.0, 180.0), lerp(128.0, 60.0)])
            }
            _ => {
                let g = (1.0 + 254.0 * t).round() as u8;
                image::Rgb([g, g, g])
            }
        }
    })
}

fn layer_to_gray(spec: &GridSpec<f64>, values: &[Option<f64>], layer: Layer) -> Gray8 {
    let rgb = render_layer(spec, values, layer);
    let pixels = match layer {
        Layer::Traversability => rgb
            .pixels()
            .zip(0..)
            .map(|(_, k)| {
                let (x, y) = (k % spec.width, k / spec.width);
                let j = spec.height - 1 - y;
                values[j * spec.width + x]
                    .map_or(0, |v| (1.0 + 254.0 * v.clamp(0.0, 1.0)).round() as u8)
            })
            .collect(),
        _ => rgb.pixels().map(|p| p.0[0]).collect(),
    };
    Gray8 {
        width: spec.width,
        height: spec.height,
        pixels,
    }
}

pub fn cmd_export(args: &ExportArgs) -> CliResult<()> {
    let layer = Layer::from_name(&args.layer).ok_or_else(|| {
        let names: Vec<&str> = Layer::ALL.iter().map(|l| l.name()).collect();
        CliError::invalid(anyhow!(
            "unknown layer `{}` (expected one of {})",
            args.layer,
            names.join(", ")
        ))
    })?;
    let (spec, values) = io::read_dump_layer::<f64>(&args.dump, layer).invalid()?;
    if args
        .out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
    {
        io::write_pgm(&args.out, &layer_to_gray(&spec, &values, layer)).internal()
    } else {
        render_layer(&spec, &values, layer)
            .save_with_format(&args.out, image::ImageFormat::Png)
            .with_context(|| format!("writing {}", args.out.display()))
            .internal()
    }
}

pub fn cmd_plan(args: &PlanArgs) -> CliResult<travmap::Path> {
    let cfg = load_config(args.config.as_deref())?;
    let grid = io::read_occupancy::<f64>(&args.map).invalid()?;
    let path = plan(&grid, args.start, args.goal, &cfg.footprint, &cfg.planner)
        .map_err(CliError::from_plan)?;
    let csv = io::path_to_csv(&path.samples);
    match &args.out {
        Some(out) => fs::write(out, csv)
            .with_context(|| format!("writing {}", out.display()))
            .internal()?,
        None => print!("{csv}"),
    }
    Ok(path)
}

fn load_suite(path: Option<&Path>) -> CliResult<Suite> {
    match path {
        None => Ok(default_suite()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .invalid()?;
            Suite::from_toml(&text)
                .with_context(|| format!("parsing {}", p.display()))
                .invalid()
        }
    }
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<travmap_sim::BenchReport> {
    let mut suite = load_suite(args.suite.as_deref())?;
    if let Some(seed) = args.seed {
        suite.bench.seed = seed;
    }
    if let Some(trials) = args.trials {
        suite.bench.trials = trials;
    }
    if args.config.is_some() {
        suite.bench.trial.pipeline = load_config(args.config.as_deref())?;
    }
    suite.validate().invalid()?;
    let report = benchmark(&suite).internal()?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .internal()?;
    for (name, text) in [
        ("trials.csv", report.trials_csv()),
        ("summary.csv", report.summary_csv()),
        ("table.txt", report.table()),
    ] {
        fs::write(args.out.join(name), text)
            .with_context(|| format!("writing {name}"))
            .internal()?;
    }
    Ok(report)
}

fn world_label_image(world: &World) -> Gray8 {
    let mut pixels = Vec::with_capacity(world.nx * world.ny);
    for j in (0..world.ny).rev() {
        pixels.extend((0..world.nx).map(|i| world.label(i, j) as u8));
    }
    Gray8 {
        width: world.nx,
        height: world.ny,
        pixels,
    }
}

fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|m| a[r][m] * b[m][c]).sum()))
}

/// Files written by `simulate`.
#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub clouds: Vec<PathBuf>,
    /// `(stamp, path)` of each label image.
    pub labels: Vec<(f64, PathBuf)>,
    pub camera: PathBuf,
    pub poses: PathBuf,
    pub config: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<SimulateOutput> {
    let suite = load_suite(args.suite.as_deref())?;
    let spec = suite
        .scenarios
        .iter()
        .find(|s| s.id == args.scenario)
        .ok_or_else(|| CliError::invalid(anyhow!("no scenario `{}` in suite", args.scenario)))?;
    let world = generate_world(spec).invalid()?;
    let trial = &suite.bench.trial;
    trial.validate().invalid()?;
    let frames = survey(&world, trial, args.seed);

    let out = &args.out;
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .internal()?;
    let mut result = SimulateOutput {
        clouds: vec![],
        labels: vec![],
        camera: out.join("camera.json"),
        poses: out.join("poses.txt"),
        config: out.join("config.toml"),
    };
    for (k, f) in frames.iter().enumerate() {
        let cloud = out.join(format!("cloud_{k:03}.txt"));
        io::write_point_cloud(&cloud, &f.cloud).internal()?;
        let label = out.join(format!("label_{k:03}.pgm"));
        io::write_label_image(&label, &f.labels).internal()?;
        result.clouds.push(cloud);
        result.labels.push((f.stamp, label));
    }
    let poses: Vec<Pose<f64>> = frames.iter().map(|f| f.pose).collect();
    io::write_poses(&result.poses, &poses).internal()?;
    // The mount is the same for every frame; store it as body-to-camera.
    if let Some(f) = frames.first() {
        let body_to_camera = Camera {
            e: mat_mul(&f.camera.e, &f.pose.to_matrix()),
            ..f.camera
        };
        io::write_camera(&result.camera, &body_to_camera).internal()?;
    }
    let mut pipeline = trial.pipeline_for(&world).invalid()?;
    pipeline.camera_calibration = Some(PathBuf::from("camera.json"));
    let toml = toml::to_string(&pipeline)
        .context("serializing config")
        .internal()?;
    fs::write(&result.config, toml)
        .context("writing config.toml")
        .internal()?;
    fs::write(
        out.join("scenario.toml"),
        toml::to_string(spec)
            .context("serializing scenario")
            .internal()?,
    )
    .context("writing scenario.toml")
    .internal()?;
    io::write_pgm(&out.join("truth_labels.pgm"), &world_label_image(&world)).internal()?;
    Ok(result)
}

/// Runs one parsed command, printing its human-readable report.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Map(a) => {
            let s = cmd_map(a)?;
            println!(
                "{} populated cells, {} cells promoted by cleanup",
                s.populated_cells, s.promoted_cells
            );
            print!("{}", s.timings.render());
        }
        Command::Plan(a) => {
            let p = cmd_plan(a)?;
            eprintln!(
                "path: {:.3} m, {} samples, {} expansions",
                p.total_length,
                p.samples.len(),
                p.expansions
            );
        }
        Command::Bench(a) => {
            if a.print_suite {
                print!("{}", load_suite(a.suite.as_deref())?.to_toml());
                return Ok(());
            }
            let r = cmd_bench(a)?;
            print!("{}", r.table());
            println!("results written to {}", a.out.display());
        }
        Command::Simulate(a) => {
            let o = cmd_simulate(a)?;
            println!("{} frames written to {}", o.clouds.len(), a.out.display());
        }
        Command::Export(a) => cmd_export(a)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_and_pose_arguments() {
        assert_eq!(
            parse_label_arg("1.5:a/b.pgm").unwrap(),
            (1.5, PathBuf::from("a/b.pgm"))
        );
        assert!(parse_label_arg("b.pgm").is_err());
        assert!(parse_label_arg("x:b.pgm").is_err());
        assert_eq!(
            parse_pose_arg("1,-2,0.5").unwrap(),
            PathPose::new(1.0, -2.0, 0.5)
        );
        assert!(parse_pose_arg("1,2").is_err());
        assert!(parse_pose_arg("1,2,nan").is_err());
    }

    #[test]
    fn plan_errors_map_to_exit_codes() {
        assert_eq!(CliError::from_plan(PlanError::NoPath).code, EXIT_NO_PATH);
        assert_eq!(
            CliError::from_plan(PlanError::GoalOccupied).code,
            EXIT_NO_PATH
        );
        assert_eq!(
            CliError::from_plan(PlanError::InvalidStart).code,
            EXIT_INVALID_INPUT
        );
    }

    #[test]
    fn traversability_colours() {
        let spec = GridSpec::new([0.0, 0.0], 3, 1, 0.2).unwrap();
        let img = render_layer(&spec, &[Some(0.0), Some(1.0), None], Layer::Traversability);
        assert_eq!(img.get_pixel(0, 0).0, [128, 128, 128]);
        assert_eq!(img.get_pixel(1, 0).0, [30, 180, 60]);
        assert_eq!(img.get_pixel(2, 0).0, [0, 0, 0]);
    }

    #[test]
    fn timing_means() {
        let ms = Duration::from_millis;
        let t = [
            StageTimings {
                projection: ms(2),
                insertion: ms(4),
                traversability: ms(6),
            },
            StageTimings {
                projection: ms(4),
                insertion: ms(4),
                traversability: ms(10),
            },
        ];
        let r = TimingReport::from_frames(&t);
        assert_eq!(r.projection, [ms(3), ms(4)]);
        assert_eq!(r.traversability, [ms(8), ms(10)]);
        assert_eq!(r.render().lines().count(), 4);
    }
}
