//! Plain-text and PGM file formats.
//!
//! * point clouds: one `t x y z` per line, `#` comments and blank lines skipped
//! * label images and occupancy grids: binary PGM (P5)
//! * camera calibration: JSON with row-major `K` (9), `E` (16), `W`, `H`
//! * map dump: one CSV per layer plus `grid.json`
//! * paths: CSV `x,y,theta`
//! * poses: one `t x y z qw qx qy qz` per line

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gridmap::{Cell, ElevationGridMap, GridSpec, Pose, StampedPoint};
use crate::planner::PathPose;
use crate::postprocess::{Occupancy, OccupancyGrid};
use crate::scalar::Real;
use crate::semantics::{CameraModel, LabelImage};
use crate::{CellIndex, Error};

pub const PGM_FREE: u8 = 254;
pub const PGM_OCCUPIED: u8 = 0;
pub const PGM_UNKNOWN: u8 = 205;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Whitespace-separated numeric rows with exactly `n` fields; line numbers are 1-based.
fn numeric_rows<T: Real>(path: &Path, text: &str, n: usize) -> Result<Vec<(usize, Vec<T>)>, Error> {
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != n {
            return Err(parse_err(
                path,
                k + 1,
                format!("expected {n} fields, found {}", fields.len()),
            ));
        }
        let mut vals = Vec::with_capacity(n);
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(path, k + 1, format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, k + 1, format!("non-finite value: {f:?}")));
            }
            vals.push(T::lit(v));
        }
        rows.push((k + 1, vals));
    }
    Ok(rows)
}

pub fn parse_point_cloud<T: Real>(path: &Path, text: &str) -> Result<Vec<StampedPoint<T>>, Error> {
    Ok(numeric_rows::<T>(path, text, 4)?
        .into_iter()
        .map(|(_, v)| StampedPoint::new(v[0], v[1], v[2], v[3]))
        .collect())
}

pub fn read_point_cloud<T: Real>(path: &Path) -> Result<Vec<StampedPoint<T>>, Error> {
    parse_point_cloud(path, &read_text(path)?)
}

pub fn write_point_cloud<T: Real>(path: &Path, points: &[StampedPoint<T>]) -> Result<(), Error> {
    let mut s = String::with_capacity(points.len() * 40);
    for p in points {
        let [x, y, z] = p.xyz;
        s.push_str(&format!("{} {} {} {}\n", p.stamp, x, y, z));
    }
    write_bytes(path, s.as_bytes())
}

pub fn parse_poses<T: Real>(path: &Path, text: &str) -> Result<Vec<Pose<T>>, Error> {
    numeric_rows::<T>(path, text, 8)?
        .into_iter()
        .map(|(line, v)| {
            Pose::new([v[1], v[2], v[3]], [v[4], v[5], v[6], v[7]], v[0])
                .map_err(|e| parse_err(path, line, e.to_string()))
        })
        .collect()
}

pub fn read_poses<T: Real>(path: &Path) -> Result<Vec<Pose<T>>, Error> {
    parse_poses(path, &read_text(path)?)
}

pub fn write_poses<T: Real>(path: &Path, poses: &[Pose<T>]) -> Result<(), Error> {
    let mut s = String::new();
    for p in poses {
        let [x, y, z] = p.position;
        let [w, qx, qy, qz] = p.orientation;
        s.push_str(&format!("{} {x} {y} {z} {w} {qx} {qy} {qz}\n", p.stamp));
    }
    write_bytes(path, s.as_bytes())
}

/// Raw 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gray8 {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

pub fn encode_pgm(img: &Gray8) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<Gray8, Error> {
    let bad = |m: &str| parse_err(path, 1, m.to_string());
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("bad PGM header"))?);
    }
    if tokens[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM header value"));
    let (width, height, maxval) = (num(tokens[1])?, num(tokens[2])?, num(tokens[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit PGM (maxval 255) is supported"));
    }
    pos += 1;
    let n = width * height;
    if bytes.len() < pos + n {
        return Err(bad("PGM pixel data truncated"));
    }
    Ok(Gray8 {
        width,
        height,
        pixels: bytes[pos..pos + n].to_vec(),
    })
}

pub fn read_pgm(path: &Path) -> Result<Gray8, Error> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_pgm(path, &bytes)
}

pub fn write_pgm(path: &Path, img: &Gray8) -> Result<(), Error> {
    write_bytes(path, &encode_pgm(img))
}

pub fn read_label_image(path: &Path) -> Result<LabelImage, Error> {
    let g = read_pgm(path)?;
    LabelImage::new(g.width, g.height, g.pixels).map_err(|e| parse_err(path, 1, e.to_string()))
}

pub fn write_label_image(path: &Path, img: &LabelImage) -> Result<(), Error> {
    write_pgm(
        path,
        &Gray8 {
            width: img.width(),
            height: img.height(),
            pixels: img.pixels().to_vec(),
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CameraFile {
    #[serde(rename = "K")]
    k: Vec<f64>,
    #[serde(rename = "E")]
    e: Vec<f64>,
    #[serde(rename = "W", alias = "width")]
    w: usize,
    #[serde(rename = "H", alias = "height")]
    h: usize,
}

pub fn parse_camera<T: Real>(path: &Path, text: &str) -> Result<CameraModel<T>, Error> {
    let f: CameraFile =
        serde_json::from_str(text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    if f.k.len() != 9 || f.e.len() != 16 {
        return Err(parse_err(path, 1, "K needs 9 values and E needs 16"));
    }
    let k = std::array::from_fn(|r| std::array::from_fn(|c| T::lit(f.k[3 * r + c])));
    let e = std::array::from_fn(|r| std::array::from_fn(|c| T::lit(f.e[4 * r + c])));
    CameraModel::new(k, e, f.w, f.h).map_err(|e| parse_err(path, 1, e.to_string()))
}

pub fn read_camera<T: Real>(path: &Path) -> Result<CameraModel<T>, Error> {
    parse_camera(path, &read_text(path)?)
}

pub fn camera_to_json<T: Real>(cam: &CameraModel<T>) -> String {
    let f = CameraFile {
        k: cam.k.iter().flatten().map(|v| v.as_f64()).collect(),
        e: cam.e.iter().flatten().map(|v| v.as_f64()).collect(),
        w: cam.width,
        h: cam.height,
    };
    serde_json::to_string_pretty(&f).expect("camera serializes")
}

pub fn write_camera<T: Real>(path: &Path, cam: &CameraModel<T>) -> Result<(), Error> {
    write_bytes(path, camera_to_json(cam).as_bytes())
}

/// Sidecar describing where an occupancy raster sits in the world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeta {
    pub resolution: f64,
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub free: u8,
    pub occupied: u8,
    pub unknown: u8,
}

/// Raster with the first image row at the highest `j` (north up).
pub fn occupancy_to_pgm<T: Real>(grid: &OccupancyGrid<T>) -> Gray8 {
    let spec = grid.spec();
    let mut pixels = Vec::with_capacity(spec.len());
    for j in (0..spec.height).rev() {
        for i in 0..spec.width {
            pixels.push(match grid.get(CellIndex::new(i, j)) {
                Occupancy::Free => PGM_FREE,
                Occupancy::Occupied => PGM_OCCUPIED,
                Occupancy::Unknown => PGM_UNKNOWN,
            });
        }
    }
    Gray8 {
        width: spec.width,
        height: spec.height,
        pixels,
    }
}

fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("json")
}

/// Writes `<path>` (PGM) and `<path minus extension>.json`.
pub fn write_occupancy<T: Real>(path: &Path, grid: &OccupancyGrid<T>) -> Result<(), Error> {
    let spec = grid.spec();
    write_pgm(path, &occupancy_to_pgm(grid))?;
    let meta = OccupancyMeta {
        resolution: spec.resolution.as_f64(),
        origin: [spec.origin[0].as_f64(), spec.origin[1].as_f64()],
        width: spec.width,
        height: spec.height,
        free: PGM_FREE,
        occupied: PGM_OCCUPIED,
        unknown: PGM_UNKNOWN,
    };
    let side = sidecar_path(path);
    write_bytes(
        &side,
        serde_json::to_string_pretty(&meta)
            .expect("meta serializes")
            .as_bytes(),
    )
}

/// Reads an occupancy PGM and its sidecar. Pixels equal to 255 count as free,
/// any other value besides the unknown code that is at least 128 is free, the
/// rest occupied.
pub fn read_occupancy<T: Real>(path: &Path) -> Result<OccupancyGrid<T>, Error> {
    let img = read_pgm(path)?;
    let side = sidecar_path(path);
    let meta: OccupancyMeta = serde_json::from_str(&read_text(&side)?)
        .map_err(|e| parse_err(&side, e.line(), e.to_string()))?;
    if meta.width != img.width || meta.height != img.height {
        return Err(parse_err(&side, 1, "sidecar size does not match image"));
    }
    let spec = GridSpec::new(
        [T::lit(meta.origin[0]), T::lit(meta.origin[1])],
        img.width,
        img.height,
        T::lit(meta.resolution),
    )?;
    let mut grid = OccupancyGrid::filled(spec, Occupancy::Unknown);
    for (row, line) in img.pixels.chunks(img.width.max(1)).enumerate() {
        let j = img.height - 1 - row;
        for (i, &v) in line.iter().enumerate() {
            let state = if v == meta.unknown {
                Occupancy::Unknown
            } else if v == meta.free || v >= 128 {
                Occupancy::Free
            } else {
                Occupancy::Occupied
            };
            grid.set(CellIndex::new(i, j), state);
        }
    }
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Height,
    Slope,
    Step,
    Roughness,
    Traversability,
    Label,
}

impl Layer {
    pub const ALL: [Layer; 6] = [
        Layer::Height,
        Layer::Slope,
        Layer::Step,
        Layer::Roughness,
        Layer::Traversability,
        Layer::Label,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Height => "height",
            Layer::Slope => "slope",
            Layer::Step => "step",
            Layer::Roughness => "roughness",
            Layer::Traversability => "traversability",
            Layer::Label => "label",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == s)
    }

    /// Cell value for this layer; the label layer is the majority class index.
    pub fn value<T: Real>(self, cell: &Cell<T>) -> Option<T> {
        match self {
            Layer::Height => cell.mean_height(),
            Layer::Slope => cell.slope,
            Layer::Step => cell.step_height,
            Layer::Roughness => cell.roughness,
            Layer::Traversability => cell.traversability,
            Layer::Label => cell
                .labels
                .majority()
                .map(|c| T::from_usize_lossy(c.index())),
        }
    }
}

/// Dense layer values in `j`-major order (`k = j * width + i`).
pub fn layer_values<T: Real>(map: &ElevationGridMap<T>, layer: Layer) -> Vec<Option<T>> {
    map.cells().iter().map(|c| layer.value(c)).collect()
}

/// CSV text: row `r` holds cells with `j = r`, column `c` holds `i = c`; absent
/// values are empty fields.
pub fn layer_to_csv<T: Real>(spec: &GridSpec<T>, values: &[Option<T>]) -> String {
    let mut s = String::with_capacity(values.len() * 8);
    for row in values.chunks(spec.width.max(1)) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            if let Some(v) = v {
                s.push_str(&v.to_string());
            }
        }
        s.push('\n');
    }
    s
}

pub fn parse_layer_csv<T: Real>(
    path: &Path,
    text: &str,
    spec: &GridSpec<T>,
) -> Result<Vec<Option<T>>, Error> {
    let mut out = Vec::with_capacity(spec.len());
    let mut rows = 0;
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != spec.width {
            return Err(parse_err(
                path,
                k + 1,
                format!("expected {} columns, found {}", spec.width, fields.len()),
            ));
        }
        for f in fields {
            let f = f.trim();
            if f.is_empty() {
                out.push(None);
            } else {
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_err(path, k + 1, format!("not a number: {f:?}")))?;
                out.push(Some(T::lit(v)));
            }
        }
    }
    if rows != spec.height {
        return Err(parse_err(
            path,
            rows.max(1),
            format!("expected {} rows, found {rows}", spec.height),
        ));
    }
    Ok(out)
}

/// Writes `grid.json` and one `<layer>.csv` per layer into `dir`.
pub fn write_map_dump<T: Real>(dir: &Path, map: &ElevationGridMap<T>) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let spec = map.spec();
    write_bytes(
        &dir.join("grid.json"),
        serde_json::to_string_pretty(spec)
            .expect("grid serializes")
            .as_bytes(),
    )?;
    for layer in Layer::ALL {
        let csv = layer_to_csv(spec, &layer_values(map, layer));
        write_bytes(&dir.join(format!("{}.csv", layer.name())), csv.as_bytes())?;
    }
    Ok(())
}

pub fn read_grid_spec<T: Real>(path: &Path) -> Result<GridSpec<T>, Error> {
    let spec: GridSpec<T> = serde_json::from_str(&read_text(path)?)
        .map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// Reads one layer from a map dump directory.
pub fn read_dump_layer<T: Real>(
    dir: &Path,
    layer: Layer,
) -> Result<(GridSpec<T>, Vec<Option<T>>), Error> {
    let spec = read_grid_spec(&dir.join("grid.json"))?;
    let path = dir.join(format!("{}.csv", layer.name()));
    let values = parse_layer_csv(&path, &read_text(&path)?, &spec)?;
    Ok((spec, values))
}

pub fn path_to_csv<T: Real>(poses: &[PathPose<T>]) -> String {
    let mut s = String::from("x,y,theta\n");
    for p in poses {
        s.push_str(&format!("{},{},{}\n", p.x, p.y, p.theta));
    }
    s
}

pub fn write_path<T: Real>(path: &Path, poses: &[PathPose<T>]) -> Result<(), Error> {
    write_bytes(path, path_to_csv(poses).as_bytes())
}

pub fn parse_path_csv<T: Real>(path: &Path, text: &str) -> Result<Vec<PathPose<T>>, Error> {
    let body: String = text
        .lines()
        .map(|l| {
            if l.trim_start()
                .starts_with(|c: char| c.is_ascii_alphabetic())
            {
                ""
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(numeric_rows::<T>(path, &body, 3)?
        .into_iter()
        .map(|(_, v)| PathPose::new(v[0], v[1], v[2]))
        .collect())
}

/// Appends `text` to a writer, mapping failures to [`Error::Io`].
pub fn write_all(path: &Path, w: &mut impl Write, text: &str) -> Result<(), Error> {
    w.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::SemanticClass;

    fn tmp(name: &str) -> PathBuf {
        let dir = tempfile::tempdir().unwrap().keep();
        dir.join(name)
    }

    #[test]
    fn point_cloud_round_trip_and_errors() {
        let p = Path::new("cloud.txt");
        let pts: Vec<StampedPoint<f64>> =
            parse_point_cloud(p, "# t x y z\n0.1 1 2 3\n\n0.2 4 5 6.5\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].xyz, [4.0, 5.0, 6.5]);
        let err = parse_point_cloud::<f64>(p, "0 1 2 3\n0 1 x 3\n").unwrap_err();
        assert!(err.to_string().contains("cloud.txt:2"), "{err}");
        let err = parse_point_cloud::<f64>(p, "0 1 2\n").unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");

        let f = tmp("c.txt");
        write_point_cloud(&f, &pts).unwrap();
        assert_eq!(read_point_cloud::<f64>(&f).unwrap(), pts);
    }

    #[test]
    fn pgm_round_trip() {
        let img = Gray8 {
            width: 3,
            height: 2,
            pixels: vec![0, 1, 2, 255, 205, 254],
        };
        let bytes = encode_pgm(&img);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(decode_pgm(Path::new("x"), &bytes).unwrap(), img);
        let commented = b"P5\n# made by hand\n3 2\n255\n\x00\x01\x02\xff\xcd\xfe";
        assert_eq!(decode_pgm(Path::new("x"), commented).unwrap(), img);
        assert!(decode_pgm(Path::new("x"), b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(Path::new("x"), b"P5\n4 4\n255\n\x00").is_err());
    }

    #[test]
    fn label_image_rejects_unknown_class() {
        let f = tmp("bad.pgm");
        write_pgm(
            &f,
            &Gray8 {
                width: 2,
                height: 1,
                pixels: vec![3, 9],
            },
        )
        .unwrap();
        assert!(read_label_image(&f).is_err());
        let f = tmp("good.pgm");
        write_pgm(
            &f,
            &Gray8 {
                width: 2,
                height: 1,
                pixels: vec![3, 255],
            },
        )
        .unwrap();
        let img = read_label_image(&f).unwrap();
        assert_eq!(img.get(0, 0), Some(SemanticClass::Water));
        assert_eq!(img.get(1, 0), None);
    }

    #[test]
    fn occupancy_codes_and_orientation() {
        let spec = GridSpec::new([-1.0, 2.0], 3, 2, 0.5).unwrap();
        let mut g = OccupancyGrid::<f64>::filled(spec, Occupancy::Free);
        g.set(CellIndex::new(0, 1), Occupancy::Occupied);
        g.set(CellIndex::new(2, 0), Occupancy::Unknown);
        let img = occupancy_to_pgm(&g);
        assert_eq!(img.pixels, vec![0, 254, 254, 254, 254, 205]);
        let f = tmp("occ.pgm");
        write_occupancy(&f, &g).unwrap();
        let meta: OccupancyMeta =
            serde_json::from_str(&fs::read_to_string(f.with_extension("json")).unwrap()).unwrap();
        assert_eq!((meta.resolution, meta.origin), (0.5, [-1.0, 2.0]));
        assert_eq!(read_occupancy::<f64>(&f).unwrap(), g);
    }

    #[test]
    fn camera_json() {
        let text = r#"{"K":[500,0,320,0,500,240,0,0,1],"E":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1],"W":640,"H":480}"#;
        let cam: CameraModel<f64> = parse_camera(Path::new("cam.json"), text).unwrap();
        assert_eq!(cam.k[1][2], 240.0);
        assert_eq!(cam.width, 640);
        let again: CameraModel<f64> =
            parse_camera(Path::new("cam.json"), &camera_to_json(&cam)).unwrap();
        assert_eq!(again, cam);
        assert!(parse_camera::<f64>(Path::new("c"), r#"{"K":[1],"E":[],"W":1,"H":1}"#).is_err());
    }

    #[test]
    fn map_dump_round_trip() {
        let spec = GridSpec::new([0.0, 0.0], 4, 3, 0.2).unwrap();
        let mut map = ElevationGridMap::<f64>::new(spec, 10).unwrap();
        map.insert_points(&[StampedPoint::new(0.0, 0.1, 0.3, 1.25)]);
        map.cell_mut(CellIndex::new(0, 1)).traversability = Some(0.5);
        let dir = tmp("dump");
        write_map_dump(&dir, &map).unwrap();
        let (s, h) = read_dump_layer::<f64>(&dir, Layer::Height).unwrap();
        assert_eq!(s, spec);
        assert_eq!(h.iter().flatten().count(), 1);
        assert_eq!(h[spec.linear(CellIndex::new(0, 1))], Some(1.25));
        let (_, t) = read_dump_layer::<f64>(&dir, Layer::Traversability).unwrap();
        assert_eq!(t[4], Some(0.5));
    }

    #[test]
    fn poses_and_paths() {
        let p = Path::new("poses.txt");
        let poses: Vec<Pose<f64>> = parse_poses(p, "0 1 2 3 1 0 0 0\n").unwrap();
        assert_eq!(poses[0].position, [1.0, 2.0, 3.0]);
        assert!(parse_poses::<f64>(p, "0 1 2 3 2 0 0 0\n").is_err());
        let path = vec![PathPose::new(0.0, 0.0, 0.0), PathPose::new(1.5, -2.0, 0.25)];
        assert_eq!(parse_path_csv::<f64>(p, &path_to_csv(&path)).unwrap(), path);
    }
}
