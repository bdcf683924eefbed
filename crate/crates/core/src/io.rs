//! Grid dumps, time-series tables and contour rasters.
//!
//! A grid dump is a plain-text header followed by one row of values per grid
//! row (increasing `x2`), for each component in turn. Values are written with
//! 17 significant digits, so dump -> load -> dump reproduces the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::RunRecord;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid2D};

const DUMP_MAGIC: &str = "# nlcl grid dump v1";

#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub grid: Grid2D,
    pub components: Vec<String>,
    pub t: f64,
    pub field: Field,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_dump(dump: &GridDump) -> String {
    let g = &dump.grid;
    let mut s = String::with_capacity(g.len() * dump.components.len() * 24 + 256);
    let _ = writeln!(s, "{DUMP_MAGIC}");
    let _ = writeln!(s, "nx {}", g.nx);
    let _ = writeln!(s, "ny {}", g.ny);
    let _ = writeln!(s, "x {} {}", num(g.x_min), num(g.x_max));
    let _ = writeln!(s, "y {} {}", num(g.y_min), num(g.y_max));
    let _ = writeln!(s, "boundary {}", g.boundary.as_str());
    let _ = writeln!(s, "t {}", num(dump.t));
    let _ = writeln!(s, "components {}", dump.components.join(" "));
    let ff: Vec<String> = dump.field.far_field.iter().map(|&v| num(v)).collect();
    let _ = writeln!(s, "far_field {}", ff.join(" "));
    for (name, values) in dump.components.iter().zip(&dump.field.values) {
        let _ = writeln!(s, "component {name}");
        for row in values.chunks(g.nx) {
            let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    s
}

fn header<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Format(format!("expected `{key}`, found `{line}`")));
    }
    Ok(parts.collect())
}

fn float(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Format(format!("not a number: `{s}`")))
}

fn count(parts: &[&str], key: &str) -> Result<usize> {
    match parts {
        [v] => v
            .parse()
            .map_err(|_| Error::Format(format!("bad `{key}` value `{v}`"))),
        _ => Err(Error::Format(format!("`{key}` takes one value"))),
    }
}

fn pair(parts: &[&str], key: &str) -> Result<(f64, f64)> {
    match parts {
        [a, b] => Ok((float(a)?, float(b)?)),
        _ => Err(Error::Format(format!("`{key}` takes two values"))),
    }
}

pub fn parse_dump(text: &str) -> Result<GridDump> {
    let mut lines = text.lines();
    if lines.next() != Some(DUMP_MAGIC) {
        return Err(Error::Format("missing dump header".into()));
    }
    let nx = count(&header(&mut lines, "nx")?, "nx")?;
    let ny = count(&header(&mut lines, "ny")?, "ny")?;
    let (x_min, x_max) = pair(&header(&mut lines, "x")?, "x")?;
    let (y_min, y_max) = pair(&header(&mut lines, "y")?, "y")?;
    let boundary = match header(&mut lines, "boundary")?.as_slice() {
        ["far_field"] => Boundary::FarField,
        ["periodic"] => Boundary::Periodic,
        other => return Err(Error::Format(format!("unknown boundary {other:?}"))),
    };
    let t = match header(&mut lines, "t")?.as_slice() {
        [v] => float(v)?,
        _ => return Err(Error::Format("`t` takes one value".into())),
    };
    let components: Vec<String> = header(&mut lines, "components")?
        .into_iter()
        .map(String::from)
        .collect();
    let far_field = header(&mut lines, "far_field")?
        .into_iter()
        .map(float)
        .collect::<Result<Vec<_>>>()?;
    if far_field.len() != components.len() {
        return Err(Error::Format(
            "far_field and components differ in length".into(),
        ));
    }
    let grid = Grid2D::new(x_min, x_max, y_min, y_max, nx, ny)
        .map_err(|e| Error::Format(e.to_string()))?
        .with_boundary(boundary);
    let mut values = Vec::with_capacity(components.len());
    for name in &components {
        let found = header(&mut lines, "component")?;
        if found != [name.as_str()] {
            return Err(Error::Format(format!(
                "expected component `{name}`, found {found:?}"
            )));
        }
        let mut comp = Vec::with_capacity(grid.len());
        for j in 0..ny {
            let row = lines
                .next()
                .ok_or_else(|| Error::Format(format!("component `{name}` ends at row {j}")))?;
            let before = comp.len();
            for v in row.split_whitespace() {
                comp.push(float(v)?);
            }
            if comp.len() - before != nx {
                return Err(Error::Format(format!(
                    "component `{name}` row {j} has {} values, expected {nx}",
                    comp.len() - before
                )));
            }
        }
        values.push(comp);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(Error::Format(
            "trailing data after the last component".into(),
        ));
    }
    Ok(GridDump {
        grid,
        components,
        t,
        field: Field { values, far_field },
    })
}

pub fn write_dump(path: &Path, dump: &GridDump) -> Result<()> {
    fs::write(path, format_dump(dump)).map_err(|e| Error::io(path, e))
}

pub fn read_dump(path: &Path) -> Result<GridDump> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dump(&text)
}

/// Header row of the time-series table for `record`.
pub fn time_series_columns(record: &RunRecord) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "step".to_string()];
    for stat in ["mass", "l1", "linf", "tv"] {
        for c in &record.components {
            cols.push(format!("{stat}_{c}"));
        }
    }
    cols.extend(record.metric_names.iter().cloned());
    cols
}

/// One row per snapshot; floats use the shortest round-tripping form.
pub fn format_time_series(record: &RunRecord) -> String {
    let mut s = time_series_columns(record).join(",");
    s.push('\n');
    for snap in &record.snapshots {
        let st = &snap.stats;
        let mut row = vec![format!("{:e}", st.t), st.step.to_string()];
        for series in [&st.mass, &st.l1, &st.linf, &st.tv] {
            row.extend(series.iter().map(|v| format!("{v:e}")));
        }
        row.extend(st.metrics.iter().map(|v| format!("{v:e}")));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn write_time_series(path: &Path, record: &RunRecord) -> Result<()> {
    fs::write(path, format_time_series(record)).map_err(|e| Error::io(path, e))
}

/// Gray level of a cell value: 0 below `lo`, `lo..=hi` mapped linearly onto
/// `1..=255`, values above `hi` saturate.
pub fn gray_level(v: f64, lo: f64, hi: f64) -> u8 {
    if v.is_nan() || v < lo {
        return 0;
    }
    let s = ((v - lo) / (hi - lo)).min(1.0);
    1 + (s * 254.0).round() as u8
}

/// Binary graymap, top image row = largest `x2`.
pub fn encode_pgm(grid: &Grid2D, values: &[f64], clip: (f64, f64)) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    out.reserve(grid.len());
    for j in (0..grid.ny).rev() {
        out.extend(
            values[j * grid.nx..(j + 1) * grid.nx]
                .iter()
                .map(|&v| gray_level(v, clip.0, clip.1)),
        );
    }
    out
}

pub fn write_pgm(path: &Path, grid: &Grid2D, values: &[f64], clip: (f64, f64)) -> Result<()> {
    fs::write(path, encode_pgm(grid, values, clip)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample() -> GridDump {
        let grid = Grid2D::new(0.0, 2.0, -1.0, 1.0, 7, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut field = Field::zeros(&grid, vec![0.0, 4.5]);
        for comp in &mut field.values {
            for v in comp.iter_mut() {
                *v = rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-20..20));
            }
        }
        field.values[0][3] = 0.1 + 0.2;
        GridDump {
            grid,
            components: vec!["h_m".into(), "h_s".into()],
            t: 0.1 * 3.0,
            field,
        }
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let d = sample();
        let text = format_dump(&d);
        let back = parse_dump(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(format_dump(&back), text);
    }

    #[test]
    fn dump_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.dump");
        write_dump(&p, &sample()).unwrap();
        let first = fs::read(&p).unwrap();
        write_dump(&p, &read_dump(&p).unwrap()).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        assert!(matches!(
            read_dump(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn malformed_dumps_are_rejected() {
        let text = format_dump(&sample());
        assert!(parse_dump("").is_err());
        assert!(parse_dump(&text.replace("nx 7", "nx 8")).is_err());
        let truncated: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_dump(&truncated), Err(Error::Format(_))));
        assert!(parse_dump(&format!("{text}1.0\n")).is_err());
    }

    #[test]
    fn gray_levels() {
        assert_eq!(gray_level(-0.01, 0.0, 4.5), 0);
        assert_eq!(gray_level(0.0, 0.0, 4.5), 1);
        assert_eq!(gray_level(4.5, 0.0, 4.5), 255);
        assert_eq!(gray_level(9.0, 0.0, 4.5), 255);
        assert_eq!(gray_level(2.25, 0.0, 4.5), 128);
    }

    #[test]
    fn pgm_layout() {
        let g = Grid2D::new(0.0, 3.0, 0.0, 2.0, 3, 2).unwrap();
        let v = [-1.0, 0.0, 1.0, 2.0, 3.0, 4.5];
        let bytes = encode_pgm(&g, &v, (0.0, 4.5));
        let head = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..head.len()], head);
        let px = &bytes[head.len()..];
        assert_eq!(px.len(), 6);
        // top row is the upper grid row
        assert_eq!(
            px[..3],
            [gray_level(2.0, 0.0, 4.5), gray_level(3.0, 0.0, 4.5), 255]
        );
        assert_eq!(px[3..], [0, 1, gray_level(1.0, 0.0, 4.5)]);
    }
}
