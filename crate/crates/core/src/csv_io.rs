//! Plain-text CSV persistence (RFC 4180 flavored: comma separated, `.`
//! decimal separator, UTF-8, one record per line).
//!
//! Column orders are fixed and documented per type:
//! * `DiscreteMeasure`: `x0,...,x{d-1},weight`, one row per support point.
//! * `GridDensity`: `x0,...,x{d-1},value`, one row per grid node (cell
//!   center), plus `# origin=...; cell_width=...; shape=...` metadata on the
//!   first line so the grid geometry round-trips exactly.
//! * Particle snapshots: `t,particle,x0,...,x{d-1}`.
//!
//! Floats are written with Rust's shortest round-trip formatting.

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::measure::DiscreteMeasure;
use crate::particle::TrajectoryStore;
use std::fmt::Write as _;

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::CsvParse {
        line,
        message: format!("bad float {s:?}: {e}"),
    })
}

/// Serialize a discrete measure, header `x0,...,weight`.
pub fn measure_to_csv(m: &DiscreteMeasure) -> String {
    let d = m.dim();
    let mut out = String::new();
    for k in 0..d {
        let _ = write!(out, "x{k},");
    }
    out.push_str("weight\n");
    for i in 0..m.len() {
        for v in m.point(i) {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", m.weight(i));
    }
    out
}

/// Parse a discrete measure written by [`measure_to_csv`].
pub fn measure_from_csv(text: &str) -> Result<DiscreteMeasure> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::CsvParse {
        line: 0,
        message: "empty file".into(),
    })?;
    let cols = header.split(',').count();
    if cols < 2 {
        return Err(Error::CsvParse {
            line: 1,
            message: "expected at least x0,weight".into(),
        });
    }
    let d = cols - 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::CsvParse {
                line: idx + 1,
                message: format!("expected {cols} fields, got {}", fields.len()),
            });
        }
        for f in &fields[..d] {
            points.push(parse_f64(f, idx + 1)?);
        }
        weights.push(parse_f64(fields[d], idx + 1)?);
    }
    DiscreteMeasure::new(d, points, weights)
}

/// Serialize a grid density with a geometry comment line.
pub fn grid_to_csv(g: &GridDensity) -> String {
    let d = g.dim();
    let mut out = String::new();
    let _ = write!(out, "# origin=");
    join_floats(&mut out, g.origin());
    let _ = write!(out, "; cell_width=");
    join_floats(&mut out, g.cell_width());
    let _ = write!(out, "; shape=");
    let shape: Vec<String> = g.shape().iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "{}", shape.join(" "));
    for k in 0..d {
        let _ = write!(out, "x{k},");
    }
    out.push_str("value\n");
    let mut x = vec![0.0; d];
    for (flat, v) in g.values().iter().enumerate() {
        g.center_into(flat, &mut x);
        for c in &x {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

fn join_floats(out: &mut String, xs: &[f64]) {
    for (i, v) in xs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
}

fn parse_float_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_f64(t, line)).collect()
}

/// Parse a grid density written by [`grid_to_csv`].
pub fn grid_from_csv(text: &str) -> Result<GridDensity> {
    let mut lines = text.lines().enumerate();
    let (_, meta) = lines.next().ok_or(Error::CsvParse {
        line: 0,
        message: "empty file".into(),
    })?;
    let meta = meta.strip_prefix('#').ok_or(Error::CsvParse {
        line: 1,
        message: "missing grid geometry comment".into(),
    })?;
    let mut origin = None;
    let mut cell_width = None;
    let mut shape: Option<Vec<usize>> = None;
    for part in meta.split(';') {
        let part = part.trim();
        if let Some(rest) = part.strip_prefix("origin=") {
            origin = Some(parse_float_list(rest, 1)?);
        } else if let Some(rest) = part.strip_prefix("cell_width=") {
            cell_width = Some(parse_float_list(rest, 1)?);
        } else if let Some(rest) = part.strip_prefix("shape=") {
            shape = Some(
                rest.split_whitespace()
                    .map(|t| {
                        t.parse::<usize>().map_err(|e| Error::CsvParse {
                            line: 1,
                            message: format!("bad shape entry {t:?}: {e}"),
                        })
                    })
                    .collect::<Result<Vec<usize>>>()?,
            );
        }
    }
    let (origin, cell_width, shape) = match (origin, cell_width, shape) {
        (Some(o), Some(w), Some(s)) => (o, w, s),
        _ => {
            return Err(Error::CsvParse {
                line: 1,
                message: "geometry comment must carry origin, cell_width, shape".into(),
            })
        }
    };
    let n: usize = shape.iter().product();
    let mut values = vec![0.0; n];
    let mut seen = 0usize;
    // skip the header row, then read values in row-major node order
    for (idx, line) in lines.skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().ok_or(Error::CsvParse {
            line: idx + 1,
            message: "empty row".into(),
        })?;
        if seen >= n {
            return Err(Error::CsvParse {
                line: idx + 1,
                message: "more rows than grid nodes".into(),
            });
        }
        values[seen] = parse_f64(last, idx + 1)?;
        seen += 1;
    }
    if seen != n {
        return Err(Error::CsvParse {
            line: 0,
            message: format!("expected {n} rows, got {seen}"),
        });
    }
    GridDensity::new(origin, cell_width, shape, values)
}

/// Parse snapshots written by [`snapshots_to_csv`] back into clouds,
/// grouped by time in file order.
pub fn snapshots_from_csv(text: &str) -> Result<Vec<(f64, crate::particle::ParticleCloud)>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::CsvParse {
        line: 0,
        message: "empty file".into(),
    })?;
    let cols = header.split(',').count();
    if cols < 3 {
        return Err(Error::CsvParse {
            line: 1,
            message: "expected t,particle,x0,...".into(),
        });
    }
    let d = cols - 2;
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t = parse_f64(
            fields.next().ok_or(Error::CsvParse {
                line: idx + 1,
                message: "missing time".into(),
            })?,
            idx + 1,
        )?;
        let _particle = fields.next();
        match groups.last_mut() {
            Some((gt, buf)) if *gt == t => {
                for f in fields {
                    buf.push(parse_f64(f, idx + 1)?);
                }
            }
            _ => {
                let mut buf = Vec::new();
                for f in fields {
                    buf.push(parse_f64(f, idx + 1)?);
                }
                groups.push((t, buf));
            }
        }
    }
    groups
        .into_iter()
        .map(|(t, buf)| Ok((t, crate::particle::ParticleCloud::new(d, buf, t)?)))
        .collect()
}

/// Serialize particle snapshots: `t,particle,x0,...`.
pub fn snapshots_to_csv(store: &TrajectoryStore) -> String {
    let d = store.dim();
    let mut out = String::from("t,particle");
    for k in 0..d {
        let _ = write!(out, ",x{k}");
    }
    out.push('\n');
    for (t, cloud) in store.snapshots() {
        for i in 0..cloud.len() {
            let _ = write!(out, "{t},{i}");
            for v in cloud.position(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}
