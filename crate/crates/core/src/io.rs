//! CSV and JSON artifact formats.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! reader below reproduces the written values bit for bit. All files are
//! UTF-8 with LF line endings and a header row.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::costmodels::CostTable;
use crate::error::{Error, Result};
use crate::field::{cumulative_integral, FieldKind, GridSpec, ScalarField2D, Trajectory};
use crate::geometry::Point2;
use crate::microsim::{NetworkRealization, Route};

pub const FIELD_HEADER: &str = "x,y,value";
pub const TABLE_HEADER: &str = "lambda,cost,std_error";
pub const POLYLINE_HEADER: &str = "ray_id,seq,x,y";
pub const TRAJECTORY_HEADER: &str = "seq,x,y,s,optical_length_so_far";
pub const NETWORK_HEADER: &str = "node_id,x,y";
pub const ROUTE_HEADER: &str = "seq,node_id,x,y,hop_cost,cum_cost";

/// Grid and kind of a field CSV, stored next to it as JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub x_min: f64,
    pub y_min: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub kind: FieldKind,
}

impl FieldSidecar {
    pub fn of(field: &ScalarField2D) -> Self {
        let s = field.spec();
        FieldSidecar {
            x_min: s.x_min,
            y_min: s.y_min,
            nx: s.nx,
            ny: s.ny,
            h: s.h,
            kind: field.kind(),
        }
    }

    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.x_min, self.y_min, self.nx, self.ny, self.h)
    }
}

/// Parsed CSV body: rows of fields after a checked header.
struct Rows<'a> {
    name: &'a str,
    rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> Rows<'a> {
    fn parse(name: &'a str, text: &'a str, header: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, first)) if first.trim() == header => {}
            Some((_, first)) => {
                return Err(Error::Format(format!(
                    "{name}: expected header `{header}`, got `{}`",
                    first.trim()
                )));
            }
            None => return Err(Error::Format(format!("{name}: empty file"))),
        }
        let width = header.split(',').count();
        let mut rows = Vec::new();
        for (k, line) in lines {
            let cells: Vec<&str> = line.trim().split(',').collect();
            if cells.len() != width {
                return Err(Error::Format(format!(
                    "{name} line {}: expected {width} columns, got {}",
                    k + 1,
                    cells.len()
                )));
            }
            rows.push((k + 1, cells));
        }
        Ok(Rows { name, rows })
    }

    fn f64(&self, row: usize, col: usize) -> Result<f64> {
        let (line, cells) = &self.rows[row];
        let v: f64 = cells[col]
            .parse()
            .map_err(|_| Error::Format(format!("{} line {line}: `{}` is not a number", self.name, cells[col])))?;
        if !v.is_finite() {
            return Err(Error::Format(format!(
                "{} line {line}: non-finite value {v}",
                self.name
            )));
        }
        Ok(v)
    }

    fn usize(&self, row: usize, col: usize) -> Result<usize> {
        let (line, cells) = &self.rows[row];
        cells[col]
            .parse()
            .map_err(|_| Error::Format(format!("{} line {line}: `{}` is not an index", self.name, cells[col])))
    }

    fn expect_index(&self, row: usize, col: usize, expected: usize) -> Result<()> {
        let got = self.usize(row, col)?;
        if got != expected {
            let line = self.rows[row].0;
            return Err(Error::Format(format!(
                "{} line {line}: expected sequence {expected}, got {got}",
                self.name
            )));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.rows.len()
    }
}

fn header(out: &mut String, header: &str) {
    out.push_str(header);
    out.push('\n');
}

/// Field values as CSV, row-major with x varying fastest.
pub fn field_csv(field: &ScalarField2D) -> String {
    let spec = field.spec();
    let mut out = String::with_capacity(spec.len() * 24);
    header(&mut out, FIELD_HEADER);
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let p = spec.node(i, j);
            let _ = writeln!(out, "{},{},{}", p.x, p.y, field.at(i, j));
        }
    }
    out
}

pub fn parse_field_csv(text: &str, sidecar: &FieldSidecar) -> Result<ScalarField2D> {
    let spec = sidecar.spec()?;
    let rows = Rows::parse("field csv", text, FIELD_HEADER)?;
    if rows.len() != spec.len() {
        return Err(Error::Format(format!(
            "field csv has {} rows, grid needs {}",
            rows.len(),
            spec.len()
        )));
    }
    let mut values = Vec::with_capacity(spec.len());
    for k in 0..rows.len() {
        let node = spec.node_at(k);
        let (x, y) = (rows.f64(k, 0)?, rows.f64(k, 1)?);
        let tol = 1e-9 * spec.h;
        if (x - node.x).abs() > tol || (y - node.y).abs() > tol {
            return Err(Error::Format(format!(
                "field csv row {k}: coordinates ({x}, {y}) do not match grid node {node}"
            )));
        }
        values.push(rows.f64(k, 2)?);
    }
    ScalarField2D::new(spec, values, sidecar.kind)
}

/// Sidecar path for a field CSV: same stem, `.json` extension.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write `field` to `path` and its sidecar next to it.
pub fn write_field(path: &Path, field: &ScalarField2D) -> Result<()> {
    fs::write(path, field_csv(field))?;
    fs::write(sidecar_path(path), to_json(&FieldSidecar::of(field))?)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField2D> {
    let sidecar: FieldSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    parse_field_csv(&fs::read_to_string(path)?, &sidecar)
}

pub fn table_csv(table: &CostTable) -> String {
    let mut out = String::new();
    header(&mut out, TABLE_HEADER);
    for k in 0..table.lambdas.len() {
        let _ = writeln!(out, "{},{},{}", table.lambdas[k], table.costs[k], table.std_errors[k]);
    }
    out
}

pub fn parse_table_csv(text: &str) -> Result<CostTable> {
    let rows = Rows::parse("cost table csv", text, TABLE_HEADER)?;
    let mut cols = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..rows.len() {
        cols.0.push(rows.f64(k, 0)?);
        cols.1.push(rows.f64(k, 1)?);
        cols.2.push(rows.f64(k, 2)?);
    }
    CostTable::new(cols.0, cols.1, cols.2)
}

/// Several polylines (rays or wavefront pieces), numbered by `ray_id`.
pub fn polylines_csv<'a>(lines: impl IntoIterator<Item = &'a [Point2]>) -> String {
    let mut out = String::new();
    header(&mut out, POLYLINE_HEADER);
    for (id, line) in lines.into_iter().enumerate() {
        for (seq, p) in line.iter().enumerate() {
            let _ = writeln!(out, "{id},{seq},{},{}", p.x, p.y);
        }
    }
    out
}

pub fn parse_polylines_csv(text: &str) -> Result<Vec<Vec<Point2>>> {
    let rows = Rows::parse("polyline csv", text, POLYLINE_HEADER)?;
    let mut lines: Vec<Vec<Point2>> = Vec::new();
    for k in 0..rows.len() {
        let id = rows.usize(k, 0)?;
        if id == lines.len() {
            lines.push(Vec::new());
        } else if id + 1 != lines.len() {
            return Err(Error::Format(format!("polyline csv row {k}: ray_id {id} out of order")));
        }
        let line = lines.last_mut().expect("pushed");
        rows.expect_index(k, 1, line.len())?;
        line.push(Point2::new(rows.f64(k, 2)?, rows.f64(k, 3)?));
    }
    Ok(lines)
}

/// Trajectory vertices with cumulative arc length and cost. The cost column
/// integrates `cost` segment by segment; pass `None` for a trajectory
/// without a cost field, which writes zeros.
pub fn trajectory_csv(traj: &Trajectory, cost: Option<&ScalarField2D>) -> Result<String> {
    let arc = traj.cumulative_arc();
    let optical = match cost {
        Some(c) => cumulative_integral(c, traj)?,
        None => vec![0.0; traj.len()],
    };
    let mut out = String::new();
    header(&mut out, TRAJECTORY_HEADER);
    for (k, p) in traj.points().iter().enumerate() {
        let _ = writeln!(out, "{k},{},{},{},{}", p.x, p.y, arc[k], optical[k]);
    }
    Ok(out)
}

/// Inverse of [`trajectory_csv`]; `optical_length` is the last row's
/// cumulative cost.
pub fn parse_trajectory_csv(text: &str) -> Result<Trajectory> {
    let rows = Rows::parse("trajectory csv", text, TRAJECTORY_HEADER)?;
    let mut points = Vec::with_capacity(rows.len());
    for k in 0..rows.len() {
        rows.expect_index(k, 0, k)?;
        points.push(Point2::new(rows.f64(k, 1)?, rows.f64(k, 2)?));
    }
    let mut traj = if points.len() == 2 && points[0] == points[1] {
        Trajectory::degenerate(points[0])
    } else {
        Trajectory::new(points)?
    };
    if rows.len() > 0 {
        traj.optical_length = rows.f64(rows.len() - 1, 4)?;
    }
    Ok(traj)
}

pub fn network_csv(net: &NetworkRealization) -> String {
    let mut out = String::with_capacity(net.len() * 40);
    header(&mut out, NETWORK_HEADER);
    for (k, p) in net.nodes().iter().enumerate() {
        let _ = writeln!(out, "{k},{},{}", p.x, p.y);
    }
    out
}

pub fn parse_network_csv(text: &str) -> Result<Vec<Point2>> {
    let rows = Rows::parse("network csv", text, NETWORK_HEADER)?;
    (0..rows.len())
        .map(|k| {
            rows.expect_index(k, 0, k)?;
            Ok(Point2::new(rows.f64(k, 1)?, rows.f64(k, 2)?))
        })
        .collect()
}

pub fn route_csv(route: &Route, net: &NetworkRealization) -> String {
    let mut out = String::new();
    header(&mut out, ROUTE_HEADER);
    let mut cum = 0.0;
    for (seq, &k) in route.node_indices.iter().enumerate() {
        let p = net.node(k);
        let hop = if seq == 0 { 0.0 } else { route.hop_costs[seq - 1] };
        cum += hop;
        let _ = writeln!(out, "{seq},{k},{},{},{hop},{cum}", p.x, p.y);
    }
    out
}

/// Inverse of [`route_csv`]. The CSV does not record whether forwarding
/// reached its destination; that is passed in as `reached`.
pub fn parse_route_csv(text: &str, reached: bool) -> Result<Route> {
    let rows = Rows::parse("route csv", text, ROUTE_HEADER)?;
    let mut nodes = Vec::with_capacity(rows.len());
    let mut hops = Vec::with_capacity(rows.len());
    for k in 0..rows.len() {
        rows.expect_index(k, 0, k)?;
        nodes.push(rows.usize(k, 1)?);
        if k > 0 {
            hops.push(rows.f64(k, 4)?);
        }
    }
    if nodes.is_empty() {
        return Err(Error::Format("route csv has no rows".into()));
    }
    Ok(Route::from_nodes(nodes, hops, reached))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
