//! Scalar fields sampled on a uniform square grid.
//!
//! Every macroscopic quantity (node density, cost, eikonal value) lives in a
//! [`ScalarField2D`]. Evaluation between nodes is bilinear, gradients are
//! central differences of that interpolant, and line integrals use a
//! composite midpoint rule with sub-steps no longer than half a cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Uniform grid over an axis-aligned rectangle. Nodes sit at
/// `(x_min + i*h, y_min + j*h)` for `i < nx`, `j < ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub y_min: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, y_min: f64, nx: usize, ny: usize, h: f64) -> Result<Self> {
        let spec = Self {
            x_min,
            y_min,
            nx,
            ny,
            h,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid covering `[x_min, x_max] x [y_min, y_max]` with spacing `h`. The
    /// upper edges are rounded to the nearest whole number of cells.
    pub fn from_extent(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::Parameter(format!(
                "empty domain [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        let nx = ((x_max - x_min) / h).round() as usize + 1;
        let ny = ((y_max - y_min) / h).round() as usize + 1;
        Self::new(x_min, y_min, nx, ny, h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Parameter(format!(
                "grid spacing must be positive, got {}",
                self.h
            )));
        }
        if !(self.x_min.is_finite() && self.y_min.is_finite()) {
            return Err(Error::Parameter("grid origin must be finite".into()));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Parameter(format!(
                "grid needs at least 2 nodes per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.nx - 1) as f64 * self.h
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + (self.ny - 1) as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn area(&self) -> f64 {
        (self.x_max() - self.x_min) * (self.y_max() - self.y_min)
    }

    /// Row-major index: x varies fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> Point2 {
        Point2::new(self.x_min + i as f64 * self.h, self.y_min + j as f64 * self.h)
    }

    pub fn node_at(&self, idx: usize) -> Point2 {
        self.node(idx % self.nx, idx / self.nx)
    }

    fn eps(&self) -> f64 {
        1e-9 * self.h
    }

    /// Distance from `p` to the nearest edge of the rectangle; negative
    /// outside.
    pub fn margin(&self, p: Point2) -> f64 {
        (p.x - self.x_min)
            .min(self.x_max() - p.x)
            .min(p.y - self.y_min)
            .min(self.y_max() - p.y)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.is_finite() && self.margin(p) >= -self.eps()
    }

    /// True when `p` is at least `d` away from every edge.
    pub fn contains_with_margin(&self, p: Point2, d: f64) -> bool {
        p.is_finite() && self.margin(p) >= d - self.eps()
    }

    /// Clamp into the rectangle.
    pub fn clamp(&self, p: Point2) -> Point2 {
        Point2::new(p.x.clamp(self.x_min, self.x_max()), p.y.clamp(self.y_min, self.y_max()))
    }

    /// Lower-left node of the cell holding `p` and the fractional offsets
    /// inside it. Points on the upper edges map to the last cell.
    fn locate(&self, p: Point2) -> (usize, usize, f64, f64) {
        let fx = ((p.x - self.x_min) / self.h).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.y_min) / self.h).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        (i, j, fx - i as f64, fy - j as f64)
    }

    /// Grid node nearest to `p` (which must be inside the rectangle).
    pub fn nearest_node(&self, p: Point2) -> (usize, usize) {
        let fx = ((p.x - self.x_min) / self.h).round().clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.y_min) / self.h).round().clamp(0.0, (self.ny - 1) as f64);
        (fx as usize, fy as usize)
    }

    /// The four nodes of the cell containing `p`.
    pub fn cell_corners(&self, p: Point2) -> [(usize, usize); 4] {
        let (i, j, _, _) = self.locate(p);
        [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
    }

    /// Same rectangle at a different spacing.
    pub fn with_spacing(&self, h: f64) -> Result<Self> {
        Self::from_extent(self.x_min, self.x_max(), self.y_min, self.y_max(), h)
    }
}

/// What a field holds; determines the sign constraint on its values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Nodes per square meter.
    Density,
    /// Unitless cost relative to the nominal network.
    Cost,
    /// Minimum accumulated cost from a source, in meters.
    Eikonal,
}

impl FieldKind {
    fn check(self, v: f64) -> bool {
        v.is_finite()
            && match self {
                FieldKind::Density | FieldKind::Cost => v > 0.0,
                FieldKind::Eikonal => v >= 0.0,
            }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Density => "density",
            FieldKind::Cost => "cost",
            FieldKind::Eikonal => "eikonal",
        }
    }
}

/// A sampled scalar function. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    spec: GridSpec,
    values: Vec<f64>,
    kind: FieldKind,
}

impl ScalarField2D {
    pub fn new(spec: GridSpec, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::Parameter(format!(
                "expected {} values for a {}x{} grid, got {}",
                spec.len(),
                spec.nx,
                spec.ny,
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|&v| !kind.check(v)) {
            return Err(Error::Domain(format!(
                "{} field value {} at node {} violates its sign constraint",
                kind.as_str(),
                values[idx],
                spec.node_at(idx)
            )));
        }
        Ok(Self { spec, values, kind })
    }

    /// Rasterize an analytic function onto the grid nodes.
    pub fn from_fn(spec: GridSpec, kind: FieldKind, f: impl Fn(Point2) -> f64) -> Result<Self> {
        let values = (0..spec.len()).map(|k| f(spec.node_at(k))).collect();
        Self::new(spec, values, kind)
    }

    pub fn constant(spec: GridSpec, kind: FieldKind, value: f64) -> Result<Self> {
        Self::new(spec, vec![value; spec.len()], kind)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn h(&self) -> f64 {
        self.spec.h
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise transform into a field of another kind.
    pub fn map(&self, kind: FieldKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|&v| f(v)).collect(), kind)
    }

    /// Bilinear interpolation; exact at grid nodes.
    pub fn sample(&self, p: Point2) -> Result<f64> {
        if !self.spec.contains(p) {
            return Err(Error::OutOfDomain {
                point: p,
                reason: "outside the grid rectangle".into(),
            });
        }
        Ok(self.sample_unchecked(p))
    }

    pub(crate) fn sample_unchecked(&self, p: Point2) -> f64 {
        let (i, j, tx, ty) = self.spec.locate(p);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        let bottom = v00 + tx * (v10 - v00);
        let top = v01 + tx * (v11 - v01);
        bottom + ty * (top - bottom)
    }

    /// Central difference of the bilinear interpolant with half-width `h/2`
    /// on each axis. Requires `p` to be at least `h` from the boundary.
    pub fn gradient(&self, p: Point2) -> Result<(f64, f64)> {
        if !self.spec.contains_with_margin(p, self.spec.h) {
            return Err(Error::OutOfDomain {
                point: p,
                reason: format!("closer than one grid spacing ({}) to the boundary", self.spec.h),
            });
        }
        Ok(self.gradient_unchecked(p))
    }

    pub(crate) fn gradient_unchecked(&self, p: Point2) -> (f64, f64) {
        let half = 0.5 * self.spec.h;
        let f = |dx: f64, dy: f64| self.sample_unchecked(Point2::new(p.x + dx, p.y + dy));
        let gx = (f(half, 0.0) - f(-half, 0.0)) / self.spec.h;
        let gy = (f(0.0, half) - f(0.0, -half)) / self.spec.h;
        (gx, gy)
    }

    /// True where [`ScalarField2D::gradient`] is defined.
    pub fn gradient_defined(&self, p: Point2) -> bool {
        self.spec.contains_with_margin(p, self.spec.h)
    }
}

/// An oriented polyline with its length and accumulated cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<Point2>,
    pub arc_length: f64,
    /// Line integral of the cost field along the curve; zero until
    /// [`Trajectory::costed`] has been applied.
    pub optical_length: f64,
}

impl Trajectory {
    /// Build from at least two finite points with no repeated consecutive
    /// point.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Parameter(format!(
                "a trajectory needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Parameter(format!("non-finite trajectory point {p}")));
        }
        if let Some(k) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::Parameter(format!(
                "repeated consecutive point {} at index {k}",
                points[k]
            )));
        }
        let arc_length = points.windows(2).map(|w| w[0].distance(w[1])).sum();
        Ok(Self {
            points,
            arc_length,
            optical_length: 0.0,
        })
    }

    /// Like [`Trajectory::new`] but silently drops repeated consecutive
    /// points first.
    pub fn from_points_dedup(mut points: Vec<Point2>) -> Result<Self> {
        points.dedup();
        Self::new(points)
    }

    /// Zero-length trajectory sitting at `p`. This is the only trajectory
    /// allowed to repeat a point.
    pub fn degenerate(p: Point2) -> Self {
        Self {
            points: vec![p, p],
            arc_length: 0.0,
            optical_length: 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.arc_length == 0.0
    }

    /// Set `optical_length` to the line integral over `cost`.
    pub fn costed(mut self, cost: &ScalarField2D) -> Result<Self> {
        self.optical_length = line_integral(cost, &self)?;
        Ok(self)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn start(&self) -> Point2 {
        self.points[0]
    }

    pub fn end(&self) -> Point2 {
        *self.points.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            points,
            arc_length: self.arc_length,
            optical_length: self.optical_length,
        }
    }

    /// Join two trajectories where `self` ends at `other`'s start.
    pub fn concat(&self, other: &Trajectory) -> Result<Self> {
        if self.end() != other.start() {
            return Err(Error::Parameter(format!(
                "cannot join trajectory ending at {} to one starting at {}",
                self.end(),
                other.start()
            )));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points[1..]);
        Self::from_points_dedup(points)
    }

    /// Cumulative arc length at each vertex.
    pub fn cumulative_arc(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.points.len());
        out.push(0.0);
        for w in self.points.windows(2) {
            acc += w[0].distance(w[1]);
            out.push(acc);
        }
        out
    }

    /// Largest `|x|` reached anywhere on the curve.
    pub fn max_abs_x(&self) -> f64 {
        self.points.iter().map(|p| p.x.abs()).fold(0.0, f64::max)
    }

    /// Arc-length weighted mean of `|x|` (trapezoidal per segment).
    pub fn mean_abs_x(&self) -> f64 {
        if self.arc_length == 0.0 {
            return self.points[0].x.abs();
        }
        let sum: f64 = self
            .points
            .windows(2)
            .map(|w| 0.5 * (w[0].x.abs() + w[1].x.abs()) * w[0].distance(w[1]))
            .sum();
        sum / self.arc_length
    }

    /// Largest distance from a vertex of either curve to the other curve
    /// (discrete symmetric Hausdorff distance).
    pub fn max_separation(&self, other: &Trajectory) -> f64 {
        fn one_way(a: &Trajectory, b: &Trajectory) -> f64 {
            a.points
                .iter()
                .map(|&p| {
                    b.points
                        .windows(2)
                        .map(|w| crate::geometry::distance_to_segment(w[0], w[1], p))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        }
        one_way(self, other).max(one_way(other, self))
    }
}

/// Composite midpoint quadrature of the cost along `traj` with sub-steps of
/// at most `h/2`.
pub fn line_integral(field: &ScalarField2D, traj: &Trajectory) -> Result<f64> {
    Ok(segment_integrals(field, traj.points(), 0.5 * field.h())?.iter().sum())
}

/// Same as [`line_integral`] with an explicit upper bound on the sub-step.
pub fn line_integral_with_substep(field: &ScalarField2D, traj: &Trajectory, max_substep: f64) -> Result<f64> {
    Ok(segment_integrals(field, traj.points(), max_substep)?.iter().sum())
}

/// Accumulated cost at each vertex of the polyline (first entry is zero).
pub fn cumulative_integral(field: &ScalarField2D, traj: &Trajectory) -> Result<Vec<f64>> {
    let parts = segment_integrals(field, traj.points(), 0.5 * field.h())?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(parts.len() + 1);
    out.push(0.0);
    for part in parts {
        acc += part;
        out.push(acc);
    }
    Ok(out)
}

fn segment_integrals(field: &ScalarField2D, points: &[Point2], max_substep: f64) -> Result<Vec<f64>> {
    if !(max_substep > 0.0) {
        return Err(Error::Parameter(format!(
            "quadrature sub-step must be positive, got {max_substep}"
        )));
    }
    if let Some(p) = points.iter().find(|p| !field.spec().contains(**p)) {
        return Err(Error::OutOfDomain {
            point: *p,
            reason: "trajectory leaves the field's domain".into(),
        });
    }
    Ok(points
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let len = a.distance(b);
            if len == 0.0 {
                return 0.0;
            }
            let n = (len / max_substep).ceil().max(1.0) as usize;
            let dl = len / n as f64;
            let sum: f64 = (0..n)
                .map(|k| field.sample_unchecked(a.lerp(b, (k as f64 + 0.5) / n as f64)))
                .sum();
            sum * dl
        })
        .collect())
}
