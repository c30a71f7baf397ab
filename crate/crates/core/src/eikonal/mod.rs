//! First-arrival solution of `|grad S| = c(r)` by the fast marching method.
//!
//! `S(r)` is the minimum cost of reaching `r` from a source set, so its
//! level sets are wavefronts and its steepest-descent curves are optimal
//! routes back to the source.

mod contour;
mod descent;

pub use contour::{extract_wavefronts, Contour};
pub use descent::trace_descent_ray;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{line_integral, FieldKind, GridSpec, ScalarField2D, Trajectory};
use crate::geometry::{self, Point2};

/// Where `S = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSet {
    Point(Point2),
    Disk { center: Point2, radius: f64 },
    Polygon(Vec<Point2>),
}

impl SourceSet {
    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        let outside = |p: Point2| Error::OutOfDomain {
            point: p,
            reason: "source lies outside the grid".into(),
        };
        match self {
            SourceSet::Point(p) => {
                if !spec.contains(*p) {
                    return Err(outside(*p));
                }
            }
            SourceSet::Disk { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Parameter(format!("disk radius must be > 0, got {radius}")));
                }
                if !spec.contains_with_margin(*center, *radius) {
                    return Err(outside(*center));
                }
            }
            SourceSet::Polygon(vertices) => {
                if let Some(p) = vertices.iter().find(|p| !spec.contains(**p)) {
                    return Err(outside(*p));
                }
                if !geometry::is_simple_polygon(vertices) {
                    return Err(Error::Parameter("source polygon must be simple".into()));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        match self {
            SourceSet::Point(q) => *q == p,
            SourceSet::Disk { center, radius } => p.distance(*center) <= *radius,
            SourceSet::Polygon(vertices) => geometry::point_in_polygon(vertices, p),
        }
    }

    /// Closest point of the source set to `p`.
    pub fn nearest_point(&self, p: Point2) -> Point2 {
        match self {
            SourceSet::Point(q) => *q,
            SourceSet::Disk { center, radius } => {
                let d = p.distance(*center);
                if d <= *radius {
                    p
                } else {
                    *center + (p - *center) * (*radius / d)
                }
            }
            SourceSet::Polygon(vertices) => {
                if geometry::point_in_polygon(vertices, p) {
                    return p;
                }
                let n = vertices.len();
                (0..n)
                    .map(|k| {
                        let (a, b) = (vertices[k], vertices[(k + 1) % n]);
                        a.lerp(b, geometry::segment_param(a, b, p))
                    })
                    .min_by(|a, b| a.distance_sq(p).total_cmp(&b.distance_sq(p)))
                    .expect("polygon has vertices")
            }
        }
    }

    /// Euclidean distance from `p` to the set.
    pub fn distance(&self, p: Point2) -> f64 {
        p.distance(self.nearest_point(p))
    }

    /// Point used to seed the solver when no grid node falls inside.
    fn anchor(&self) -> Point2 {
        match self {
            SourceSet::Point(p) => *p,
            SourceSet::Disk { center, .. } => *center,
            SourceSet::Polygon(vertices) => {
                let sum = vertices.iter().fold(Point2::default(), |acc, &v| acc + v);
                sum * (1.0 / vertices.len() as f64)
            }
        }
    }
}

/// Eikonal values on the grid of the cost field they were computed from.
#[derive(Debug, Clone)]
pub struct EikonalSolution {
    s: ScalarField2D,
    cost: ScalarField2D,
    source: SourceSet,
    /// Largest decrease observed between consecutively accepted values
    /// while marching; zero for a causal solve.
    pub max_order_violation: f64,
}

impl EikonalSolution {
    pub fn field(&self) -> &ScalarField2D {
        &self.s
    }

    pub fn cost(&self) -> &ScalarField2D {
        &self.cost
    }

    pub fn source(&self) -> &SourceSet {
        &self.source
    }

    pub fn value(&self, p: Point2) -> Result<f64> {
        self.s.sample(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Far,
    Trial,
    Known,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    value: f64,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so that BinaryHeap pops the smallest value; ties by index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

struct Marcher<'a> {
    cost: &'a ScalarField2D,
    spec: GridSpec,
    values: Vec<f64>,
    state: Vec<State>,
    heap: BinaryHeap<Entry>,
}

impl<'a> Marcher<'a> {
    fn new(cost: &'a ScalarField2D) -> Self {
        let spec = *cost.spec();
        Self {
            cost,
            spec,
            values: vec![f64::INFINITY; spec.len()],
            state: vec![State::Far; spec.len()],
            heap: BinaryHeap::new(),
        }
    }

    fn fix(&mut self, idx: usize, value: f64) {
        if value < self.values[idx] || self.state[idx] != State::Known {
            self.values[idx] = self.values[idx].min(value);
            self.state[idx] = State::Known;
        }
    }

    fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let (i, j) = (idx % nx, idx / nx);
        [
            (i > 0).then(|| idx - 1),
            (i + 1 < nx).then(|| idx + 1),
            (j > 0).then(|| idx - nx),
            (j + 1 < ny).then(|| idx + nx),
        ]
        .into_iter()
        .flatten()
    }

    fn known(&self, idx: usize) -> f64 {
        if self.state[idx] == State::Known {
            self.values[idx]
        } else {
            f64::INFINITY
        }
    }

    /// First-order upwind update from the Known neighbors.
    fn local_solve(&self, idx: usize) -> f64 {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let (i, j) = (idx % nx, idx / nx);
        let left = if i > 0 { self.known(idx - 1) } else { f64::INFINITY };
        let right = if i + 1 < nx { self.known(idx + 1) } else { f64::INFINITY };
        let down = if j > 0 { self.known(idx - nx) } else { f64::INFINITY };
        let up = if j + 1 < ny {
            self.known(idx + nx)
        } else {
            f64::INFINITY
        };
        let a = left.min(right);
        let b = down.min(up);
        let f = self.cost.values()[idx] * self.spec.h;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if !lo.is_finite() {
            return f64::INFINITY;
        }
        if hi - lo >= f {
            lo + f
        } else {
            let diff = hi - lo;
            0.5 * (lo + hi + (2.0 * f * f - diff * diff).sqrt())
        }
    }

    fn update_neighbors(&mut self, idx: usize) {
        let nbrs: Vec<usize> = self.neighbors(idx).collect();
        for n in nbrs {
            if self.state[n] == State::Known {
                continue;
            }
            let candidate = self.local_solve(n);
            if candidate < self.values[n] {
                self.values[n] = candidate;
                self.state[n] = State::Trial;
                self.heap.push(Entry {
                    value: candidate,
                    idx: n,
                });
            }
        }
    }

    /// Returns the largest ordering violation seen.
    fn march(&mut self) -> f64 {
        let seeds: Vec<usize> = (0..self.values.len())
            .filter(|&k| self.state[k] == State::Known)
            .collect();
        for idx in seeds {
            self.update_neighbors(idx);
        }
        let mut last = f64::NEG_INFINITY;
        let mut violation = 0.0f64;
        while let Some(Entry { value, idx }) = self.heap.pop() {
            if self.state[idx] == State::Known || value > self.values[idx] {
                continue;
            }
            self.state[idx] = State::Known;
            violation = violation.max(last - value);
            last = last.max(value);
            self.update_neighbors(idx);
        }
        violation
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Radius in meters around a point source inside which nodes are
    /// seeded with the cost integral along the straight segment from the
    /// source instead of being marched. Zero seeds only the four corners
    /// of the source cell.
    ///
    /// First-order marching from a point source has a direction bias
    /// towards the grid axes that decays only logarithmically; seeding a
    /// fixed physical neighborhood removes it where it is largest.
    #[serde(default)]
    pub point_seed_radius: f64,
}

/// Solve the eikonal equation with cost `cost` and `S = 0` on `source`.
///
/// Grid nodes inside a disk or polygon source start at zero. A point source
/// seeds the four corners of its cell with `c(source) * distance`; region
/// sources too small to contain a node are seeded the same way with the
/// distance to the region.
pub fn solve(cost: &ScalarField2D, source: &SourceSet) -> Result<EikonalSolution> {
    solve_with(cost, source, &SolveOptions::default())
}

/// Seed nodes within `radius` of the point source `a` with the straight
/// segment cost integral.
fn seed_point_neighborhood(marcher: &mut Marcher, cost: &ScalarField2D, a: Point2, radius: f64) -> Result<()> {
    if radius <= 0.0 {
        return Ok(());
    }
    let spec = *cost.spec();
    for idx in 0..spec.len() {
        let node = spec.node_at(idx);
        let d = node.distance(a);
        if d > 0.0 && d <= radius && marcher.state[idx] != State::Known {
            let segment = Trajectory::new(vec![a, node])?;
            let value = line_integral(cost, &segment)?;
            marcher.fix(idx, value);
        }
    }
    Ok(())
}

/// [`solve`] with explicit settings.
pub fn solve_with(cost: &ScalarField2D, source: &SourceSet, opts: &SolveOptions) -> Result<EikonalSolution> {
    if !(opts.point_seed_radius >= 0.0 && opts.point_seed_radius.is_finite()) {
        return Err(Error::Parameter(format!(
            "point seed radius must be >= 0, got {}",
            opts.point_seed_radius
        )));
    }
    if let Some(&v) = cost.values().iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!(
            "cost field must be strictly positive, found {v}"
        )));
    }
    let spec = *cost.spec();
    source.validate(&spec)?;

    let mut marcher = Marcher::new(cost);
    if !matches!(source, SourceSet::Point(_)) {
        for idx in 0..spec.len() {
            if source.contains(spec.node_at(idx)) {
                marcher.fix(idx, 0.0);
            }
        }
    }
    if !marcher.state.contains(&State::Known) {
        let anchor = source.anchor();
        let c_src = cost.sample(anchor)?;
        for (i, j) in spec.cell_corners(anchor) {
            let node = spec.node(i, j);
            marcher.fix(spec.index(i, j), c_src * source.distance(node));
        }
        if let SourceSet::Point(a) = source {
            seed_point_neighborhood(&mut marcher, cost, *a, opts.point_seed_radius)?;
        }
    }
    let max_order_violation = marcher.march();

    let s = ScalarField2D::new(spec, marcher.values, FieldKind::Eikonal).map_err(|e| e.context("eikonal solution"))?;
    Ok(EikonalSolution {
        s,
        cost: cost.clone(),
        source: source.clone(),
        max_order_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(half: f64, h: f64) -> GridSpec {
        GridSpec::from_extent(-half, half, -half, half, h).unwrap()
    }

    fn max_error(sol: &EikonalSolution, exact: impl Fn(Point2) -> f64) -> f64 {
        let spec = *sol.field().spec();
        sol.field()
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| (v - exact(spec.node_at(k))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn free_space_distance() {
        let h = 0.5;
        let cost = ScalarField2D::constant(square(10.0, h), FieldKind::Cost, 1.0).unwrap();
        let sol = solve(&cost, &SourceSet::Point(Point2::new(0.0, 0.0))).unwrap();
        let s = sol.value(Point2::new(3.0, 4.0)).unwrap();
        assert!((s - 5.0).abs() <= 1.0 * h, "S(3,4) = {s}");
        assert_eq!(sol.value(Point2::new(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(sol.max_order_violation, 0.0);
    }

    #[test]
    fn constant_medium_scales_linearly() {
        let h = 0.5;
        let one = ScalarField2D::constant(square(10.0, h), FieldKind::Cost, 1.0).unwrap();
        let two = ScalarField2D::constant(square(10.0, h), FieldKind::Cost, 2.0).unwrap();
        let src = SourceSet::Point(Point2::new(0.0, 0.0));
        let s1 = solve(&one, &src).unwrap();
        let s2 = solve(&two, &src).unwrap();
        let s = s2.value(Point2::new(3.0, 4.0)).unwrap();
        assert!((s - 10.0).abs() <= 2.0 * h);
        for (a, b) in s1.field().values().iter().zip(s2.field().values()) {
            assert!((2.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn disk_source_gives_distance_to_disk() {
        let h = 0.5;
        let spec = GridSpec::from_extent(-20.0, 60.0, -40.0, 40.0, h).unwrap();
        let cost = ScalarField2D::constant(spec, FieldKind::Cost, 1.0).unwrap();
        let center = Point2::new(20.0, 0.0);
        let sol = solve(&cost, &SourceSet::Disk { center, radius: 10.0 }).unwrap();
        let err = max_error(&sol, |p| (p.distance(center) - 10.0).max(0.0));
        assert!(err <= 2.0 * h, "max error {err}");
        assert_eq!(sol.max_order_violation, 0.0);
    }

    #[test]
    fn polygon_source_is_zero_inside() {
        let spec = square(10.0, 0.5);
        let cost = ScalarField2D::constant(spec, FieldKind::Cost, 1.0).unwrap();
        let tri = vec![Point2::new(-2.0, -2.0), Point2::new(3.0, -2.0), Point2::new(0.0, 4.0)];
        let sol = solve(&cost, &SourceSet::Polygon(tri.clone())).unwrap();
        assert_eq!(sol.value(Point2::new(0.0, 0.0)).unwrap(), 0.0);
        assert!(sol.value(Point2::new(8.0, 8.0)).unwrap() > 0.0);
        let bowtie = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert!(solve(&cost, &SourceSet::Polygon(bowtie)).is_err());
    }

    #[test]
    fn tiny_disk_falls_back_to_cell_seeding() {
        let spec = square(5.0, 1.0);
        let cost = ScalarField2D::constant(spec, FieldKind::Cost, 1.0).unwrap();
        let center = Point2::new(0.5, 0.5);
        let sol = solve(&cost, &SourceSet::Disk { center, radius: 0.1 }).unwrap();
        let v = sol.value(Point2::new(0.0, 0.0)).unwrap();
        assert!((v - (0.5f64.hypot(0.5) - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let spec = square(5.0, 1.0);
        let cost = ScalarField2D::constant(spec, FieldKind::Cost, 1.0).unwrap();
        assert!(solve(&cost, &SourceSet::Point(Point2::new(6.0, 0.0))).is_err());
        assert!(solve(
            &cost,
            &SourceSet::Disk {
                center: Point2::new(0.0, 0.0),
                radius: 0.0
            }
        )
        .is_err());
        let eik = ScalarField2D::constant(spec, FieldKind::Eikonal, 0.0).unwrap();
        assert!(matches!(
            solve(&eik, &SourceSet::Point(Point2::new(0.0, 0.0))),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn solution_is_positive_off_source_and_finite() {
        let spec = GridSpec::from_extent(-30.0, 30.0, -10.0, 50.0, 1.0).unwrap();
        let cost =
            ScalarField2D::from_fn(spec, FieldKind::Cost, |p| 1.0 / (3e-5 * p.x * p.x + 0.01f64).sqrt()).unwrap();
        let src = Point2::new(3.3, 7.1);
        let sol = solve(&cost, &SourceSet::Point(src)).unwrap();
        assert!(sol.field().values().iter().all(|v| v.is_finite() && *v > 0.0));
        assert_eq!(sol.max_order_violation, 0.0);
    }

    #[test]
    fn point_source_error_shrinks_first_order() {
        let src = Point2::new(0.0, 0.0);
        let errors: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&h| {
                let cost = ScalarField2D::constant(square(50.0, h), FieldKind::Cost, 1.0).unwrap();
                let sol = solve(&cost, &SourceSet::Point(src)).unwrap();
                max_error(&sol, |p| p.distance(src))
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "errors {errors:?}");
        }
    }

    #[test]
    fn seeded_neighborhood_is_exact_in_uniform_medium() {
        let h = 1.0;
        let cost = ScalarField2D::constant(square(30.0, h), FieldKind::Cost, 2.0).unwrap();
        let src = Point2::new(0.3, 0.6);
        let opts = SolveOptions { point_seed_radius: 6.0 };
        let seeded = solve_with(&cost, &SourceSet::Point(src), &opts).unwrap();
        let plain = solve(&cost, &SourceSet::Point(src)).unwrap();
        let spec = *cost.spec();
        for (k, v) in seeded.field().values().iter().enumerate() {
            let d = spec.node_at(k).distance(src);
            if d <= 6.0 {
                assert!((v - 2.0 * d).abs() < 1e-9);
            }
        }
        let exact = |p: Point2| 2.0 * p.distance(src);
        assert!(max_error(&seeded, exact) < max_error(&plain, exact));
        assert_eq!(seeded.max_order_violation, 0.0);
        assert!(solve_with(
            &cost,
            &SourceSet::Point(src),
            &SolveOptions {
                point_seed_radius: -1.0
            }
        )
        .is_err());
    }
}
