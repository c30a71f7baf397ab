//! Direct integration of the ray equation `d/ds (c dr/ds) = grad c` and
//! two-point shooting between a source and a destination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField2D, Trajectory};
use crate::geometry::{self, Point2};

/// Launch angles tried when no seed direction is available.
pub const SCAN_ANGLES: usize = 64;

/// Bisection steps on the launch angle before giving up.
pub const MAX_BISECTIONS: usize = 60;

/// Position, cost-scaled direction `p = c(r) dr/ds`, and arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayState {
    pub r: Point2,
    pub p: Point2,
    pub s: f64,
}

fn cost_and_gradient(cost: &ScalarField2D, r: Point2) -> (f64, Point2) {
    let (gx, gy) = cost.gradient_unchecked(r);
    (cost.sample_unchecked(r), Point2::new(gx, gy))
}

fn rk4_step(cost: &ScalarField2D, r: Point2, p: Point2, ds: f64) -> (Point2, Point2) {
    let deriv = |r: Point2, p: Point2| {
        let (c, g) = cost_and_gradient(cost, r);
        (p * (1.0 / c), g)
    };
    let (k1r, k1p) = deriv(r, p);
    let (k2r, k2p) = deriv(r + k1r * (0.5 * ds), p + k1p * (0.5 * ds));
    let (k3r, k3p) = deriv(r + k2r * (0.5 * ds), p + k2p * (0.5 * ds));
    let (k4r, k4p) = deriv(r + k3r * ds, p + k3p * ds);
    let r_next = r + (k1r + k2r * 2.0 + k3r * 2.0 + k4r) * (ds / 6.0);
    let p_next = p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (ds / 6.0);
    (r_next, p_next)
}

/// Fraction of a full step at which the ray leaves the region at least
/// `inset` from the grid boundary.
fn exit_fraction(cost: &ScalarField2D, r: Point2, p: Point2, step: f64, inset: f64) -> f64 {
    let spec = cost.spec();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if spec.margin(rk4_step(cost, r, p, mid * step).0) >= inset {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// States of a ray launched from `start` along the unit vector
/// `direction`, one per accepted step.
///
/// Integration stops after `max_length` of arc or where the ray leaves the
/// region in which the cost gradient is defined (one grid spacing inside
/// the rectangle). The exit point is clipped onto that region's boundary.
pub fn integrate_states(
    cost: &ScalarField2D,
    start: Point2,
    direction: Point2,
    ds: f64,
    max_length: f64,
) -> Result<Vec<RayState>> {
    let h = cost.h();
    if !(ds > 0.0 && ds <= 0.5 * h * (1.0 + 1e-12)) {
        return Err(Error::Parameter(format!(
            "ray step must lie in (0, h/2 = {}], got {ds}",
            0.5 * h
        )));
    }
    if !(max_length > 0.0 && max_length.is_finite()) {
        return Err(Error::Parameter(format!(
            "max ray length must be > 0, got {max_length}"
        )));
    }
    if !((direction.norm() - 1.0).abs() < 1e-9) {
        return Err(Error::Parameter(format!(
            "launch direction must be a unit vector, got {direction}"
        )));
    }
    if !cost.gradient_defined(start) {
        return Err(Error::Domain(format!(
            "ray start {start} must be at least one grid spacing inside the domain"
        )));
    }

    let mut state = RayState {
        r: start,
        p: direction * cost.sample_unchecked(start),
        s: 0.0,
    };
    let mut states = vec![state];
    while state.s < max_length {
        let step = ds.min(max_length - state.s);
        if step <= 1e-12 * ds {
            break;
        }
        let (r, p) = rk4_step(cost, state.r, state.p, step);
        if !cost.gradient_defined(r) {
            let exit_len = step * exit_fraction(cost, state.r, state.p, step, h);
            if exit_len > 0.0 {
                let (r, p) = rk4_step(cost, state.r, state.p, exit_len);
                let c = cost.sample_unchecked(r);
                states.push(RayState {
                    r,
                    p: p * (c / p.norm()),
                    s: state.s + exit_len,
                });
            }
            break;
        }
        let c = cost.sample_unchecked(r);
        state = RayState {
            r,
            p: p * (c / p.norm()),
            s: state.s + step,
        };
        states.push(state);
    }
    Ok(states)
}

/// Integrate a ray and return it as a costed trajectory.
pub fn integrate(
    cost: &ScalarField2D,
    start: Point2,
    direction: Point2,
    ds: f64,
    max_length: f64,
) -> Result<Trajectory> {
    let states = integrate_states(cost, start, direction, ds, max_length)?;
    Trajectory::from_points_dedup(states.into_iter().map(|s| s.r).collect())?.costed(cost)
}

/// Shooting parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Accepted miss distance at closest approach.
    pub tol: f64,
    /// Integration step; `None` means `h / 4`.
    pub ds: Option<f64>,
    /// Launch angle to bracket around, e.g. the initial direction of an
    /// eikonal descent ray. `None` scans [`SCAN_ANGLES`] angles.
    pub seed_angle: Option<f64>,
}

impl ShootOptions {
    pub fn new(tol: f64) -> Self {
        ShootOptions {
            tol,
            ds: None,
            seed_angle: None,
        }
    }

    pub fn seeded(mut self, angle: f64) -> Self {
        self.seed_angle = Some(angle);
        self
    }
}

/// Closest approach of a polyline to `target`.
struct Approach {
    /// Signed distance, positive when `target` lies left of the ray.
    miss: f64,
    segment: usize,
    foot: Point2,
}

fn closest_approach(points: &[Point2], target: Point2) -> Approach {
    let proj = geometry::project_onto_polyline(points, target);
    let dist = proj.foot.distance(target);
    let sign = if proj.offset >= 0.0 { 1.0 } else { -1.0 };
    Approach {
        miss: sign * dist,
        segment: proj.segment,
        foot: proj.foot,
    }
}

struct Shot {
    angle: f64,
    points: Vec<Point2>,
    approach: Approach,
}

/// Integrate a ray from `a` towards `b` and find the launch angle whose ray
/// passes within `tol` of `b`.
///
/// The ray is truncated at its closest approach to `b` and `b` is appended.
/// `a` and `b` closer than `tol` give the two-point segment between them.
pub fn shoot(cost: &ScalarField2D, a: Point2, b: Point2, opts: ShootOptions) -> Result<Trajectory> {
    let h = cost.h();
    if !(opts.tol >= 0.1 * h * (1.0 - 1e-12)) {
        return Err(Error::Parameter(format!(
            "shooting tolerance must be at least h/10 = {}, got {}",
            0.1 * h,
            opts.tol
        )));
    }
    for (label, p) in [("source", a), ("destination", b)] {
        if !cost.gradient_defined(p) {
            return Err(Error::Domain(format!(
                "shooting {label} {p} must be at least one grid spacing inside the domain"
            )));
        }
    }
    if a.distance(b) <= opts.tol {
        if a == b {
            return Ok(Trajectory::degenerate(a));
        }
        return Trajectory::new(vec![a, b])?.costed(cost);
    }
    let ds = opts.ds.unwrap_or(0.25 * h);
    let max_length = 3.0 * a.distance(b) + 10.0 * h;

    let fire = |angle: f64| -> Result<Shot> {
        let states = integrate_states(cost, a, Point2::from_angle(angle), ds, max_length)?;
        let mut points: Vec<Point2> = states.into_iter().map(|s| s.r).collect();
        if points.len() == 1 {
            points.push(points[0]);
        }
        let approach = closest_approach(&points, b);
        Ok(Shot {
            angle,
            points,
            approach,
        })
    };

    let brackets = match opts.seed_angle {
        Some(seed) => seeded_brackets(&fire, seed)?,
        None => scan_brackets(&fire)?,
    };
    if brackets.is_empty() {
        return Err(Error::Convergence(format!(
            "no launch angle from {a} brackets {b}; the target may be shadowed or reached by several branches"
        )));
    }

    let mut best: Option<Shot> = None;
    for (lo, hi) in brackets {
        let shot = bisect(&fire, lo, hi, opts.tol)?;
        if shot.approach.miss.abs() <= opts.tol {
            return finish(cost, shot, b);
        }
        if best
            .as_ref()
            .is_none_or(|s| shot.approach.miss.abs() < s.approach.miss.abs())
        {
            best = Some(shot);
        }
    }
    let best = best.expect("at least one bracket was bisected");
    Err(Error::Convergence(format!(
        "shooting from {a} to {b} missed by {} (tolerance {}) at launch angle {}",
        best.approach.miss.abs(),
        opts.tol,
        best.angle
    )))
}

fn finish(cost: &ScalarField2D, shot: Shot, b: Point2) -> Result<Trajectory> {
    let mut points: Vec<Point2> = shot.points[..=shot.approach.segment].to_vec();
    points.push(shot.approach.foot);
    points.push(b);
    Trajectory::from_points_dedup(points)?.costed(cost)
}

fn bisect(fire: &impl Fn(f64) -> Result<Shot>, lo: Shot, hi: Shot, tol: f64) -> Result<Shot> {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MAX_BISECTIONS {
        for s in [&lo, &hi] {
            if s.approach.miss.abs() <= tol {
                return fire(s.angle);
            }
        }
        let mid = fire(0.5 * (lo.angle + hi.angle))?;
        if (mid.approach.miss > 0.0) == (lo.approach.miss > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if lo.approach.miss.abs() <= hi.approach.miss.abs() {
        lo
    } else {
        hi
    })
}

/// Adjacent scan angles whose misses change sign, most promising first.
fn scan_brackets(fire: &impl Fn(f64) -> Result<Shot>) -> Result<Vec<(Shot, Shot)>> {
    let step = std::f64::consts::TAU / SCAN_ANGLES as f64;
    let shots: Vec<Shot> = (0..=SCAN_ANGLES)
        .map(|k| fire(k as f64 * step))
        .collect::<Result<_>>()?;
    let mut pairs: Vec<(usize, f64)> = shots
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0].approach.miss > 0.0) != (w[1].approach.miss > 0.0))
        .map(|(k, w)| (k, w[0].approach.miss.abs().min(w[1].approach.miss.abs())))
        .collect();
    pairs.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    let mut out = Vec::with_capacity(pairs.len());
    for (k, _) in pairs {
        out.push((fire(shots[k].angle)?, fire(shots[k + 1].angle)?));
    }
    Ok(out)
}

/// Expand symmetrically around `seed` until the miss changes sign.
fn seeded_brackets(fire: &impl Fn(f64) -> Result<Shot>, seed: f64) -> Result<Vec<(Shot, Shot)>> {
    let center = fire(seed)?;
    let positive = center.approach.miss > 0.0;
    let mut delta = 1e-3;
    while delta <= std::f64::consts::PI {
        for side in [seed + delta, seed - delta] {
            let shot = fire(side)?;
            if (shot.approach.miss > 0.0) != positive {
                let center = fire(seed)?;
                return Ok(vec![if side > seed { (center, shot) } else { (shot, center) }]);
            }
        }
        delta *= 2.0;
    }
    Ok(Vec::new())
}

/// Launch angle at the start of `traj`, measured over its first `span` of
/// arc length to smooth out the kink left by a point-source seed.
pub fn launch_angle(traj: &Trajectory, span: f64) -> f64 {
    let start = traj.start();
    let target = traj
        .points()
        .iter()
        .find(|p| p.distance(start) >= span)
        .copied()
        .unwrap_or(traj.end());
    (target - start).angle()
}
