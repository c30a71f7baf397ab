use super::EikonalSolution;
use crate::error::{Error, Result};
use crate::field::{ScalarField2D, Trajectory};
use crate::geometry::Point2;

/// Gradient magnitude below which descent is considered stuck.
const STALL_GRADIENT: f64 = 1e-9;

/// Relative second difference (in units of `c h`) that marks a ridge of
/// `S` along one axis, i.e. a line where two distinct optimal routes meet.
const RIDGE_KINK: f64 = 0.05;

/// Descent direction of `S` at `p`: the central-difference gradient,
/// except across a ridge where that gradient cancels. There the one-sided
/// difference of the steeper side is used (the `+` side on exact ties), so
/// descent leaves the ridge along one of the optimal routes.
pub(crate) fn descent_gradient(s: &ScalarField2D, p: Point2, c_local: f64) -> (f64, f64) {
    let (mut gx, mut gy) = s.gradient_unchecked(p);
    let h = s.h();
    let half = 0.5 * h;
    let here = s.sample_unchecked(p);
    let axis = |g: &mut f64, e: Point2| {
        let plus = s.sample_unchecked(p + e * half);
        let minus = s.sample_unchecked(p - e * half);
        let (drop_plus, drop_minus) = (here - plus, here - minus);
        if drop_plus > 0.0 && drop_minus > 0.0 && drop_plus + drop_minus > RIDGE_KINK * c_local * h {
            *g = if drop_plus >= drop_minus {
                -drop_plus / half
            } else {
                drop_minus / half
            };
        }
    };
    axis(&mut gx, Point2::new(1.0, 0.0));
    axis(&mut gy, Point2::new(0.0, 1.0));
    (gx, gy)
}

/// Clamp into the rectangle one grid spacing inside the domain, where the
/// gradient is defined. Routes that press against the boundary slide along
/// it.
fn clamp_inset(s: &ScalarField2D, p: Point2) -> Point2 {
    let spec = s.spec();
    let h = spec.h;
    Point2::new(
        p.x.clamp(spec.x_min + h, spec.x_max() - h),
        p.y.clamp(spec.y_min + h, spec.y_max() - h),
    )
}

/// Follow `-grad S` from `from` back to the source with fixed `step`.
///
/// Descent stops once `S < c_local * step` and joins the nearest source
/// point. Steps that would leave the band one grid spacing inside the
/// boundary are clamped back into it. The returned trajectory runs source to `from`, and its optical
/// length is the line integral of the solution's cost field.
pub fn trace_descent_ray(sol: &EikonalSolution, from: Point2, step: f64) -> Result<Trajectory> {
    let s = sol.field();
    let cost = sol.cost();
    let h = s.h();
    if !(step > 0.0 && step <= 0.5 * h * (1.0 + 1e-12)) {
        return Err(Error::Parameter(format!(
            "descent step must lie in (0, h/2 = {}], got {step}",
            0.5 * h
        )));
    }
    let s_from = s.sample(from)?;
    let c_min = cost.min();
    let max_steps = (4.0 * s_from / (c_min * step)).ceil() as usize + 10_000;

    let mut path = vec![from];
    let mut p = from;
    let mut value = s_from;
    loop {
        let c_local = cost.sample(p)?;
        if value < c_local * step {
            break;
        }
        if path.len() > max_steps {
            return Err(Error::Convergence(format!(
                "descent from {from} did not reach the source within {max_steps} steps (last at {p}, S = {value})"
            )));
        }
        if !s.gradient_defined(p) {
            return Err(Error::OutOfDomain {
                point: p,
                reason: "descent must start at least one grid spacing inside the boundary".into(),
            });
        }
        let (gx, gy) = descent_gradient(s, p, c_local);
        let norm = gx.hypot(gy);
        if !(norm >= STALL_GRADIENT) {
            return Err(Error::Convergence(format!(
                "descent stalled at {p}: |grad S| = {norm:e}"
            )));
        }
        let free = Point2::new(p.x - step * gx / norm, p.y - step * gy / norm);
        let next = clamp_inset(s, free);
        let next_value = s.sample(next)?;
        if next != free && !(next_value < value) {
            return Err(Error::Convergence(format!(
                "descent stalled against the grid boundary at {p} (S = {value})"
            )));
        }
        p = next;
        value = next_value;
        path.push(p);
    }

    let anchor = sol.source().nearest_point(p);
    path.push(anchor);
    path.reverse();
    path.dedup();
    if path.len() < 2 {
        return Ok(Trajectory::degenerate(from));
    }
    Trajectory::new(path)?.costed(cost)
}
