use serde::{Deserialize, Serialize};

use super::forward::{forward, Route, Rule};
use super::network::NetworkRealization;
use super::oracle::{default_max_edge, shortest_path};
use crate::costmodels::HopCostKind;
use crate::eikonal::{solve_with, trace_descent_ray, SolveOptions, SourceSet};
use crate::error::{Result, ResultExt};
use crate::field::{GridSpec, ScalarField2D, Trajectory};
use crate::geometry::Point2;

/// The two macroscopic curves between `a` and `b`; independent of the
/// network realization.
#[derive(Debug, Clone)]
pub struct Trajectories {
    pub a: Point2,
    pub b: Point2,
    pub straight: Trajectory,
    pub optics: Trajectory,
}

/// Build the straight segment and the eikonal descent route from `a` to
/// `b`, both costed on `cost`.
pub fn prepare_trajectories(cost: &ScalarField2D, a: Point2, b: Point2, opts: &SolveOptions) -> Result<Trajectories> {
    let straight = Trajectory::new(vec![a, b])
        .and_then(|t| t.costed(cost))
        .context("straight line")?;
    let optics = solve_with(cost, &SourceSet::Point(a), opts)
        .and_then(|sol| trace_descent_ray(&sol, b, 0.5 * cost.h()))
        .context("optics trajectory")?;
    Ok(Trajectories { a, b, straight, optics })
}

/// Costs of the five comparison artifacts for one network realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub grid: GridSpec,
    pub cost_kind: HopCostKind,
    pub nodes: usize,
    pub src_node: usize,
    pub dst_node: usize,
    /// Line integral of the cost field along the straight segment.
    pub straight_optical_length: f64,
    /// Line integral of the cost field along the optics trajectory.
    pub optics_optical_length: f64,
    pub tbf_straight_cost: f64,
    pub tbf_straight_hops: usize,
    pub tbf_straight_reached: bool,
    pub tbf_optics_cost: f64,
    pub tbf_optics_hops: usize,
    pub tbf_optics_reached: bool,
    pub oracle_cost: f64,
    pub oracle_hops: usize,
    pub max_edge: f64,
}

impl ComparisonReport {
    /// All three node routes completed.
    pub fn complete(&self) -> bool {
        self.tbf_straight_reached && self.tbf_optics_reached
    }

    /// Oracle <= TBF on optics <= TBF on the straight line.
    pub fn ordered(&self) -> bool {
        self.oracle_cost <= self.tbf_optics_cost && self.tbf_optics_cost <= self.tbf_straight_cost
    }
}

/// Node routes of one comparison.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub tbf_straight: Route,
    pub tbf_optics: Route,
    pub oracle: Route,
}

/// Run Rule B forwarding along both trajectories and the shortest-path
/// oracle between the nodes nearest `a` and `b`.
pub fn compare_prepared(
    net: &NetworkRealization,
    traj: &Trajectories,
    kind: &HopCostKind,
    max_edge: Option<f64>,
) -> Result<Comparison> {
    let src = net.nearest(traj.a).context("source node")?;
    let dst = net.nearest(traj.b).context("destination node")?;
    let tbf_straight = forward(net, &traj.straight, src, traj.b, Rule::B, kind).context("TBF on straight line")?;
    let tbf_optics = forward(net, &traj.optics, src, traj.b, Rule::B, kind).context("TBF on optics trajectory")?;
    let max_edge = max_edge.unwrap_or_else(|| default_max_edge(net, kind));
    let oracle = shortest_path(net, kind, src, dst, max_edge).context("optimal route")?;
    let report = ComparisonReport {
        seed: net.seed(),
        grid: *net.density().spec(),
        cost_kind: *kind,
        nodes: net.len(),
        src_node: src,
        dst_node: dst,
        straight_optical_length: traj.straight.optical_length,
        optics_optical_length: traj.optics.optical_length,
        tbf_straight_cost: tbf_straight.total_cost,
        tbf_straight_hops: tbf_straight.hops(),
        tbf_straight_reached: tbf_straight.reached,
        tbf_optics_cost: tbf_optics.total_cost,
        tbf_optics_hops: tbf_optics.hops(),
        tbf_optics_reached: tbf_optics.reached,
        oracle_cost: oracle.total_cost,
        oracle_hops: oracle.hops(),
        max_edge,
    };
    Ok(Comparison {
        report,
        tbf_straight,
        tbf_optics,
        oracle,
    })
}

/// [`prepare_trajectories`] followed by [`compare_prepared`].
pub fn compare(
    net: &NetworkRealization,
    cost: &ScalarField2D,
    kind: &HopCostKind,
    a: Point2,
    b: Point2,
    opts: &SolveOptions,
) -> Result<(Trajectories, Comparison)> {
    let traj = prepare_trajectories(cost, a, b, opts)?;
    let cmp = compare_prepared(net, &traj, kind, None)?;
    Ok((traj, cmp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodels::{build_cost_field, CostModel};
    use crate::field::FieldKind;
    use crate::microsim::sample_network;
    use std::sync::Arc;

    #[test]
    fn homogeneous_density_gives_matching_routes() {
        let spec = GridSpec::from_extent(-30.0, 30.0, -10.0, 110.0, 1.0).unwrap();
        let density = Arc::new(ScalarField2D::constant(spec, FieldKind::Density, 0.2).unwrap());
        let cost = build_cost_field(&density, &CostModel::bandwidth()).unwrap();
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(0.0, 100.0);
        let traj = prepare_trajectories(&cost, a, b, &SolveOptions::default()).unwrap();
        assert!(traj.optics.max_separation(&traj.straight) <= cost.h());
        let mut gaps = Vec::new();
        for seed in 0..20 {
            let net = sample_network(density.clone(), seed).unwrap();
            let cmp = compare_prepared(&net, &traj, &HopCostKind::Quadratic, None).unwrap();
            let r = &cmp.report;
            assert!(r.complete());
            assert!(r.oracle_cost <= r.tbf_optics_cost.min(r.tbf_straight_cost));
            gaps.push((r.tbf_optics_cost - r.tbf_straight_cost) / r.tbf_straight_cost);
        }
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(mean_gap.abs() < 0.05, "mean relative gap {mean_gap}");
    }

    #[test]
    fn errors_name_the_artifact() {
        let spec = GridSpec::from_extent(0.0, 10.0, 0.0, 10.0, 1.0).unwrap();
        let density = Arc::new(ScalarField2D::constant(spec, FieldKind::Density, 1.0).unwrap());
        let cost = build_cost_field(&density, &CostModel::bandwidth()).unwrap();
        let err = prepare_trajectories(
            &cost,
            Point2::new(5.0, 5.0),
            Point2::new(9.9, 5.0),
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("optics trajectory"), "{err}");
    }
}
