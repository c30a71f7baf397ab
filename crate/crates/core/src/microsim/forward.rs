use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::network::NetworkRealization;
use crate::costmodels::HopCostKind;
use crate::error::{Error, Result};
use crate::field::Trajectory;
use crate::geometry::{self, Point2, Projection};

/// Next-hop selection rule for trajectory-based forwarding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// Minimize cost per unit of progress.
    A,
    /// As `A`, but never move further from the trajectory on the same
    /// side.
    B,
}

/// A node path through a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub node_indices: Vec<usize>,
    pub hop_costs: Vec<f64>,
    pub total_cost: f64,
    /// False when forwarding stopped at a node with no admissible
    /// neighbor.
    pub reached: bool,
}

impl Route {
    pub(crate) fn from_nodes(node_indices: Vec<usize>, hop_costs: Vec<f64>, reached: bool) -> Self {
        let total_cost = hop_costs.iter().sum();
        Route {
            node_indices,
            hop_costs,
            total_cost,
            reached,
        }
    }

    pub fn hops(&self) -> usize {
        self.hop_costs.len()
    }

    pub fn points(&self, net: &NetworkRealization) -> Vec<Point2> {
        self.node_indices.iter().map(|&k| net.node(k)).collect()
    }

    /// Largest unsigned distance of a route node from `traj`.
    pub fn max_deviation(&self, net: &NetworkRealization, traj: &Trajectory) -> f64 {
        self.node_indices
            .iter()
            .map(|&k| {
                let p = net.node(k);
                geometry::project_onto_polyline(traj.points(), p).foot.distance(p)
            })
            .fold(0.0, f64::max)
    }
}

/// Radius within which the destination counts as reached.
pub fn capture_radius(lambda: f64) -> f64 {
    2.0 / lambda.sqrt()
}

/// Initial neighbor search radius at local density `lambda`.
pub fn candidate_radius(lambda: f64, kind: &HopCostKind) -> f64 {
    let mean_hop = (2.0 / lambda).sqrt();
    5.0 * match kind.optimal_hop() {
        Some(d_opt) => d_opt.max(mean_hop),
        None => mean_hop,
    }
}

/// Times the search radius is doubled before declaring a dead end.
const RADIUS_EXPANSIONS: usize = 3;

/// Greedy trajectory-based forwarding from node `start` towards `dest`.
///
/// Progress is the arc length of a node's projection onto the trajectory.
/// Each hop goes to the candidate with positive progress and the smallest
/// hop cost per unit progress, ties to the lower index. Forwarding ends
/// when the current node is within [`capture_radius`] of `dest`, or at a
/// dead end (`reached == false`).
pub fn forward(
    net: &NetworkRealization,
    traj: &Trajectory,
    start: usize,
    dest: Point2,
    rule: Rule,
    kind: &HopCostKind,
) -> Result<Route> {
    kind.validate()?;
    if start >= net.len() {
        return Err(Error::Parameter(format!(
            "start node {start} does not exist ({} nodes)",
            net.len()
        )));
    }
    let head = traj.start();
    let head_capture = capture_radius(net.local_density(head));
    if net.node(start).distance(head) > head_capture {
        return Err(Error::Parameter(format!(
            "start node {start} at {} is farther than {head_capture} from the trajectory start {head}",
            net.node(start)
        )));
    }

    let mut projections: HashMap<usize, Projection> = HashMap::new();
    let mut project = |k: usize| -> Projection {
        *projections
            .entry(k)
            .or_insert_with(|| geometry::project_onto_polyline(traj.points(), net.node(k)))
    };

    let mut nodes = vec![start];
    let mut hop_costs = Vec::new();
    let mut current = start;
    // A route cannot revisit a node since progress strictly increases.
    for _ in 0..=net.len() {
        let here = net.node(current);
        let lambda = net.local_density(here);
        if here.distance(dest) <= capture_radius(lambda) {
            return Ok(Route::from_nodes(nodes, hop_costs, true));
        }
        let at = project(current);
        let mut radius = candidate_radius(lambda, kind);
        let mut choice: Option<(f64, usize, f64)> = None;
        for _ in 0..=RADIUS_EXPANSIONS {
            for k in net.within(here, radius) {
                if k == current {
                    continue;
                }
                let cand = project(k);
                let progress = cand.arc - at.arc;
                if !(progress > 0.0) {
                    continue;
                }
                if rule == Rule::B
                    && at.offset != 0.0
                    && cand.offset.signum() == at.offset.signum()
                    && cand.offset.abs() > at.offset.abs()
                {
                    continue;
                }
                let cost = kind.cost(here.distance(net.node(k)));
                let ratio = cost / progress;
                if choice.is_none_or(|(best, _, _)| ratio < best) {
                    choice = Some((ratio, k, cost));
                }
            }
            if choice.is_some() {
                break;
            }
            radius *= 2.0;
        }
        match choice {
            Some((_, k, cost)) => {
                nodes.push(k);
                hop_costs.push(cost);
                current = k;
            }
            None => return Ok(Route::from_nodes(nodes, hop_costs, false)),
        }
    }
    unreachable!("progress strictly increases, so no node is visited twice")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldKind, GridSpec, ScalarField2D};
    use std::sync::Arc;

    fn network(nodes: Vec<Point2>, lambda: f64) -> NetworkRealization {
        let spec = GridSpec::from_extent(-10.0, 10.0, -10.0, 10.0, 1.0).unwrap();
        let density = Arc::new(ScalarField2D::constant(spec, FieldKind::Density, lambda).unwrap());
        NetworkRealization::from_nodes(nodes, density, 0).unwrap()
    }

    fn x_axis(to: f64) -> Trajectory {
        Trajectory::new(vec![Point2::new(0.0, 0.0), Point2::new(to, 0.0)]).unwrap()
    }

    #[test]
    fn collinear_nodes_relay() {
        let net = network(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)],
            100.0,
        );
        for rule in [Rule::A, Rule::B] {
            let route = forward(
                &net,
                &x_axis(2.0),
                0,
                Point2::new(2.0, 0.0),
                rule,
                &HopCostKind::Quadratic,
            )
            .unwrap();
            assert_eq!(route.node_indices, vec![0, 1, 2]);
            assert_eq!(route.hop_costs, vec![1.0, 1.0]);
            assert_eq!(route.total_cost, 2.0);
            assert!(route.reached);
        }
    }

    #[test]
    fn on_trajectory_node_admits_either_side() {
        let net = network(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.5), Point2::new(2.0, 0.0)],
            100.0,
        );
        let dest = Point2::new(2.0, 0.0);
        let a = forward(&net, &x_axis(2.0), 0, dest, Rule::A, &HopCostKind::Quadratic).unwrap();
        let b = forward(&net, &x_axis(2.0), 0, dest, Rule::B, &HopCostKind::Quadratic).unwrap();
        assert_eq!(a.node_indices[1], 1);
        assert_eq!(b.node_indices[1], 1);
    }

    #[test]
    fn rule_b_keeps_close_to_trajectory() {
        let nodes = vec![Point2::new(0.0, 0.3), Point2::new(1.0, 0.6), Point2::new(1.2, -0.2)];
        let net = network(nodes, 10.0);
        let traj = Trajectory::new(vec![Point2::new(0.0, 0.0), Point2::new(8.0, 0.0)]).unwrap();
        let dest = Point2::new(8.0, 0.0);
        let b = forward(&net, &traj, 0, dest, Rule::B, &HopCostKind::Quadratic).unwrap();
        assert_eq!(b.node_indices, vec![0, 2]);
        // Rule A takes the cheaper ratio 1.09 / 1.0 over 1.69 / 1.2.
        let a = forward(&net, &traj, 0, dest, Rule::A, &HopCostKind::Quadratic).unwrap();
        assert_eq!(a.node_indices[1], 1);
        assert!(!a.reached && !b.reached);
    }

    #[test]
    fn start_far_from_trajectory_is_rejected() {
        let net = network(vec![Point2::new(5.0, 5.0), Point2::new(6.0, 5.0)], 1.0);
        assert!(matches!(
            forward(
                &net,
                &x_axis(8.0),
                0,
                Point2::new(8.0, 0.0),
                Rule::B,
                &HopCostKind::Quadratic
            ),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn dead_end_is_reported() {
        let net = network(vec![Point2::new(0.0, 0.0), Point2::new(-1.0, 0.0)], 100.0);
        let route = forward(
            &net,
            &x_axis(8.0),
            0,
            Point2::new(8.0, 0.0),
            Rule::B,
            &HopCostKind::Quadratic,
        )
        .unwrap();
        assert!(!route.reached);
        assert_eq!(route.node_indices, vec![0]);
        assert_eq!(route.total_cost, 0.0);
    }
}
