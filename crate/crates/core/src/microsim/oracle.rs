use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::forward::Route;
use super::network::NetworkRealization;
use crate::costmodels::HopCostKind;
use crate::error::{Error, Result};

/// Default edge length limit for [`shortest_path`]: four times the mean
/// hop distance `sqrt(2 / lambda_min)` for the quadratic cost, or sixteen
/// times the optimal hop length for the energy cost.
pub fn default_max_edge(net: &NetworkRealization, kind: &HopCostKind) -> f64 {
    match kind.optimal_hop() {
        Some(d_opt) => 16.0 * d_opt,
        None => 4.0 * (2.0 / net.density().min()).sqrt(),
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    hops: usize,
    node: usize,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: the heap pops the cheapest, then fewest hops.
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-cost node path from `src` to `dst` over edges no longer than
/// `max_edge`, each weighted by the hop cost of its length.
///
/// Weights are nonnegative, so Dijkstra's label-setting search gives the
/// same optimum as Bellman-Ford. Equal costs prefer fewer hops, then the
/// lower predecessor index.
pub fn shortest_path(
    net: &NetworkRealization,
    kind: &HopCostKind,
    src: usize,
    dst: usize,
    max_edge: f64,
) -> Result<Route> {
    kind.validate()?;
    let n = net.len();
    for (label, k) in [("source", src), ("destination", dst)] {
        if k >= n {
            return Err(Error::Parameter(format!("{label} node {k} does not exist ({n} nodes)")));
        }
    }
    if src == dst {
        return Err(Error::Parameter(format!(
            "source and destination are the same node {src}"
        )));
    }
    if !(max_edge > 0.0) {
        return Err(Error::Parameter(format!("max edge length must be > 0, got {max_edge}")));
    }

    let mut cost = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    cost[src] = 0.0;
    hops[src] = 0;
    heap.push(Label {
        cost: 0.0,
        hops: 0,
        node: src,
    });

    let mut neighbors = Vec::new();
    while let Some(Label {
        cost: c,
        hops: h,
        node: u,
    }) = heap.pop()
    {
        if done[u] || c != cost[u] || h != hops[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        let pu = net.node(u);
        neighbors.clear();
        if max_edge.is_finite() {
            net.for_each_within(pu, max_edge, |v| neighbors.push(v));
        } else {
            neighbors.extend(0..n);
        }
        for &v in &neighbors {
            if v == u || done[v] {
                continue;
            }
            let nc = c + kind.cost(pu.distance(net.node(v)));
            let nh = h + 1;
            let better = match nc.total_cmp(&cost[v]) {
                Ordering::Less => true,
                Ordering::Equal => nh < hops[v] || (nh == hops[v] && u < pred[v]),
                Ordering::Greater => false,
            };
            if better {
                cost[v] = nc;
                hops[v] = nh;
                pred[v] = u;
                heap.push(Label {
                    cost: nc,
                    hops: nh,
                    node: v,
                });
            }
        }
    }

    if !done[dst] {
        return Err(Error::Unreachable(format!(
            "node {dst} is unreachable from node {src} with edges up to {max_edge} m; try a larger max edge"
        )));
    }
    let mut path = vec![dst];
    while *path.last().unwrap() != src {
        path.push(pred[*path.last().unwrap()]);
    }
    path.reverse();
    let hop_costs = path
        .windows(2)
        .map(|w| kind.cost(net.node(w[0]).distance(net.node(w[1]))))
        .collect();
    Ok(Route::from_nodes(path, hop_costs, true))
}
