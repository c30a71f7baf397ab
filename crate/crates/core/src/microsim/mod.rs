//! Microscopic networks: Poisson deployments, trajectory-based forwarding
//! and the shortest-path oracle.

mod compare;
mod forward;
mod network;
mod oracle;

pub use compare::{compare, compare_prepared, prepare_trajectories, Comparison, ComparisonReport, Trajectories};
pub use forward::{candidate_radius, capture_radius, forward, Route, Rule};
pub use network::{sample_network, NetworkRealization};
pub use oracle::{default_max_edge, shortest_path};

pub use crate::costmodels::hop_stats_mc;
