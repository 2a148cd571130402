//! Route planning under coverage constraints.
//!
//! [`two_layer_route`] plans over the graph of γ-rate cells and stitches
//! per-cell shortest paths at core nodes. The greedy walks and the
//! unconstrained shortest-time route are the baselines it is compared with;
//! [`oracle_constrained_shortest`] is a plain Dijkstra over every usable
//! segment, used to cross-check the two-layer planner.

mod graph;
mod greedy;
mod intra;
mod oracle;
mod route;
mod shortest;
mod top;
mod two_layer;

pub use graph::{dijkstra, ShortestPaths};
pub use greedy::{default_max_segments, greedy_route_cc, greedy_route_no_cc};
pub(crate) use greedy::greedy_cc_with_index;
pub use intra::{intra_cell_times, CellGraph, IntraTimes, PointKey};
pub use oracle::{oracle_constrained_shortest, CoverageIndex};
pub use route::{times_equal, Direction, Route, Scheme, Traversal, TIME_RTOL};
pub use shortest::shortest_time_route;
pub use top::{build_top_layer, enumerate_top_paths, TopLayerGraph, TopPath};
pub use two_layer::{
    gamma_schedule, route_in_cells, two_layer_route, TopLayerSearch, TwoLayerOptions, TwoLayerParams,
};
