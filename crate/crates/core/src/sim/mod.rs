//! Monte-Carlo experiments over routing schemes and traffic-control sweeps.
//!
//! Every trial draws a fresh effective speed map, plans one route per
//! scheme and drives it, checking the rate every `tau` seconds. Trials run
//! in parallel; each trial's randomness comes from [`derive_seed`], so
//! results do not depend on scheduling.

mod cdf;
mod monte_carlo;
mod output;
mod sweep;
mod trip;

pub use cdf::CdfSeries;
pub use monte_carlo::{
    derive_seed, place_stations, run_monte_carlo, Endpoints, GridConfig, MonteCarloResult, Placement, Scenario,
    SchemeSummary, StationLayout, TrialConfig, TrialResult, DESK_GAMMA,
};
pub use output::{
    cfg_hash, render_table, write_atomic, write_bs_sweep, write_gamma_sweep, write_monte_carlo, write_table,
    write_traffic_sweep, Format, Provenance,
};
pub use sweep::{
    default_alpha_values, default_carrier_values, default_message_load_values, sweep_routing, sweep_traffic,
    RoutingRow, SweepAxis, TrafficRow, TrafficSweepConfig,
};
pub use trip::{Accounting, TripMetrics, TripSimulator};
