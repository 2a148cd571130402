//! Communication-constrained routing and traffic control for connected
//! autonomous vehicles.
//!
//! The crate is organised around five modules:
//!
//! - [`net`]: road-network graph, grid generator and effective speed map.
//! - [`radio`]: propagation/rate model and γ-rate cells with their core nodes.
//! - [`routing`]: two-layer cell routing, greedy baselines, shortest-time
//!   baseline and a brute-force constrained oracle.
//! - [`traffic`]: per-cell controllable-AV KPI, optimal speed and spectrum
//!   balancing across cells.
//! - [`sim`]: Monte-Carlo harness, sweeps and CSV/JSON emission.

pub mod error;
pub mod net;
pub mod radio;
pub mod routing;
pub mod sim;
pub mod traffic;

pub use error::{Error, Result};
