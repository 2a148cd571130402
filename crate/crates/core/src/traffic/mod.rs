//! Communication-constrained traffic control.
//!
//! A BS serving AVs over slotted TDD MIMO spends airtime on uplink pilots,
//! whose rate grows with Doppler and hence speed, and on grouped downlink
//! messages. That budget bounds the AVs one channel controls
//! ([`n_controllable_one_channel`]), which gives a flow-maximising speed
//! ([`optimal_speed`]). Across cells, [`balance_spectrum`] equalises flow
//! along each road so no cell is a bottleneck.
//!
//! Flows are in AVs per second.

mod kpi;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kpi::{
    airtime, cell_sum_flow, n_controllable, n_controllable_one_channel, optimal_speed, scan_flow_factor,
    CellGeometry, GridScan, OptimalSpeed, TddConfig,
};
pub use spectrum::{
    apply_policy, balance_spectrum, balance_with_speeds, cell_speeds, equal_split, flow_coefficients,
    road_throughput, shift_balance, two_cell_fixture, ControlPolicy, CrossRoadPolicy, Road, RoadCellIncidence,
    RoadFlow, RoadSection, SectionAllocation, SpectrumAllocation, SpeedRule, TrafficCell,
};

/// Minimum reliability, rate (Mbps) and latency (s) for one level of
/// automation. These act on control only through the TDD parameters they
/// are translated into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommRequirements {
    pub reliability: f64,
    pub rate: f64,
    pub latency: f64,
}

impl CommRequirements {
    pub fn validate(&self) -> Result<()> {
        if !(self.reliability > 0.0 && self.reliability <= 1.0) {
            return Err(Error::param("reliability", "must lie in (0, 1]"));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::param("rate", "must be positive"));
        }
        if !(self.latency > 0.0 && self.latency.is_finite()) {
            return Err(Error::param("latency", "must be positive"));
        }
        Ok(())
    }
}
