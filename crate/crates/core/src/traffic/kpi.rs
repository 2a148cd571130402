use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the per-channel time budget, absorbing float rounding
/// when a configuration fills the budget exactly.
const BUDGET_SLACK: f64 = 1e-9;

/// Slotted TDD MIMO parameters of one cell. Times in seconds, frequencies
/// in hertz, speeds in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TddConfig {
    pub t_slot: f64,
    pub t_pilot: f64,
    /// Duration of one downlink message.
    pub t_m: f64,
    /// Message repetition rate per AV.
    pub lambda_m: f64,
    /// MIMO user group size L.
    pub group_size: u32,
    /// Pilot oversampling factor over the Doppler frequency.
    pub alpha: f64,
    pub carrier_frequency: f64,
    #[serde(default = "default_c")]
    pub speed_of_light: f64,
    /// `None` means no speed limit.
    #[serde(default)]
    pub speed_limit: Option<f64>,
    /// Hard cap on AVs per channel; defaults to `10 * group_size`.
    #[serde(default)]
    pub max_avs_per_channel: Option<u32>,
    /// Channel count B_m below which the KPI is linear in B; `None` means
    /// linearity is assumed everywhere.
    #[serde(default)]
    pub linear_channel_limit: Option<f64>,
}

fn default_c() -> f64 {
    3e8
}

impl Default for TddConfig {
    fn default() -> Self {
        TddConfig {
            t_slot: 0.5e-3,
            t_pilot: 0.5e-3,
            t_m: 25e-3,
            lambda_m: 10.0,
            group_size: 10,
            alpha: 2.0,
            carrier_frequency: 1e9,
            speed_of_light: default_c(),
            speed_limit: None,
            max_avs_per_channel: None,
            linear_channel_limit: None,
        }
    }
}

impl TddConfig {
    /// Sets `t_m` so that `lambda_m * t_m` equals `load`, keeping `lambda_m`.
    pub fn with_message_load(mut self, load: f64) -> Self {
        self.t_m = load / self.lambda_m;
        self
    }

    /// Fraction of airtime one group of AVs spends on downlink messages.
    pub fn message_load(&self) -> f64 {
        self.lambda_m * self.t_m
    }

    pub fn cap(&self) -> u32 {
        self.max_avs_per_channel.unwrap_or(10 * self.group_size)
    }

    /// Maximum pilot interval T_v at speed `v`; infinite at rest.
    pub fn pilot_interval(&self, v: f64) -> f64 {
        self.speed_of_light / (self.alpha * v * self.carrier_frequency)
    }

    /// Fraction of airtime one AV at speed `v` spends on pilots.
    pub fn pilot_load(&self, v: f64) -> f64 {
        self.t_pilot * self.alpha * v * self.carrier_frequency / self.speed_of_light
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_slot", self.t_slot),
            ("t_pilot", self.t_pilot),
            ("t_m", self.t_m),
            ("lambda_m", self.lambda_m),
            ("carrier_frequency", self.carrier_frequency),
            ("speed_of_light", self.speed_of_light),
        ];
        for (name, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {x}")));
            }
        }
        if self.group_size == 0 {
            return Err(Error::param("group_size", "must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::param("alpha", format!("must exceed 1, got {}", self.alpha)));
        }
        if self.message_load() >= 1.0 {
            return Err(Error::param(
                "lambda_m",
                format!("lambda_m * t_m must be below 1, got {}", self.message_load()),
            ));
        }
        let slots = self.t_m / self.t_slot;
        if (slots - slots.round()).abs() > 1e-6 * slots.max(1.0) || slots.round() < 1.0 {
            return Err(Error::param("t_m", "must be a whole number of slots"));
        }
        if let Some(vl) = self.speed_limit {
            if !(vl > 0.0) {
                return Err(Error::param("speed_limit", "must be positive"));
            }
        }
        if self.max_avs_per_channel == Some(0) {
            return Err(Error::param("max_avs_per_channel", "must be at least 1"));
        }
        if let Some(bm) = self.linear_channel_limit {
            if !(bm > 0.0) {
                return Err(Error::param("linear_channel_limit", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Airtime fraction used by `n` AVs at speed `v` on one channel.
pub fn airtime(n: u32, v: f64, tdd: &TddConfig) -> f64 {
    let groups = n.div_ceil(tdd.group_size);
    n as f64 * tdd.pilot_load(v) + groups as f64 * tdd.message_load()
}

/// Largest number of AVs at speed `v` one channel can serve: the largest N
/// whose pilots and grouped messages fit in the airtime, capped at
/// `max_avs_per_channel`. Zero once a single AV no longer fits.
pub fn n_controllable_one_channel(v: f64, tdd: &TddConfig) -> u32 {
    let fits = |n: u32| airtime(n, v, tdd) <= 1.0 + BUDGET_SLACK;
    // airtime is non-decreasing in n, so bisect on [0, cap].
    let (mut lo, mut hi) = (0u32, tdd.cap());
    if fits(hi) {
        return hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// AVs controllable with `channels` channels, fractional channels scaling
/// linearly before flooring.
pub fn n_controllable(v: f64, channels: f64, tdd: &TddConfig) -> u64 {
    if channels <= 0.0 {
        return 0;
    }
    if let Some(bm) = tdd.linear_channel_limit {
        if channels > bm {
            log::warn!("{channels} channels exceed the linearity limit {bm}");
        }
    }
    let per = n_controllable_one_channel(v, tdd) as f64;
    (channels * per * (1.0 + 1e-12)).floor() as u64
}

/// Lanes, lane width (m) and road surface (m²) covered by one BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellGeometry {
    pub lanes: u32,
    pub lane_width: f64,
    pub coverage: f64,
    /// Smallest physically sensible spacing between AVs, meters.
    #[serde(default)]
    pub min_spacing: Option<f64>,
}

impl CellGeometry {
    pub fn new(lanes: u32, lane_width: f64, coverage: f64) -> Self {
        CellGeometry {
            lanes,
            lane_width,
            coverage,
            min_spacing: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 {
            return Err(Error::param("lanes", "must be at least 1"));
        }
        if !(self.lane_width.is_finite() && self.lane_width > 0.0) {
            return Err(Error::param("lane_width", "must be positive"));
        }
        if !(self.coverage.is_finite() && self.coverage > 0.0) {
            return Err(Error::param("coverage", "must be positive"));
        }
        Ok(())
    }

    /// Total lane length in the cell.
    pub fn lane_length(&self) -> f64 {
        self.coverage / self.lane_width
    }
}

/// Cell sum traffic flow in AVs per second: `(lanes * W / C) * n * v`.
pub fn cell_sum_flow(geom: &CellGeometry, n: f64, v: f64) -> f64 {
    if let Some(min) = geom.min_spacing {
        let spacing = geom.lane_length() / n;
        if n > 0.0 && spacing < min {
            log::warn!("implied AV spacing {spacing:.2} m is below the minimum {min} m");
        }
    }
    geom.lanes as f64 * geom.lane_width / geom.coverage * n * v
}

/// Flow-maximising speed of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSpeed {
    pub speed: f64,
    /// AVs per channel at `speed`.
    pub avs: u32,
    /// `avs * speed`: flow per channel per unit of `lanes * W / C`.
    pub flow_factor: f64,
}

/// Closed-form optimum `v* = min(v_l, c (1 - λT) / (α f_c T_pilot L))`.
pub fn optimal_speed(tdd: &TddConfig) -> OptimalSpeed {
    let unclamped = tdd.speed_of_light * (1.0 - tdd.message_load())
        / (tdd.alpha * tdd.carrier_frequency * tdd.t_pilot * tdd.group_size as f64);
    let speed = match tdd.speed_limit {
        Some(vl) => unclamped.min(vl),
        None => unclamped,
    };
    let avs = n_controllable_one_channel(speed, tdd);
    OptimalSpeed {
        speed,
        avs,
        flow_factor: avs as f64 * speed,
    }
}

/// Result of scanning `n * v` over a speed grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScan {
    /// Lowest grid speed `v` whose cell `[v, v + step)` could hold the
    /// maximum, i.e. `n (v + step)` exceeds the grid maximum.
    pub argmax: f64,
    pub max_flow_factor: f64,
}

/// Scans `v = step, 2 step, ..., v_max` (and the speed limit, if any).
///
/// Every speed `v* L / N` for `N = 1..=L` attains the same continuous
/// maximum, so the plain grid argmax drifts toward the top of that tie set.
/// Reporting the lowest near-maximal grid speed picks out `v*` itself.
pub fn scan_flow_factor(tdd: &TddConfig, step: f64, v_max: f64) -> GridScan {
    let limit = tdd.speed_limit.unwrap_or(f64::INFINITY);
    let steps = (v_max / step).floor() as u64;
    let values: Vec<(f64, f64)> = (1..=steps)
        .map(|k| k as f64 * step)
        .filter(|&v| v <= limit)
        .map(|v| (v, n_controllable_one_channel(v, tdd) as f64))
        .collect();
    let max = values.iter().map(|&(v, n)| n * v).fold(0.0, f64::max);
    let argmax = values
        .iter()
        .find(|&&(v, n)| n > 0.0 && n * (v + step) > max * (1.0 + 1e-12))
        .map_or(0.0, |&(v, _)| v);
    GridScan {
        argmax,
        max_flow_factor: max,
    }
}
