//! Downlink rate model and γ-rate cells.
//!
//! The rate at a point is a Shannon rate over the channel bandwidth with
//! log-distance path loss, log-normal shadowing and a Doppler penalty:
//!
//! ```text
//! SNR_ε(d)  = P_tx − PL(d) − N_0 + σ·Φ⁻¹(ε)          [dB]
//! R_ε(d, v) = B·log2(1 + SNR_ε) / (1 + k·f_D(v)·τ)    f_D = v·f_c / c
//! ```
//!
//! `R_ε` is the rate exceeded with probability `1 − ε`. Because every term is
//! monotone the model can be inverted for a coverage radius, which is what the
//! trip simulator and the cell pruning use.

mod cell;
mod connectivity;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::net::{Point, RoadNetwork};

pub use cell::{compute_gamma_cell, CellBuilder, EvalSpeed, GammaRateCell, Interval, SampleLayout};
pub use connectivity::{cell_connectivity, jointly_cover, CoreNode, CoreNodeKind};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BsId(pub u32);

impl std::fmt::Display for BsId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BS{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: BsId,
    pub position: Point,
    pub tx_antennas: u32,
    /// Hz.
    pub carrier_frequency: f64,
    /// dBm.
    pub tx_power: f64,
    pub channels: u32,
}

impl BaseStation {
    pub fn new(id: u32, position: Point) -> Self {
        Self {
            id: BsId(id),
            position,
            tx_antennas: 128,
            carrier_frequency: 2.0e9,
            tx_power: 46.0,
            channels: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_antennas < 1 {
            return Err(Error::param("tx_antennas", "must be at least 1"));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::param("carrier_frequency", "must be positive"));
        }
        if !self.position.is_finite() || !self.tx_power.is_finite() {
            return Err(Error::param("position", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    /// Path loss at the 1 m reference distance, dB.
    pub intercept_db: f64,
    /// dB per decade of distance.
    pub slope_db: f64,
    pub shadowing_std_db: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub doppler_penalty_coefficient: f64,
    /// Measurement interval τ, seconds.
    pub measurement_interval: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            intercept_db: 22.7,
            slope_db: 36.7,
            shadowing_std_db: 4.0,
            noise_dbm: -94.0,
            bandwidth_hz: 20.0e6,
            doppler_penalty_coefficient: 1.0,
            measurement_interval: 1.0e-3,
        }
    }
}

/// Below this distance path loss is clamped.
pub const MIN_DISTANCE: f64 = 1.0;

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::param("bandwidth_hz", "must be positive"));
        }
        if !(self.shadowing_std_db >= 0.0 && self.shadowing_std_db.is_finite()) {
            return Err(Error::param("shadowing_std_db", "must be non-negative"));
        }
        if !(self.slope_db > 0.0 && self.slope_db.is_finite()) {
            return Err(Error::param("slope_db", "must be positive"));
        }
        if !(self.doppler_penalty_coefficient >= 0.0) {
            return Err(Error::param("doppler_penalty_coefficient", "must be non-negative"));
        }
        if !(self.measurement_interval > 0.0) {
            return Err(Error::param("measurement_interval", "must be positive"));
        }
        if !self.intercept_db.is_finite() || !self.noise_dbm.is_finite() {
            return Err(Error::param("intercept_db", "must be finite"));
        }
        Ok(())
    }

    /// Multiplicative rate penalty at speed `v` for a carrier `f_c`.
    pub fn doppler_factor(&self, speed: f64, carrier_frequency: f64) -> f64 {
        let f_d = speed.max(0.0) * carrier_frequency / SPEED_OF_LIGHT;
        1.0 / (1.0 + self.doppler_penalty_coefficient * f_d * self.measurement_interval)
    }

    fn snr_offset_db(&self, epsilon: f64) -> Result<f64> {
        Ok(self.shadowing_std_db * standard_normal_quantile(epsilon)?)
    }

    fn shannon_mbps(&self, snr_db: f64) -> f64 {
        self.bandwidth_hz * (10f64.powf(snr_db / 10.0)).ln_1p() / std::f64::consts::LN_2 / 1e6
    }
}

pub fn path_loss(distance: f64, model: &ChannelModel) -> f64 {
    let d = if distance.is_nan() { MIN_DISTANCE } else { distance.max(MIN_DISTANCE) };
    model.intercept_db + model.slope_db * d.log10()
}

/// Φ⁻¹(p) for the standard normal.
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidEpsilon(p));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(p))
}

/// Rate in Mbps at a given distance for an arbitrary shadowing term (dB).
pub fn rate_with_shadowing(distance: f64, bs: &BaseStation, speed: f64, shadow_db: f64, model: &ChannelModel) -> f64 {
    let snr = bs.tx_power - path_loss(distance, model) - model.noise_dbm + shadow_db;
    model.shannon_mbps(snr) * model.doppler_factor(speed, bs.carrier_frequency)
}

/// ε-quantile of the downlink rate (Mbps) at `point` for an AV moving at `speed`.
pub fn rate_quantile(point: Point, bs: &BaseStation, speed: f64, epsilon: f64, model: &ChannelModel) -> Result<f64> {
    let offset = model.snr_offset_db(epsilon)?;
    Ok(rate_with_shadowing(point.distance(&bs.position), bs, speed, offset, model))
}

/// Distance up to which the ε-quantile rate at `speed` is at least `gamma`.
///
/// `None` when no point qualifies, `Some(INFINITY)` when `gamma <= 0`.
pub fn coverage_radius(bs: &BaseStation, gamma: f64, epsilon: f64, speed: f64, model: &ChannelModel) -> Result<Option<f64>> {
    let offset = model.snr_offset_db(epsilon)?;
    if gamma <= 0.0 {
        return Ok(Some(f64::INFINITY));
    }
    let doppler = model.doppler_factor(speed, bs.carrier_frequency);
    if rate_with_shadowing(MIN_DISTANCE, bs, speed, offset, model) < gamma {
        return Ok(None);
    }
    let spectral = gamma / doppler * 1e6 / model.bandwidth_hz;
    let snr_db = 10.0 * (spectral * std::f64::consts::LN_2).exp_m1().log10();
    let pl = bs.tx_power - model.noise_dbm + offset - snr_db;
    let d = 10f64.powf((pl - model.intercept_db) / model.slope_db);
    Ok(Some(d.max(MIN_DISTANCE)))
}

/// Base stations together with the channel model they share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub stations: Vec<BaseStation>,
    pub model: ChannelModel,
}

impl Deployment {
    pub fn new(stations: Vec<BaseStation>, model: ChannelModel) -> Result<Self> {
        model.validate()?;
        for bs in &stations {
            bs.validate()?;
        }
        Ok(Self { stations, model })
    }

    /// Computes every station's cell; stations are processed in parallel.
    pub fn cells(
        &self,
        network: &RoadNetwork,
        layout: &SampleLayout,
        gamma: f64,
        epsilon: f64,
        eval: EvalSpeed<'_>,
    ) -> Result<Vec<GammaRateCell>> {
        let builder = CellBuilder::new(network, layout, &self.model, epsilon, eval)?;
        self.stations
            .par_iter()
            .map(|bs| builder.build(bs, gamma))
            .collect()
    }

    /// Largest ε-quantile rate over all stations at a point.
    pub fn best_rate(&self, point: Point, speed: f64, epsilon: f64) -> Result<f64> {
        let mut best: f64 = 0.0;
        for bs in &self.stations {
            best = best.max(rate_quantile(point, bs, speed, epsilon, &self.model)?);
        }
        Ok(best)
    }
}

/// Shortest distance from `p` to the segment `a`–`b`.
pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&a.lerp(&b, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal as NormalDist};

    fn bs() -> BaseStation {
        BaseStation::new(0, Point::new(0.0, 0.0))
    }

    #[test]
    fn path_loss_examples() {
        let m = ChannelModel {
            intercept_db: 41.0,
            slope_db: 22.7,
            ..ChannelModel::default()
        };
        assert_eq!(path_loss(1.0, &m), 41.0);
        assert_eq!(path_loss(0.2, &m), 41.0);
        assert!((path_loss(100.0, &m) - 86.4).abs() < 1e-12);
        assert!((path_loss(730.0, &m) - path_loss(73.0, &m) - 22.7).abs() < 1e-9);
    }

    #[test]
    fn quantile_rejects_bad_epsilon() {
        let m = ChannelModel::default();
        for eps in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                rate_quantile(Point::new(10.0, 0.0), &bs(), 10.0, eps, &m),
                Err(Error::InvalidEpsilon(_))
            ));
        }
    }

    #[test]
    fn median_at_bs_is_model_maximum() {
        let m = ChannelModel::default();
        let top = rate_quantile(Point::new(0.0, 0.0), &bs(), 0.0, 0.5, &m).unwrap();
        let snr = 46.0 - 22.7 + 94.0;
        let expected = 20.0 * (1.0 + 10f64.powf(snr / 10.0)).log2();
        assert!((top - expected).abs() < 1e-9);
        for d in [0.5, 3.0, 50.0, 400.0] {
            for v in [0.0, 10.0, 30.0] {
                assert!(rate_quantile(Point::new(d, 0.0), &bs(), v, 0.5, &m).unwrap() <= top);
            }
        }
    }

    #[test]
    fn rate_monotone_in_speed_distance_and_epsilon() {
        let m = ChannelModel::default();
        let p = Point::new(300.0, 40.0);
        let r10 = rate_quantile(p, &bs(), 10.0, 0.01, &m).unwrap();
        let r30 = rate_quantile(p, &bs(), 30.0, 0.01, &m).unwrap();
        assert!(r30 <= r10);
        let mut last = f64::INFINITY;
        for i in 0..200 {
            let r = rate_quantile(Point::new(i as f64 * 7.0, 0.0), &bs(), 20.0, 0.01, &m).unwrap();
            assert!(r <= last);
            last = r;
        }
        let tight = rate_quantile(p, &bs(), 20.0, 0.01, &m).unwrap();
        let loose = rate_quantile(p, &bs(), 20.0, 0.1, &m).unwrap();
        assert!(tight <= loose);
    }

    #[test]
    fn quantile_matches_sampled_shadowing() {
        // Empirical ε-quantile of the rate with sampled shadowing.
        let m = ChannelModel::default();
        let p = Point::new(420.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shadow = NormalDist::new(0.0, m.shadowing_std_db).unwrap();
        for eps in [0.01, 0.1] {
            let mut rates: Vec<f64> = (0..200_000)
                .map(|_| rate_with_shadowing(420.0, &bs(), 15.0, shadow.sample(&mut rng), &m))
                .collect();
            rates.sort_by(f64::total_cmp);
            let empirical = rates[(eps * rates.len() as f64) as usize];
            let analytic = rate_quantile(p, &bs(), 15.0, eps, &m).unwrap();
            assert!((empirical - analytic).abs() / analytic < 0.01, "{eps}: {empirical} vs {analytic}");
        }
    }

    #[test]
    fn coverage_radius_inverts_rate() {
        let m = ChannelModel::default();
        for v in [0.0, 10.0, 20.0, 30.0] {
            for gamma in [10.0, 40.0, 55.0, 90.0] {
                let r = coverage_radius(&bs(), gamma, 0.01, v, &m).unwrap().unwrap();
                let at = rate_quantile(Point::new(r, 0.0), &bs(), v, 0.01, &m).unwrap();
                assert!((at - gamma).abs() < 1e-6 * gamma, "v={v} γ={gamma}: {at}");
            }
        }
        assert_eq!(coverage_radius(&bs(), 0.0, 0.01, 30.0, &m).unwrap(), Some(f64::INFINITY));
        assert_eq!(coverage_radius(&bs(), 1e6, 0.01, 0.0, &m).unwrap(), None);
    }

    #[test]
    fn default_model_covers_half_a_kilometre_at_55() {
        let m = ChannelModel::default();
        let r = coverage_radius(&bs(), 55.0, 0.01, 20.0, &m).unwrap().unwrap();
        assert!((400.0..650.0).contains(&r), "{r}");
    }

    #[test]
    fn segment_distance() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(10.0, 0.0);
        assert_eq!(point_segment_distance(Point::new(5.0, 3.0), a, b), 3.0);
        assert_eq!(point_segment_distance(Point::new(-4.0, 3.0), a, b), 5.0);
        assert_eq!(point_segment_distance(Point::new(1.0, 1.0), a, a), 2f64.sqrt());
    }
}
