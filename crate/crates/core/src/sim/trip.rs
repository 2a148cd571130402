use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::net::{EffectiveSpeedMap, Point, RoadNetwork};
use crate::radio::{coverage_radius, rate_with_shadowing, Deployment};
use crate::routing::{Route, Scheme};

/// How the rate at each measurement instant is judged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accounting {
    /// ε-quantile rate, deterministic.
    #[default]
    Quantile,
    /// One shadowing draw per station per measurement instant.
    Realized,
}

/// Outcome of driving one route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripMetrics {
    pub scheme: Scheme,
    /// False when the scheme produced no route; the other fields are then
    /// zero and `success` is false.
    pub routed: bool,
    pub trip_duration: f64,
    pub covered_duration: f64,
    pub p_c: f64,
    pub success: bool,
    pub gamma_used: Option<f64>,
    pub segments: usize,
}

impl TripMetrics {
    pub fn unrouted(scheme: Scheme) -> Self {
        TripMetrics {
            scheme,
            routed: false,
            trip_duration: 0.0,
            covered_duration: 0.0,
            p_c: 0.0,
            success: false,
            gamma_used: None,
            segments: 0,
        }
    }
}

/// Drives routes over a network and measures rate coverage every `tau`
/// seconds, starting at time 0.
pub struct TripSimulator<'a> {
    pub network: &'a RoadNetwork,
    pub esm: &'a EffectiveSpeedMap,
    pub deployment: &'a Deployment,
    pub epsilon: f64,
    pub tau: f64,
    pub accounting: Accounting,
}

impl TripSimulator<'_> {
    /// Measures `route` against rate threshold `gamma`. `seed` drives the
    /// shadowing draws in realized mode and is ignored otherwise.
    pub fn simulate(&self, route: &Route, gamma: f64, seed: u64) -> Result<TripMetrics> {
        let total = route.total_time;
        let mut m = TripMetrics {
            scheme: route.scheme,
            routed: true,
            trip_duration: total,
            covered_duration: 0.0,
            p_c: 1.0,
            success: true,
            gamma_used: route.gamma_used,
            segments: route.segment_count(),
        };
        if total <= 0.0 {
            return Ok(m);
        }
        let samples = ((total / self.tau - 1e-9).ceil() as u64).max(1);
        let covered = match self.accounting {
            Accounting::Quantile => self.count_quantile(route, gamma, samples)?,
            Accounting::Realized => self.count_realized(route, gamma, samples, seed),
        };
        m.p_c = covered as f64 / samples as f64;
        m.success = covered == samples;
        m.covered_duration = m.p_c * total;
        Ok(m)
    }

    /// Covered time spans are unions of chords of each station's coverage
    /// disc; samples inside them are counted directly.
    fn count_quantile(&self, route: &Route, gamma: f64, samples: u64) -> Result<u64> {
        let mut spans: Vec<(f64, f64)> = Vec::new();
        let mut t0 = 0.0;
        for tr in &route.traversals {
            let seg = self.network.segment(tr.segment)?;
            let speed = self.esm.speed(tr.segment)?;
            let a = self.network.position(seg.endpoints.0);
            let b = self.network.position(seg.endpoints.1);
            let (ux, uy) = ((b.x - a.x) / seg.length, (b.y - a.y) / seg.length);
            let (lo, hi) = (tr.entry.min(tr.exit), tr.entry.max(tr.exit));
            for bs in &self.deployment.stations {
                let Some(r) = coverage_radius(bs, gamma, self.epsilon, speed, &self.deployment.model)? else {
                    continue;
                };
                let r = r * (1.0 + 1e-9) + 1e-9;
                let (dx, dy) = (bs.position.x - a.x, bs.position.y - a.y);
                let x0 = dx * ux + dy * uy;
                let h2 = (dx * dx + dy * dy - x0 * x0).max(0.0);
                if r * r < h2 {
                    continue;
                }
                let w = (r * r - h2).sqrt();
                let (c0, c1) = ((x0 - w).max(lo), (x0 + w).min(hi));
                if c0 > c1 {
                    continue;
                }
                let (d0, d1) = ((c0 - tr.entry).abs(), (c1 - tr.entry).abs());
                spans.push((t0 + d0.min(d1) / speed, t0 + d0.max(d1) / speed));
            }
            t0 += tr.time;
        }
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        let eps = 1e-9 * (1.0 + t0);
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (s, e) in spans {
            match merged.last_mut() {
                Some(last) if s <= last.1 + eps => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        let mut covered = 0u64;
        for (s, e) in merged {
            let k0 = (s / self.tau - 1e-9).ceil().max(0.0) as u64;
            let k1 = ((e / self.tau + 1e-9).floor().max(-1.0) as i64).min(samples as i64 - 1);
            if k1 >= k0 as i64 {
                covered += k1 as u64 - k0 + 1;
            }
        }
        Ok(covered)
    }

    fn count_realized(&self, route: &Route, gamma: f64, samples: u64, seed: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = self.deployment.model.shadowing_std_db;
        let mut covered = 0;
        let mut idx = 0;
        let mut t0 = 0.0;
        for k in 0..samples {
            let t = k as f64 * self.tau;
            while idx + 1 < route.traversals.len() && t >= t0 + route.traversals[idx].time {
                t0 += route.traversals[idx].time;
                idx += 1;
            }
            let tr = &route.traversals[idx];
            let speed = tr.length() / tr.time;
            let along = (speed * (t - t0)).min(tr.length());
            let offset = if tr.exit >= tr.entry { tr.entry + along } else { tr.entry - along };
            let p: Point = self.network.point_on(tr.segment, offset);
            let mut ok = false;
            for bs in &self.deployment.stations {
                let z: f64 = StandardNormal.sample(&mut rng);
                if !ok {
                    let r = rate_with_shadowing(p.distance(&bs.position), bs, speed, sigma * z, &self.deployment.model);
                    ok = r >= gamma;
                }
            }
            covered += ok as u64;
        }
        covered
    }
}
