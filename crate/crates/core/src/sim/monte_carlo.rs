use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cdf::CdfSeries;
use super::trip::{Accounting, TripMetrics, TripSimulator};
use crate::error::{Error, Result};
use crate::net::{assign_esm, generate_grid, EffectiveSpeedMap, IntersectionId, Point, RoadNetwork};
use crate::radio::{BaseStation, ChannelModel, Deployment, EvalSpeed, GammaRateCell, SampleLayout};
use crate::routing::{
    default_max_segments, gamma_schedule, greedy_cc_with_index, greedy_route_no_cc, oracle_constrained_shortest,
    route_in_cells, shortest_time_route, CoverageIndex, Route, Scheme, TopLayerSearch, TwoLayerOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub avenues: u32,
    pub streets: u32,
    pub block_length: f64,
    pub block_width: f64,
}

/// Where base stations go inside the grid's bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Centres of a `rows x cols` tiling with `rows * cols = count` as
    /// square as possible, the longer side of the tiling along the longer
    /// side of the area.
    Lattice,
    /// Uniform over the area.
    Random,
    /// First `count` points of the (2, 3) Halton sequence; smaller counts
    /// are prefixes of larger ones.
    Halton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationLayout {
    pub count: u32,
    pub placement: Placement,
    #[serde(default = "default_tx_power")]
    pub tx_power: f64,
    #[serde(default = "default_carrier")]
    pub carrier_frequency: f64,
}

fn default_tx_power() -> f64 {
    46.0
}

fn default_carrier() -> f64 {
    2e9
}

/// Source/destination choice per trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Endpoints {
    /// First intersection to the opposite corner.
    #[default]
    Corners,
    /// Two distinct intersections drawn uniformly.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub grid: GridConfig,
    pub stations: StationLayout,
    #[serde(default)]
    pub channel: ChannelModel,
    /// Rate threshold, Mbps.
    pub gamma: f64,
    pub epsilon: f64,
    pub speed_set: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub endpoints: Endpoints,
    pub sample_spacing: f64,
    /// Measurement interval, seconds.
    pub tau: f64,
    #[serde(default)]
    pub accounting: Accounting,
    /// Lowest threshold the two-layer router falls back to.
    pub gamma_floor: f64,
    pub gamma_step: f64,
    /// Segment cap for the constrained greedy walk; `None` means `4 (A + S)`.
    #[serde(default)]
    pub max_segments: Option<usize>,
    #[serde(default)]
    pub search: TopLayerSearch,
    /// Worker threads; `None` uses all cores.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl TrialConfig {
    /// 11 x 21 grid, 9 stations, 1,000 trials: runs in seconds.
    pub fn desk() -> Self {
        TrialConfig {
            grid: GridConfig {
                avenues: 11,
                streets: 21,
                block_length: 250.0,
                block_width: 100.0,
            },
            stations: StationLayout {
                count: 9,
                placement: Placement::Lattice,
                tx_power: default_tx_power(),
                carrier_frequency: default_carrier(),
            },
            channel: ChannelModel::default(),
            gamma: DESK_GAMMA,
            epsilon: 0.01,
            speed_set: vec![10.0, 20.0, 30.0],
            trials: 1000,
            seed: 1,
            schemes: Scheme::ALL.to_vec(),
            endpoints: Endpoints::Corners,
            sample_spacing: 5.0,
            tau: 1e-3,
            accounting: Accounting::Quantile,
            gamma_floor: 0.0,
            gamma_step: 5.0,
            max_segments: None,
            search: TopLayerSearch::Exhaustive,
            threads: None,
        }
    }

    /// 11 x 51 grid, 21 stations, γ = 55 Mbps, 10,000 trials.
    pub fn full_scale() -> Self {
        let mut c = Self::desk();
        c.grid.streets = 51;
        c.stations.count = 21;
        c.gamma = 55.0;
        c.trials = 10_000;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::param("schemes", "list at least one scheme"));
        }
        if self.stations.count == 0 {
            return Err(Error::param("stations.count", "must be at least 1"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", "must be non-negative"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param("tau", "must be positive"));
        }
        if !(self.gamma_step >= 0.0 && self.gamma_floor >= 0.0) {
            return Err(Error::param("gamma_step", "step and floor must be non-negative"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidEpsilon(self.epsilon));
        }
        if self.threads == Some(0) {
            return Err(Error::param("threads", "must be at least 1"));
        }
        self.channel.validate()
    }
}

/// Threshold for the desk preset, chosen so that two-layer routing
/// succeeds on most but not all trials.
pub const DESK_GAMMA: f64 = 47.5;

/// Independent seed for `(trial, purpose)`, derived from the master seed.
pub fn derive_seed(seed: u64, trial: u64, purpose: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(16).wrapping_add(purpose));
    rng.next_u64()
}

const PURPOSE_ESM: u64 = 0;
const PURPOSE_ENDPOINTS: u64 = 1;
const PURPOSE_GREEDY: u64 = 2;
const PURPOSE_GREEDY_CC: u64 = 3;
const PURPOSE_SHADOWING: u64 = 4;
const PLACEMENT_TRIAL: u64 = u64::MAX >> 4;

fn squarest(count: u32) -> (u32, u32) {
    let mut best = (1, count);
    let mut a = 1;
    while a * a <= count {
        if count % a == 0 {
            best = (a, count / a);
        }
        a += 1;
    }
    best
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Station positions over a `width x height` area.
pub fn place_stations(count: u32, placement: Placement, width: f64, height: f64, seed: u64) -> Vec<Point> {
    match placement {
        Placement::Lattice => {
            let (short, long) = squarest(count);
            let (nx, ny) = if width >= height { (long, short) } else { (short, long) };
            let mut out = Vec::with_capacity(count as usize);
            for j in 0..ny {
                for i in 0..nx {
                    out.push(Point::new(
                        (i as f64 + 0.5) * width / nx as f64,
                        (j as f64 + 0.5) * height / ny as f64,
                    ));
                }
            }
            out
        }
        Placement::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, PLACEMENT_TRIAL, 0));
            (0..count)
                .map(|_| Point::new(rng.random::<f64>() * width, rng.random::<f64>() * height))
                .collect()
        }
        Placement::Halton => (1..=count as u64)
            .map(|i| Point::new(radical_inverse(i, 2) * width, radical_inverse(i, 3) * height))
            .collect(),
    }
}

/// Results of one trial, one entry per configured scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub source: IntersectionId,
    pub destination: IntersectionId,
    pub metrics: Vec<TripMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub trials: usize,
    pub routed: usize,
    pub success_pct: f64,
    pub mean_pc: f64,
    /// Over routed trials only.
    pub mean_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<SchemeSummary>,
    pub duration_cdfs: Vec<CdfSeries>,
    pub pc_cdfs: Vec<CdfSeries>,
}

impl MonteCarloResult {
    pub fn summary_for(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summary.iter().find(|s| s.scheme == scheme)
    }

    /// Metrics of every trial for one scheme, in trial order.
    pub fn metrics_for(&self, scheme: Scheme) -> Vec<&TripMetrics> {
        self.trials
            .iter()
            .filter_map(|t| t.metrics.iter().find(|m| m.scheme == scheme))
            .collect()
    }
}

/// Fixed part of an experiment shared by all trials.
pub struct Scenario {
    pub config: TrialConfig,
    pub network: RoadNetwork,
    pub deployment: Deployment,
    pub layout: SampleLayout,
}

impl Scenario {
    pub fn new(config: &TrialConfig) -> Result<Self> {
        config.validate()?;
        let g = &config.grid;
        let network = generate_grid(g.avenues, g.streets, g.block_length, g.block_width)?;
        let shape = network.grid().expect("generated grid");
        let positions = place_stations(
            config.stations.count,
            config.stations.placement,
            shape.width(),
            shape.height(),
            config.seed,
        );
        let stations = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut bs = BaseStation::new(i as u32, p);
                bs.tx_power = config.stations.tx_power;
                bs.carrier_frequency = config.stations.carrier_frequency;
                bs
            })
            .collect();
        let deployment = Deployment::new(stations, config.channel.clone())?;
        let layout = SampleLayout::new(&network, config.sample_spacing)?;
        Ok(Scenario {
            config: config.clone(),
            network,
            deployment,
            layout,
        })
    }

    fn endpoints(&self, trial: usize) -> (IntersectionId, IntersectionId) {
        let n = self.network.intersections().len() as u32;
        match self.config.endpoints {
            Endpoints::Corners => (IntersectionId(0), IntersectionId(n - 1)),
            Endpoints::Random => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, trial as u64, PURPOSE_ENDPOINTS));
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (IntersectionId(a), IntersectionId(b))
            }
        }
    }

    fn two_layer(
        &self,
        cells: &[GammaRateCell],
        esm: &EffectiveSpeedMap,
        src: IntersectionId,
        dst: IntersectionId,
    ) -> Result<Route> {
        let cfg = &self.config;
        let opts = TwoLayerOptions {
            search: cfg.search,
            ..TwoLayerOptions::default()
        };
        let mut last = None;
        for (k, g) in gamma_schedule(cfg.gamma, cfg.gamma_floor, cfg.gamma_step).into_iter().enumerate() {
            let owned;
            let here = if k == 0 {
                cells
            } else {
                owned = self
                    .deployment
                    .cells(&self.network, &self.layout, g, cfg.epsilon, EvalSpeed::Esm(esm))?;
                &owned[..]
            };
            match route_in_cells(&self.network, here, esm, src, dst, g, opts) {
                Ok(r) => return Ok(r),
                Err(e) if e.is_routing_failure() => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("schedule is never empty"))
    }

    /// Effective speed map of one trial.
    pub fn trial_esm(&self, trial: usize) -> Result<EffectiveSpeedMap> {
        assign_esm(
            &self.network,
            &self.config.speed_set,
            derive_seed(self.config.seed, trial as u64, PURPOSE_ESM),
        )
    }

    /// Cells at the configured γ under `esm`.
    pub fn cells(&self, esm: &EffectiveSpeedMap) -> Result<Vec<GammaRateCell>> {
        let cfg = &self.config;
        self.deployment
            .cells(&self.network, &self.layout, cfg.gamma, cfg.epsilon, EvalSpeed::Esm(esm))
    }

    /// Source and destination of one trial.
    pub fn trial_endpoints(&self, trial: usize) -> (IntersectionId, IntersectionId) {
        self.endpoints(trial)
    }

    /// Plans one route exactly as trial `trial` does. `cells` must come from
    /// [`Scenario::cells`] for the same ESM.
    pub fn plan(
        &self,
        trial: usize,
        scheme: Scheme,
        esm: &EffectiveSpeedMap,
        cells: &[GammaRateCell],
        src: IntersectionId,
        dst: IntersectionId,
    ) -> Result<Route> {
        let cfg = &self.config;
        let net = &self.network;
        let t = trial as u64;
        match scheme {
            Scheme::ShortestTime => shortest_time_route(net, esm, src, dst),
            Scheme::Greedy => greedy_route_no_cc(net, esm, src, dst, derive_seed(cfg.seed, t, PURPOSE_GREEDY)),
            Scheme::GreedyCc => {
                let index = CoverageIndex::new(net, cells);
                let cap = cfg.max_segments.or_else(|| default_max_segments(net)).unwrap_or(0);
                let seed = derive_seed(cfg.seed, t, PURPOSE_GREEDY_CC);
                greedy_cc_with_index(net, &index, esm, src, dst, cfg.gamma, cap, seed)
            }
            Scheme::TwoLayer => self.two_layer(cells, esm, src, dst),
            Scheme::Oracle => oracle_constrained_shortest(net, cells, esm, src, dst, cfg.gamma),
        }
    }

    /// Drives `route` under `esm`; `slot` picks the shadowing stream.
    pub fn simulate(&self, trial: usize, slot: usize, esm: &EffectiveSpeedMap, route: &Route) -> Result<TripMetrics> {
        let cfg = &self.config;
        let sim = TripSimulator {
            network: &self.network,
            esm,
            deployment: &self.deployment,
            epsilon: cfg.epsilon,
            tau: cfg.tau,
            accounting: cfg.accounting,
        };
        let seed = derive_seed(cfg.seed, trial as u64, PURPOSE_SHADOWING + 16 * slot as u64);
        sim.simulate(route, cfg.gamma, seed)
    }

    pub fn run_trial(&self, trial: usize) -> Result<TrialResult> {
        let cfg = &self.config;
        let esm = self.trial_esm(trial)?;
        let (src, dst) = self.endpoints(trial);
        let needs_cells = cfg.schemes.iter().any(|s| !matches!(s, Scheme::Greedy | Scheme::ShortestTime));
        let cells = if needs_cells { self.cells(&esm)? } else { Vec::new() };
        let mut metrics = Vec::with_capacity(cfg.schemes.len());
        for (k, &scheme) in cfg.schemes.iter().enumerate() {
            let m = match self.plan(trial, scheme, &esm, &cells, src, dst) {
                Ok(r) => self.simulate(trial, k, &esm, &r)?,
                Err(e) if e.is_routing_failure() => TripMetrics::unrouted(scheme),
                Err(e) => return Err(e),
            };
            metrics.push(m);
        }
        Ok(TrialResult {
            trial,
            source: src,
            destination: dst,
            metrics,
        })
    }
}

/// Runs every trial of `cfg` in parallel and aggregates the results.
/// Output depends only on the configuration, not on thread count.
pub fn run_monte_carlo(cfg: &TrialConfig) -> Result<MonteCarloResult> {
    let scenario = Scenario::new(cfg)?;
    let run = || -> Result<Vec<TrialResult>> { (0..cfg.trials).into_par_iter().map(|i| scenario.run_trial(i)).collect() };
    let mut trials = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    trials.sort_by_key(|t| t.trial);
    Ok(aggregate(&cfg.schemes, trials))
}

fn aggregate(schemes: &[Scheme], trials: Vec<TrialResult>) -> MonteCarloResult {
    let mut summary = Vec::new();
    let mut duration_cdfs = Vec::new();
    let mut pc_cdfs = Vec::new();
    for (k, &scheme) in schemes.iter().enumerate() {
        let ms: Vec<&TripMetrics> = trials.iter().map(|t| &t.metrics[k]).collect();
        let n = ms.len();
        let routed: Vec<&&TripMetrics> = ms.iter().filter(|m| m.routed).collect();
        let durations: Vec<f64> = routed.iter().map(|m| m.trip_duration).collect();
        let pcs: Vec<f64> = ms.iter().map(|m| m.p_c).collect();
        summary.push(SchemeSummary {
            scheme,
            trials: n,
            routed: routed.len(),
            success_pct: 100.0 * ms.iter().filter(|m| m.success).count() as f64 / n as f64,
            mean_pc: pcs.iter().sum::<f64>() / n as f64,
            mean_duration: if durations.is_empty() {
                f64::NAN
            } else {
                durations.iter().sum::<f64>() / durations.len() as f64
            },
        });
        duration_cdfs.push(CdfSeries::from_samples(scheme, &durations));
        pc_cdfs.push(CdfSeries::from_samples(scheme, &pcs));
    }
    MonteCarloResult {
        trials,
        summary,
        duration_cdfs,
        pc_cdfs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TrialConfig {
        let mut c = TrialConfig::desk();
        c.grid.avenues = 5;
        c.grid.streets = 6;
        c.stations.count = 4;
        c.trials = 6;
        c
    }

    #[test]
    fn squarest_factors() {
        assert_eq!(squarest(9), (3, 3));
        assert_eq!(squarest(21), (3, 7));
        assert_eq!(squarest(7), (1, 7));
        assert_eq!(squarest(12), (3, 4));
    }

    #[test]
    fn lattice_orientation() {
        let p = place_stations(21, Placement::Lattice, 2500.0, 5000.0, 0);
        assert_eq!(p.len(), 21);
        let xs: std::collections::BTreeSet<u64> = p.iter().map(|q| q.x.to_bits()).collect();
        assert_eq!(xs.len(), 3);
    }

    #[test]
    fn halton_is_nested_and_inside() {
        let a = place_stations(5, Placement::Halton, 100.0, 50.0, 0);
        let b = place_stations(9, Placement::Halton, 100.0, 50.0, 0);
        assert_eq!(a[..], b[..5]);
        assert!(b.iter().all(|p| (0.0..100.0).contains(&p.x) && (0.0..50.0).contains(&p.y)));
        assert_eq!(b[0].x, 50.0);
        assert!((b[0].y - 50.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gamma_everyone_succeeds() {
        let mut c = small();
        c.gamma = 0.0;
        c.trials = 1;
        let r = run_monte_carlo(&c).unwrap();
        for s in &r.summary {
            assert_eq!(s.success_pct, 100.0, "{:?}", s.scheme);
        }
        let st = r.metrics_for(Scheme::ShortestTime)[0].trip_duration;
        for m in &r.trials[0].metrics {
            assert!(st <= m.trip_duration * (1.0 + 1e-9));
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut c = small();
        c.threads = Some(1);
        let a = run_monte_carlo(&c).unwrap();
        c.threads = Some(3);
        let b = run_monte_carlo(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..100)
            .flat_map(|t| (0..5).map(move |p| derive_seed(7, t, p)))
            .collect();
        assert_eq!(s.len(), 500);
    }
}
