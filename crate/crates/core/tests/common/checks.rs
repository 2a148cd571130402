//! Invariant checks shared by the property tests and the acceptance run.
//! Each returns a description of the first violation.

use std::collections::BTreeMap;

use ccroute_core::net::{assign_esm, generate_grid, Point};
use ccroute_core::radio::{
    cell_connectivity, BaseStation, ChannelModel, Deployment, EvalSpeed, GammaRateCell, SampleLayout,
};
use ccroute_core::routing::{route_in_cells, TwoLayerOptions};
use ccroute_core::sim::{run_monte_carlo, Accounting, CdfSeries, TripSimulator, TrialConfig};
use ccroute_core::routing::Scheme;
use ccroute_core::traffic::{
    balance_spectrum, CellGeometry, CrossRoadPolicy, Road, RoadCellIncidence, RoadSection, TddConfig, TrafficCell,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Cells at a lower γ contain the cells at a higher one, and every cell
/// is one connected piece.
pub fn cell_nesting(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = generate_grid(rng.random_range(3..=6), rng.random_range(3..=6), 250.0, 100.0).unwrap();
    let esm = assign_esm(&net, &[10.0, 20.0, 30.0], rng.random()).unwrap();
    let g = *net.grid().unwrap();
    let k = rng.random_range(1..=4);
    let stations = (0..k)
        .map(|i| BaseStation::new(i, Point::new(rng.random_range(0.0..g.width()), rng.random_range(0.0..g.height()))))
        .collect();
    let dep = Deployment::new(stations, ChannelModel::default()).unwrap();
    let layout = SampleLayout::new(&net, 5.0).unwrap();
    let lo = rng.random_range(0.0..90.0);
    let hi = lo + rng.random_range(0.0..40.0);
    let a = dep.cells(&net, &layout, lo, 0.01, EvalSpeed::Esm(&esm)).unwrap();
    let b = dep.cells(&net, &layout, hi, 0.01, EvalSpeed::Esm(&esm)).unwrap();
    for (big, small) in a.iter().zip(&b) {
        for c in [big, small] {
            ensure(c.is_contiguous(&net), || format!("seed {seed}: cell {:?} at γ {} is not contiguous", c.bs, c.gamma))?;
        }
        ensure(small.covered_intersections.is_subset(&big.covered_intersections), || {
            format!("seed {seed}: intersections of {:?} not nested ({lo} vs {hi})", small.bs)
        })?;
        ensure(small.covered_segments.is_subset(&big.covered_segments), || {
            format!("seed {seed}: covered segments of {:?} not nested", small.bs)
        })?;
        for s in small.touched_segments() {
            for iv in small.intervals(s) {
                for t in [iv.lo, 0.5 * (iv.lo + iv.hi), iv.hi] {
                    ensure(big.contains_point(&net, s, t), || {
                        format!("seed {seed}: point {t} of segment {s:?} in cell at {hi} but not at {lo}")
                    })?;
                }
            }
        }
    }
    Ok(())
}

/// Core nodes between two cells do not depend on argument order.
pub fn connectivity_symmetry(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = generate_grid(rng.random_range(3..=6), rng.random_range(3..=6), 250.0, 100.0).unwrap();
    let esm = assign_esm(&net, &[10.0, 20.0, 30.0], rng.random()).unwrap();
    let g = *net.grid().unwrap();
    let stations = (0..3)
        .map(|i| BaseStation::new(i, Point::new(rng.random_range(0.0..g.width()), rng.random_range(0.0..g.height()))))
        .collect();
    let dep = Deployment::new(stations, ChannelModel::default()).unwrap();
    let layout = SampleLayout::new(&net, 5.0).unwrap();
    let cells = dep
        .cells(&net, &layout, rng.random_range(20.0..80.0), 0.01, EvalSpeed::Esm(&esm))
        .unwrap();
    let key = |c: &GammaRateCell, d: &GammaRateCell| {
        let mut v: Vec<String> = cell_connectivity(&net, c, d).iter().map(|n| format!("{n:?}")).collect();
        v.sort();
        v
    };
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            ensure(key(&cells[i], &cells[j]) == key(&cells[j], &cells[i]), || {
                format!("seed {seed}: core nodes of {i}/{j} depend on order")
            })?;
        }
    }
    Ok(())
}

/// Adding a station never lowers the best rate anywhere.
pub fn monotone_bs_coverage(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stations = Vec::new();
    let mut prev: Vec<f64> = Vec::new();
    let points: Vec<(Point, f64)> = (0..40)
        .map(|_| (Point::new(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0)), rng.random_range(0.0..40.0)))
        .collect();
    for i in 0..5 {
        stations.push(BaseStation::new(i, Point::new(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0))));
        let dep = Deployment::new(stations.clone(), ChannelModel::default()).unwrap();
        let now: Vec<f64> = points.iter().map(|&(p, v)| dep.best_rate(p, v, 0.01).unwrap()).collect();
        if !prev.is_empty() {
            ensure(now.iter().zip(&prev).all(|(a, b)| a >= b), || format!("seed {seed}: coverage fell after station {i}"))?;
        }
        prev = now;
    }
    Ok(())
}

/// Grid counts, connectivity and a speed for every segment from the set.
pub fn grid_and_esm(avenues: u32, streets: u32, seed: u64) -> Check {
    let net = generate_grid(avenues, streets, 250.0, 100.0).unwrap();
    let (a, s) = (avenues as usize, streets as usize);
    ensure(net.intersections().len() == a * s, || format!("{a}x{s}: intersection count"))?;
    ensure(net.segments().len() == a * (s - 1) + s * (a - 1), || format!("{a}x{s}: segment count"))?;
    ensure(net.is_connected(), || format!("{a}x{s}: not connected"))?;
    let set = [10.0, 20.0, 30.0];
    let esm = assign_esm(&net, &set, seed).unwrap();
    ensure(esm.covers(&net), || format!("{a}x{s}: ESM misses segments"))?;
    ensure(esm.speeds().iter().all(|v| set.contains(v)), || format!("{a}x{s}: speed outside set"))
}

/// Empirical CDFs are valid step functions that agree with counting.
pub fn cdf_valid(samples: &[f64]) -> Check {
    let c = CdfSeries::from_samples(Scheme::Greedy, samples);
    ensure(c.is_valid(), || format!("invalid CDF from {samples:?}"))?;
    let n = samples.iter().filter(|x| !x.is_nan()).count() as f64;
    for &x in samples.iter().filter(|x| !x.is_nan()) {
        let expect = samples.iter().filter(|y| **y <= x).count() as f64 / n;
        ensure((c.eval(x) - expect).abs() < 1e-12, || format!("CDF at {x}: {} vs {expect}", c.eval(x)))?;
    }
    Ok(())
}

/// Same configuration and seed, same results, whatever the thread count.
pub fn seed_determinism(seed: u64) -> Check {
    let mut cfg = TrialConfig::desk();
    cfg.grid.avenues = 5;
    cfg.grid.streets = 6;
    cfg.stations.count = 3;
    cfg.trials = 12;
    cfg.seed = seed;
    cfg.threads = Some(1);
    let a = run_monte_carlo(&cfg).unwrap();
    cfg.threads = Some(3);
    let b = run_monte_carlo(&cfg).unwrap();
    ensure(a == b, || format!("seed {seed}: results differ across runs"))
}

/// A two-layer route planned at γ is fully covered at γ when driven.
pub fn two_layer_route_is_covered(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = generate_grid(rng.random_range(3..=7), rng.random_range(3..=7), 250.0, 100.0).unwrap();
    let esm = assign_esm(&net, &[10.0, 20.0, 30.0], rng.random()).unwrap();
    let g = *net.grid().unwrap();
    let stations = (0..rng.random_range(2..=5))
        .map(|i| BaseStation::new(i, Point::new(rng.random_range(0.0..g.width()), rng.random_range(0.0..g.height()))))
        .collect();
    let dep = Deployment::new(stations, ChannelModel::default()).unwrap();
    let layout = SampleLayout::new(&net, 5.0).unwrap();
    let gamma = rng.random_range(20.0..90.0);
    let cells = dep.cells(&net, &layout, gamma, 0.01, EvalSpeed::Esm(&esm)).unwrap();
    let n = net.intersections().len() as u32;
    let src = ccroute_core::net::IntersectionId(rng.random_range(0..n));
    let dst = ccroute_core::net::IntersectionId(rng.random_range(0..n));
    let Ok(route) = route_in_cells(&net, &cells, &esm, src, dst, gamma, TwoLayerOptions::default()) else {
        return Ok(());
    };
    let sim = TripSimulator {
        network: &net,
        esm: &esm,
        deployment: &dep,
        epsilon: 0.01,
        tau: 1e-3,
        accounting: Accounting::Quantile,
    };
    let m = sim.simulate(&route, gamma, 0).unwrap();
    ensure(m.success && m.p_c == 1.0, || format!("seed {seed}: two-layer route at γ {gamma} has P_c {}", m.p_c))
}

fn random_tdd(rng: &mut ChaCha8Rng) -> TddConfig {
    let mut t = TddConfig::default();
    t.alpha = rng.random_range(2..=10) as f64;
    t.carrier_frequency = rng.random_range(1..=12) as f64 * 0.5e9;
    t.group_size = rng.random_range(4..=12);
    t.with_message_load(rng.random_range(1..=18) as f64 * 0.05)
}

/// Random road/cell incidence with every cell on at least one road.
pub fn random_incidence(rng: &mut ChaCha8Rng) -> RoadCellIncidence {
    let nc = rng.random_range(1..=5);
    let cells: Vec<TrafficCell> = (0..nc)
        .map(|i| TrafficCell {
            id: format!("c{i}"),
            geometry: CellGeometry::new(8, 3.0, rng.random_range(5_000.0..40_000.0)),
            tdd: random_tdd(rng),
        })
        .collect();
    let nr = rng.random_range(1..=4);
    let mut roads = Vec::new();
    for j in 0..nr {
        let mut ids: Vec<usize> = (0..nc).filter(|_| rng.random_bool(0.5)).collect();
        if ids.is_empty() {
            ids.push(rng.random_range(0..nc));
        }
        roads.push(Road {
            id: format!("r{j}"),
            sections: ids
                .into_iter()
                .map(|i| RoadSection {
                    cell: format!("c{i}"),
                    lanes: rng.random_range(1..=2),
                    coverage: None,
                })
                .collect(),
            weight: rng.random_range(0.5..3.0),
        });
    }
    RoadCellIncidence { cells, roads }
}

/// Balanced flows are equal along every road, use exactly `b0` channels,
/// and no random allocation of the same channels gives every road more
/// weighted flow.
pub fn balance_certificate(seed: u64, random_trials: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inc = random_incidence(&mut rng);
    let b0 = rng.random_range(1.0..50.0);
    let alloc = balance_spectrum(&inc, b0, CrossRoadPolicy::WeightedMaxMin).map_err(|e| format!("seed {seed}: {e}"))?;
    ensure((alloc.total_channels() - b0).abs() <= 1e-9 * b0, || format!("seed {seed}: channels do not sum to B0"))?;
    let mut by_road: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for s in &alloc.sections {
        by_road.entry(&s.road).or_default().push(s.flow);
    }
    for (road, flows) in &by_road {
        let max = flows.iter().copied().fold(f64::MIN, f64::max);
        let min = flows.iter().copied().fold(f64::MAX, f64::min);
        ensure(max - min <= 1e-9 * max, || format!("seed {seed}: road {road} flows spread {}", max - min))?;
    }
    let score = |flows: &[f64]| {
        inc.roads
            .iter()
            .zip(flows)
            .map(|(r, f)| f / r.weight)
            .fold(f64::INFINITY, f64::min)
    };
    let balanced: Vec<f64> = inc.roads.iter().map(|r| alloc.road_flow(&r.id).unwrap()).collect();
    let best = score(&balanced);
    // Flow per channel of every section, read off the balanced allocation.
    let coeff: Vec<Vec<f64>> = inc
        .roads
        .iter()
        .map(|r| {
            alloc
                .sections
                .iter()
                .filter(|s| s.road == r.id)
                .map(|s| s.flow / s.channels)
                .collect()
        })
        .collect();
    let sections: usize = coeff.iter().map(Vec::len).sum();
    for _ in 0..random_trials {
        let raw: Vec<f64> = (0..sections).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let mut it = raw.iter().map(|x| x / total * b0);
        let flows: Vec<f64> = coeff
            .iter()
            .map(|row| row.iter().map(|a| a * it.next().unwrap()).fold(f64::INFINITY, f64::min))
            .collect();
        ensure(score(&flows) <= best * (1.0 + 1e-9), || {
            format!("seed {seed}: random allocation beats the balance ({} > {best})", score(&flows))
        })?;
    }
    Ok(())
}
