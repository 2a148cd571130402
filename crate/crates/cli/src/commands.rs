use std::path::PathBuf;

use ccroute_core::net::IntersectionId;
use ccroute_core::radio::GammaRateCell;
use ccroute_core::routing::{Direction, Route, Scheme};
use ccroute_core::sim::{
    default_alpha_values, default_carrier_values, default_message_load_values, run_monte_carlo, sweep_routing,
    sweep_traffic, write_atomic, write_bs_sweep, write_gamma_sweep, write_monte_carlo, write_table,
    write_traffic_sweep, Format, Provenance, Scenario, SweepAxis, TripMetrics,
};
use ccroute_core::traffic::{
    apply_policy, balance_spectrum, two_cell_fixture, ControlPolicy, CrossRoadPolicy, SpectrumAllocation,
};
use serde::Serialize;

use crate::config::Config;
use crate::CliError;

pub struct Context {
    pub out: PathBuf,
    pub format: Format,
}

fn provenance(cfg: &Config) -> Result<Provenance, CliError> {
    Ok(Provenance::new(cfg, cfg.scenario.seed)?)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(ccroute_core::Error::from)?;
    v.push(b'\n');
    Ok(v)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

#[derive(Serialize)]
struct CellSummaryRow {
    bs: u32,
    covered_segments: usize,
    partial_segments: usize,
    covered_intersections: usize,
}

#[derive(Serialize)]
struct CellsDoc<'a> {
    cfg_hash: &'a str,
    seed: u64,
    trial: usize,
    gamma: f64,
    cells: &'a [GammaRateCell],
}

pub fn cells(ctx: &Context, mut cfg: Config, gamma: Option<f64>, trial: usize) -> Result<(), CliError> {
    if let Some(g) = gamma {
        cfg.scenario.gamma = g;
    }
    let scenario = Scenario::new(&cfg.scenario)?;
    let esm = scenario.trial_esm(trial)?;
    let cells = scenario.cells(&esm)?;
    let prov = provenance(&cfg)?;

    let rows: Vec<CellSummaryRow> = cells
        .iter()
        .map(|c| CellSummaryRow {
            bs: c.bs.0,
            covered_segments: c.covered_segments.len(),
            partial_segments: c.partially_covered_segments.len(),
            covered_intersections: c.covered_intersections.len(),
        })
        .collect();
    let segments = scenario.network.segments();
    let covered = segments
        .iter()
        .filter(|s| cells.iter().any(|c| c.covers_segment(s.id)))
        .count();
    let doc = CellsDoc {
        cfg_hash: &prov.cfg_hash,
        seed: prov.seed,
        trial,
        gamma: cfg.scenario.gamma,
        cells: &cells,
    };
    let bytes = to_json(&doc)?;
    let paths = vec![
        write_atomic(&ctx.out, "cells.json", &bytes)?,
        write_table(&ctx.out, "cell_summary", &rows, ctx.format, &prov)?,
    ];

    println!("{:>4}  {:>8}  {:>8}  {:>13}", "bs", "segments", "partial", "intersections");
    for r in &rows {
        println!(
            "{:>4}  {:>8}  {:>8}  {:>13}",
            r.bs, r.covered_segments, r.partial_segments, r.covered_intersections
        );
    }
    println!(
        "{} cells at γ = {} Mbps; {covered}/{} segments fully inside some cell ({:.1}%)",
        cells.len(),
        cfg.scenario.gamma,
        segments.len(),
        100.0 * covered as f64 / segments.len().max(1) as f64
    );
    report(&paths);
    Ok(())
}

#[derive(Serialize)]
struct RouteDoc<'a> {
    cfg_hash: &'a str,
    seed: u64,
    trial: usize,
    route: &'a Route,
    metrics: &'a TripMetrics,
}

#[derive(Serialize)]
struct TraversalRow {
    step: usize,
    segment: u32,
    direction: Direction,
    entry: f64,
    exit: f64,
    time_s: f64,
}

fn check_node(scenario: &Scenario, id: u32) -> Result<IntersectionId, CliError> {
    let id = IntersectionId(id);
    if scenario.network.contains(id) {
        Ok(id)
    } else {
        Err(ccroute_core::Error::UnknownIntersection(id).into())
    }
}

pub fn route(
    ctx: &Context,
    mut cfg: Config,
    from: Option<u32>,
    to: Option<u32>,
    scheme: Scheme,
    gamma: Option<f64>,
    trial: usize,
) -> Result<(), CliError> {
    if let Some(g) = gamma {
        if scheme == Scheme::ShortestTime {
            log::warn!("--gamma is ignored by shortest-time; coverage is measured at {} Mbps", cfg.scenario.gamma);
        } else {
            cfg.scenario.gamma = g;
        }
    }
    let scenario = Scenario::new(&cfg.scenario)?;
    let (default_src, default_dst) = scenario.trial_endpoints(trial);
    let src = from.map(|i| check_node(&scenario, i)).transpose()?.unwrap_or(default_src);
    let dst = to.map(|i| check_node(&scenario, i)).transpose()?.unwrap_or(default_dst);
    let esm = scenario.trial_esm(trial)?;
    let cells = match scheme {
        Scheme::TwoLayer | Scheme::GreedyCc | Scheme::Oracle => scenario.cells(&esm)?,
        Scheme::Greedy | Scheme::ShortestTime => Vec::new(),
    };
    let route = scenario.plan(trial, scheme, &esm, &cells, src, dst)?;
    let slot = cfg.scenario.schemes.iter().position(|&s| s == scheme).unwrap_or(0);
    let metrics = scenario.simulate(trial, slot, &esm, &route)?;
    let prov = provenance(&cfg)?;

    let path = match ctx.format {
        Format::Json => {
            let doc = RouteDoc {
                cfg_hash: &prov.cfg_hash,
                seed: prov.seed,
                trial,
                route: &route,
                metrics: &metrics,
            };
            write_atomic(&ctx.out, "route.json", &to_json(&doc)?)?
        }
        Format::Csv => {
            let rows: Vec<TraversalRow> = route
                .traversals
                .iter()
                .enumerate()
                .map(|(step, t)| TraversalRow {
                    step,
                    segment: t.segment.0,
                    direction: t.direction,
                    entry: t.entry,
                    exit: t.exit,
                    time_s: t.time,
                })
                .collect();
            write_table(&ctx.out, "route", &rows, Format::Csv, &prov)?
        }
    };
    let used = route.gamma_used.map_or("-".to_string(), |g| format!("{g} Mbps"));
    println!(
        "{scheme} {} -> {}: {} segments, {:.1} s, P_c {:.4}, success {}, γ used {used}",
        src.0,
        dst.0,
        route.segment_count(),
        route.total_time,
        metrics.p_c,
        metrics.success
    );
    report(&[path]);
    Ok(())
}

pub fn montecarlo(ctx: &Context, mut cfg: Config, trials: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = trials {
        cfg.scenario.trials = n;
    }
    let result = run_monte_carlo(&cfg.scenario)?;
    let prov = provenance(&cfg)?;
    let paths = write_monte_carlo(&ctx.out, &result, ctx.format, &prov)?;
    println!("{:<14}  {:>6}  {:>6}  {:>9}  {:>8}  {:>10}", "scheme", "trials", "routed", "success %", "mean P_c", "duration s");
    for s in &result.summary {
        println!(
            "{:<14}  {:>6}  {:>6}  {:>9.1}  {:>8.4}  {:>10.1}",
            s.scheme.as_str(),
            s.trials,
            s.routed,
            s.success_pct,
            s.mean_pc,
            s.mean_duration
        );
    }
    report(&paths);
    Ok(())
}

fn default_values(axis: SweepAxis) -> Vec<f64> {
    match axis {
        SweepAxis::Gamma => vec![40.0, 45.0, 47.5, 50.0, 52.5, 55.0],
        SweepAxis::BsCount => vec![4.0, 6.0, 9.0, 12.0, 16.0],
        SweepAxis::CarrierFrequency => default_carrier_values(),
        SweepAxis::Alpha => default_alpha_values(),
        SweepAxis::MessageLoad => default_message_load_values(),
    }
}

pub fn sweep(
    ctx: &Context,
    mut cfg: Config,
    axis: Option<SweepAxis>,
    values: Option<Vec<f64>>,
    trials: Option<usize>,
) -> Result<(), CliError> {
    let axis = axis
        .or(cfg.sweep.as_ref().map(|s| s.axis))
        .ok_or_else(|| CliError::Config("no sweep axis: pass --axis or set `sweep.axis`".into()))?;
    let values = values
        .or_else(|| cfg.sweep.as_ref().filter(|s| s.axis == axis).map(|s| s.values.clone()))
        .unwrap_or_else(|| default_values(axis));
    if let Some(n) = trials {
        cfg.scenario.trials = n;
    }
    cfg.sweep = Some(crate::config::SweepConfig {
        axis,
        values: values.clone(),
    });
    let prov = provenance(&cfg)?;
    let paths = match axis {
        SweepAxis::Gamma | SweepAxis::BsCount => {
            let rows = sweep_routing(&cfg.scenario, axis, &values)?;
            for r in &rows {
                println!(
                    "{} = {:<6}  {:<14}  success {:>5.1}%  mean P_c {:.4}",
                    axis.as_str(),
                    r.value,
                    r.scheme.as_str(),
                    r.success_pct,
                    r.mean_pc
                );
            }
            if axis == SweepAxis::Gamma {
                write_gamma_sweep(&ctx.out, &rows, ctx.format, &prov)?
            } else {
                write_bs_sweep(&ctx.out, &rows, ctx.format, &prov)?
            }
        }
        _ => {
            let rows = sweep_traffic(&cfg.traffic, axis, &values)?;
            println!("{} rows over {} values of {}", rows.len(), values.len(), axis.as_str());
            write_traffic_sweep(&ctx.out, axis, &rows, ctx.format, &prov)?
        }
    };
    report(&paths);
    Ok(())
}

#[derive(Serialize)]
struct AllocationRow<'a> {
    policy: &'a str,
    road: &'a str,
    cell: &'a str,
    channels: f64,
    flow_av_per_min: f64,
}

fn allocation_rows<'a>(policy: &'a str, alloc: &'a SpectrumAllocation) -> impl Iterator<Item = AllocationRow<'a>> {
    alloc.sections.iter().map(move |s| AllocationRow {
        policy,
        road: &s.road,
        cell: &s.cell,
        channels: s.channels,
        flow_av_per_min: s.flow * 60.0,
    })
}

pub fn balance(
    ctx: &Context,
    mut cfg: Config,
    b0: Option<f64>,
    cross_road: Option<CrossRoadPolicy>,
) -> Result<(), CliError> {
    if let Some(b) = b0 {
        cfg.balance.b0 = b;
    }
    if let Some(c) = cross_road {
        cfg.balance.cross_road = c;
    }
    let incidence = cfg
        .balance
        .incidence
        .clone()
        .unwrap_or_else(|| two_cell_fixture(&cfg.traffic.tdd));
    let b0 = cfg.balance.b0;
    let balanced = balance_spectrum(&incidence, b0, cfg.balance.cross_road)?;
    let equal = apply_policy(&incidence, b0, ControlPolicy::OptimalSpeed, cfg.balance.cross_road)?;
    let prov = provenance(&cfg)?;
    let rows: Vec<AllocationRow> = allocation_rows("balanced", &balanced)
        .chain(allocation_rows("equal-split", &equal))
        .collect();
    let path = write_table(&ctx.out, "balance", &rows, ctx.format, &prov)?;

    println!("per-road flow F_j (AV/min)");
    println!("  {:<12}  {:>6}  {:>10}  {:>11}", "road", "weight", "balanced", "equal split");
    for road in &incidence.roads {
        println!(
            "  {:<12}  {:>6}  {:>10.3}  {:>11.3}",
            road.id,
            road.weight,
            balanced.road_flow(&road.id).unwrap_or(0.0) * 60.0,
            equal.road_flow(&road.id).unwrap_or(0.0) * 60.0
        );
    }
    println!("allocation (balanced, B0 = {b0} channels)");
    println!("  {:<12}  {:<8}  {:>8}  {:>13}", "road", "cell", "channels", "flow (AV/min)");
    for s in &balanced.sections {
        println!("  {:<12}  {:<8}  {:>8.4}  {:>13.3}", s.road, s.cell, s.channels, s.flow * 60.0);
    }
    for cell in &incidence.cells {
        println!(
            "  cell {:<8} {:.4} channels at {:.2} m/s",
            cell.id,
            balanced.cell_channels(&cell.id),
            balanced.cell_speeds.get(&cell.id).copied().unwrap_or(0.0)
        );
    }
    let gain = if equal.total_throughput > 0.0 {
        format!("{:+.1}%", 100.0 * (balanced.total_throughput / equal.total_throughput - 1.0))
    } else {
        "n/a".to_string()
    };
    println!(
        "total throughput: {:.3} AV/min balanced vs {:.3} AV/min equal split ({gain})",
        balanced.total_throughput * 60.0,
        equal.total_throughput * 60.0
    );
    report(&[path]);
    Ok(())
}

