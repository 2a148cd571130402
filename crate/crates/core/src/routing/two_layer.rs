use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::graph::{Entry, ShortestPaths};
use super::intra::{CellGraph, PointKey};
use super::route::{Route, Scheme, Traversal};
use super::top::{build_top_layer, enumerate_top_paths, TopLayerGraph};
use crate::error::{Error, Result};
use crate::net::{EffectiveSpeedMap, IntersectionId, RoadNetwork, SegmentId};
use crate::radio::{Deployment, EvalSpeed, GammaRateCell, SampleLayout};

/// How the top layer is searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopLayerSearch {
    /// Shortest path over (cell, core node) states. Cell sequences may repeat a
    /// cell, which matters when one cell's coverage of a segment is split in
    /// two by a gap that another cell fills.
    #[default]
    Exhaustive,
    /// Enumerate simple top-layer paths and run the boundary-by-boundary
    /// dynamic program on each.
    SimplePaths,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerOptions {
    pub search: TopLayerSearch,
    pub max_paths: usize,
}

impl Default for TwoLayerOptions {
    fn default() -> Self {
        Self {
            search: TopLayerSearch::Exhaustive,
            max_paths: 10_000,
        }
    }
}

/// Per-cell graphs with their ports (core nodes and trip endpoints) and a
/// cache of single-source searches.
struct Planner<'a> {
    network: &'a RoadNetwork,
    esm: &'a EffectiveSpeedMap,
    top: TopLayerGraph,
    graphs: Vec<Option<CellGraph>>,
    ports: Vec<Vec<PointKey>>,
    /// Cells reachable from `(cell, point)` by a zero-time hand-over.
    transfers: HashMap<(usize, PointKey), Vec<usize>>,
    cache: HashMap<(usize, usize), ShortestPaths>,
    src: PointKey,
    dst: PointKey,
    src_cells: Vec<usize>,
    dst_cells: Vec<usize>,
}

impl<'a> Planner<'a> {
    fn new(
        network: &'a RoadNetwork,
        cells: &[GammaRateCell],
        esm: &'a EffectiveSpeedMap,
        src: IntersectionId,
        dst: IntersectionId,
    ) -> Result<Self> {
        network.intersection(src)?;
        network.intersection(dst)?;
        let src_cells: Vec<usize> = (0..cells.len()).filter(|&c| cells[c].contains_intersection(src)).collect();
        if src_cells.is_empty() {
            return Err(Error::SourceUncovered(src));
        }
        let dst_cells: Vec<usize> = (0..cells.len()).filter(|&c| cells[c].contains_intersection(dst)).collect();
        if dst_cells.is_empty() {
            return Err(Error::DestinationUncovered(dst));
        }
        let top = build_top_layer(network, cells);
        let mut ports: Vec<Vec<PointKey>> = vec![Vec::new(); cells.len()];
        let mut transfers: HashMap<(usize, PointKey), Vec<usize>> = HashMap::new();
        for ((i, j), nodes) in top.edges() {
            for node in nodes {
                let key = PointKey::of_core(network, node);
                ports[i].push(key);
                ports[j].push(key);
                transfers.entry((i, key)).or_default().push(j);
                transfers.entry((j, key)).or_default().push(i);
            }
        }
        for &c in &src_cells {
            ports[c].push(PointKey::Ri(src));
        }
        for &c in &dst_cells {
            ports[c].push(PointKey::Ri(dst));
        }
        for p in ports.iter_mut() {
            p.sort();
            p.dedup();
        }
        for list in transfers.values_mut() {
            list.sort();
            list.dedup();
        }
        let mut graphs = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if ports[c].is_empty() {
                graphs.push(None);
                continue;
            }
            let extra: Vec<(SegmentId, f64)> = ports[c]
                .iter()
                .filter_map(|k| match *k {
                    PointKey::On(s, bits) => Some((s, f64::from_bits(bits))),
                    PointKey::Ri(_) => None,
                })
                .collect();
            graphs.push(Some(CellGraph::new(network, cell, esm, &extra)?));
        }
        Ok(Self {
            network,
            esm,
            top,
            graphs,
            ports,
            transfers,
            cache: HashMap::new(),
            src: PointKey::Ri(src),
            dst: PointKey::Ri(dst),
            src_cells,
            dst_cells,
        })
    }

    fn search_from(&mut self, cell: usize, from: PointKey) -> Option<&ShortestPaths> {
        let g = self.graphs[cell].as_ref()?;
        let node = g.node(from)?;
        Some(self.cache.entry((cell, node)).or_insert_with(|| g.shortest_from(node)))
    }

    /// Minimum time inside `cell` from `from` to `to`.
    fn leg_time(&mut self, cell: usize, from: PointKey, to: PointKey) -> f64 {
        let Some(target) = self.graphs[cell].as_ref().and_then(|g| g.node(to)) else {
            return f64::INFINITY;
        };
        match self.search_from(cell, from) {
            Some(sp) => sp.dist[target],
            None => f64::INFINITY,
        }
    }

    fn leg_pieces(&mut self, cell: usize, from: PointKey, to: PointKey) -> Vec<Traversal> {
        let esm = self.esm;
        let target = self.graphs[cell].as_ref().and_then(|g| g.node(to)).expect("leg target is a port");
        let sp = self.search_from(cell, from).expect("leg source is a port").clone();
        self.graphs[cell]
            .as_ref()
            .unwrap()
            .path(&sp, esm, target)
            .expect("leg was reachable")
    }

    fn exhaustive(&mut self) -> Option<Vec<(usize, PointKey, PointKey)>> {
        #[derive(Clone, Copy)]
        enum Pred {
            Start,
            Leg(usize),
            HandOver(usize),
        }
        let mut states: Vec<(usize, PointKey)> = Vec::new();
        let mut index: HashMap<(usize, PointKey), usize> = HashMap::new();
        let mut dist: Vec<f64> = Vec::new();
        let mut pred: Vec<Pred> = Vec::new();
        let mut done: Vec<bool> = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut intern = |s: (usize, PointKey), states: &mut Vec<_>, dist: &mut Vec<f64>, pred: &mut Vec<Pred>, done: &mut Vec<bool>| {
            *index.entry(s).or_insert_with(|| {
                states.push(s);
                dist.push(f64::INFINITY);
                pred.push(Pred::Start);
                done.push(false);
                states.len() - 1
            })
        };
        for &c in &self.src_cells.clone() {
            let i = intern((c, self.src), &mut states, &mut dist, &mut pred, &mut done);
            dist[i] = 0.0;
            heap.push(Entry { time: 0.0, node: i });
        }
        let mut goal = None;
        while let Some(Entry { time, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            let (cell, key) = states[node];
            if key == self.dst {
                goal = Some(node);
                break;
            }
            let mut relax = |next: (usize, PointKey), t: f64, how: Pred, states: &mut Vec<_>, dist: &mut Vec<f64>, pred: &mut Vec<Pred>, done: &mut Vec<bool>, heap: &mut BinaryHeap<Entry>| {
                let j = intern(next, states, dist, pred, done);
                if t < dist[j] {
                    dist[j] = t;
                    pred[j] = how;
                    heap.push(Entry { time: t, node: j });
                }
            };
            if let Some(others) = self.transfers.get(&(cell, key)).cloned() {
                for other in others {
                    relax((other, key), time, Pred::HandOver(node), &mut states, &mut dist, &mut pred, &mut done, &mut heap);
                }
            }
            let ports = self.ports[cell].clone();
            for q in ports {
                if q == key {
                    continue;
                }
                let t = self.leg_time(cell, key, q);
                if t.is_finite() {
                    relax((cell, q), time + t, Pred::Leg(node), &mut states, &mut dist, &mut pred, &mut done, &mut heap);
                }
            }
        }
        let mut at = goal?;
        let mut legs = Vec::new();
        loop {
            match pred[at] {
                Pred::Start => break,
                Pred::HandOver(prev) => at = prev,
                Pred::Leg(prev) => {
                    legs.push((states[at].0, states[prev].1, states[at].1));
                    at = prev;
                }
            }
        }
        legs.reverse();
        Some(legs)
    }

    fn simple_paths(&mut self, max_paths: usize) -> Option<Vec<(usize, PointKey, PointKey)>> {
        let mut best: Option<(f64, Vec<(usize, PointKey, PointKey)>)> = None;
        for s in self.src_cells.clone() {
            for d in self.dst_cells.clone() {
                for path in enumerate_top_paths(&self.top, s, d, max_paths) {
                    let cells = path.0;
                    // layer: point -> (time, index of predecessor entry in the previous layer)
                    let mut layers: Vec<Vec<(PointKey, f64, usize)>> = vec![vec![(self.src, 0.0, 0)]];
                    for j in 0..cells.len() {
                        let targets: Vec<PointKey> = if j + 1 < cells.len() {
                            let mut keys: Vec<PointKey> = self
                                .top
                                .core_nodes(cells[j], cells[j + 1])
                                .iter()
                                .map(|n| PointKey::of_core(self.network, n))
                                .collect();
                            keys.sort();
                            keys.dedup();
                            keys
                        } else {
                            vec![self.dst]
                        };
                        let prev = layers.last().unwrap().clone();
                        let mut layer = Vec::with_capacity(targets.len());
                        for m in targets {
                            let mut cand = (f64::INFINITY, 0);
                            for (n_idx, &(n, t_n, _)) in prev.iter().enumerate() {
                                if !t_n.is_finite() {
                                    continue;
                                }
                                let t = t_n + self.leg_time(cells[j], n, m);
                                if t < cand.0 {
                                    cand = (t, n_idx);
                                }
                            }
                            layer.push((m, cand.0, cand.1));
                        }
                        layers.push(layer);
                    }
                    let (_, total, _) = layers.last().unwrap()[0];
                    if !total.is_finite() || best.as_ref().is_some_and(|(b, _)| total >= *b) {
                        continue;
                    }
                    let mut legs = Vec::with_capacity(cells.len());
                    let mut idx = 0;
                    for j in (0..cells.len()).rev() {
                        let (to, _, p) = layers[j + 1][idx];
                        let (from, _, _) = layers[j][p];
                        legs.push((cells[j], from, to));
                        idx = p;
                    }
                    legs.reverse();
                    best = Some((total, legs));
                }
            }
        }
        best.map(|(_, legs)| legs)
    }
}

/// Two-layer route through a fixed set of cells (no γ fallback).
///
/// The result stays inside the union of the cells it passes through and
/// hands over between cells only at core nodes.
pub fn route_in_cells(
    network: &RoadNetwork,
    cells: &[GammaRateCell],
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    gamma: f64,
    options: TwoLayerOptions,
) -> Result<Route> {
    let mut planner = Planner::new(network, cells, esm, src, dst)?;
    let legs = match options.search {
        TopLayerSearch::Exhaustive => planner.exhaustive(),
        TopLayerSearch::SimplePaths => planner.simple_paths(options.max_paths),
    }
    .ok_or(Error::NoRoute { src, dst, gamma })?;
    let mut pieces = Vec::new();
    for (cell, from, to) in legs {
        if from != to {
            pieces.extend(planner.leg_pieces(cell, from, to));
        }
    }
    let mut route = Route::new(Scheme::TwoLayer, src, dst, pieces);
    route.gamma_used = Some(gamma);
    Ok(route)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerParams {
    pub gamma: f64,
    pub gamma_floor: f64,
    pub gamma_step: f64,
    pub epsilon: f64,
    pub options: TwoLayerOptions,
}

impl Default for TwoLayerParams {
    fn default() -> Self {
        Self {
            gamma: 55.0,
            gamma_floor: 0.0,
            gamma_step: 5.0,
            epsilon: 0.01,
            options: TwoLayerOptions::default(),
        }
    }
}

/// Thresholds tried in order: `gamma`, then lower by `step` down to `floor`.
pub fn gamma_schedule(gamma: f64, floor: f64, step: f64) -> Vec<f64> {
    let mut out = vec![gamma];
    if step <= 0.0 || gamma <= floor {
        return out;
    }
    let mut k = 1.0;
    loop {
        let g = gamma - k * step;
        if g < floor + 1e-9 * step {
            break;
        }
        out.push(g);
        k += 1.0;
    }
    if *out.last().unwrap() > floor {
        out.push(floor);
    }
    out
}

/// Two-layer routing with γ fallback: when no route exists at the requested
/// threshold the cells are recomputed at lower thresholds until one does.
pub fn two_layer_route(
    network: &RoadNetwork,
    deployment: &Deployment,
    layout: &SampleLayout,
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    params: &TwoLayerParams,
) -> Result<Route> {
    let mut last = None;
    for gamma in gamma_schedule(params.gamma, params.gamma_floor, params.gamma_step) {
        let cells = deployment.cells(network, layout, gamma, params.epsilon, EvalSpeed::Esm(esm))?;
        match route_in_cells(network, &cells, esm, src, dst, gamma, params.options) {
            Ok(r) => return Ok(r),
            Err(e) if e.is_routing_failure() => {
                log::debug!("no two-layer route at γ = {gamma}: {e}");
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::NoRoute {
        src,
        dst,
        gamma: params.gamma_floor,
    }))
}
