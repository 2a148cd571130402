use std::collections::HashMap;

use super::graph::{dijkstra, ShortestPaths};
use super::route::Traversal;
use crate::error::Result;
use crate::net::{EffectiveSpeedMap, IntersectionId, RoadNetwork, SegmentId};
use crate::radio::{CoreNode, CoreNodeKind, GammaRateCell};

/// Identity of a point on the road network: an intersection, or an offset
/// (meters, stored as raw bits) strictly inside a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointKey {
    Ri(IntersectionId),
    On(SegmentId, u64),
}

impl PointKey {
    /// Key of the point `offset` meters along `segment`; segment ends map to
    /// their intersections.
    pub fn at(network: &RoadNetwork, segment: SegmentId, offset: f64) -> Self {
        let seg = &network.segments()[segment.index()];
        if offset <= 0.0 {
            PointKey::Ri(seg.endpoints.0)
        } else if offset >= seg.length {
            PointKey::Ri(seg.endpoints.1)
        } else {
            PointKey::On(segment, offset.to_bits())
        }
    }

    pub fn of_core(network: &RoadNetwork, node: &CoreNode) -> Self {
        match node.kind {
            CoreNodeKind::Intersection { id } => PointKey::Ri(id),
            CoreNodeKind::Midpoint { segment, offset } => PointKey::at(network, segment, offset),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    time: f64,
    segment: SegmentId,
    from_offset: f64,
    to_offset: f64,
}

/// Covered subgraph of one cell, with extra nodes wherever core nodes sit
/// inside segments. Edge weights are travel times at ESM speed.
#[derive(Debug, Clone)]
pub struct CellGraph {
    keys: Vec<PointKey>,
    index: HashMap<PointKey, usize>,
    adjacency: Vec<Vec<Arc>>,
}

impl CellGraph {
    /// `extra` lists additional points `(segment, offset meters)`; points that
    /// fall outside the cell's covered intervals are ignored.
    pub fn new(
        network: &RoadNetwork,
        cell: &GammaRateCell,
        esm: &EffectiveSpeedMap,
        extra: &[(SegmentId, f64)],
    ) -> Result<Self> {
        let mut g = CellGraph {
            keys: Vec::new(),
            index: HashMap::new(),
            adjacency: Vec::new(),
        };
        for &ri in &cell.covered_intersections {
            g.intern(PointKey::Ri(ri));
        }
        let mut extra_by_segment: HashMap<SegmentId, Vec<f64>> = HashMap::new();
        for &(s, off) in extra {
            extra_by_segment.entry(s).or_default().push(off);
        }
        for s in cell.touched_segments() {
            let length = network.segment(s)?.length;
            let speed = esm.speed(s)?;
            for iv in cell.intervals(s) {
                let (lo, hi) = (iv.lo * length, iv.hi * length);
                let mut offsets = vec![lo, hi];
                if let Some(more) = extra_by_segment.get(&s) {
                    offsets.extend(more.iter().copied().filter(|&o| lo <= o && o <= hi));
                }
                offsets.sort_by(f64::total_cmp);
                offsets.dedup();
                for w in offsets.windows(2) {
                    let a = g.intern(PointKey::at(network, s, w[0]));
                    let b = g.intern(PointKey::at(network, s, w[1]));
                    let time = (w[1] - w[0]) / speed;
                    g.adjacency[a].push(Arc {
                        to: b,
                        time,
                        segment: s,
                        from_offset: w[0],
                        to_offset: w[1],
                    });
                    g.adjacency[b].push(Arc {
                        to: a,
                        time,
                        segment: s,
                        from_offset: w[1],
                        to_offset: w[0],
                    });
                }
                if offsets.len() == 1 {
                    g.intern(PointKey::at(network, s, offsets[0]));
                }
            }
        }
        Ok(g)
    }

    fn intern(&mut self, key: PointKey) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.keys.len();
        self.keys.push(key);
        self.index.insert(key, i);
        self.adjacency.push(Vec::new());
        i
    }

    pub fn node(&self, key: PointKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn key(&self, node: usize) -> PointKey {
        self.keys[node]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn shortest_from(&self, node: usize) -> ShortestPaths {
        dijkstra(&self.adjacency, node, |a| (a.to, a.time))
    }

    /// Pieces of the shortest path to `target`, or `None` when unreachable.
    pub fn path(&self, sp: &ShortestPaths, esm: &EffectiveSpeedMap, target: usize) -> Option<Vec<Traversal>> {
        let edges = sp.edges_to(target)?;
        Some(
            edges
                .into_iter()
                .map(|(u, k)| {
                    let a = self.adjacency[u][k];
                    Traversal::partial(esm, a.segment, a.from_offset, a.to_offset).expect("segment has a speed")
                })
                .collect(),
        )
    }
}

/// Shortest times inside one cell between point sets.
#[derive(Debug, Clone)]
pub struct IntraTimes {
    /// `times[i][j]`: from `from[i]` to `to[j]`, `INFINITY` when unreachable.
    pub times: Vec<Vec<f64>>,
    pub paths: Vec<Vec<Option<Vec<Traversal>>>>,
}

/// Shortest travel times within `cell` from every `from` point to every `to`
/// point, together with the underlying road paths.
pub fn intra_cell_times(
    network: &RoadNetwork,
    cell: &GammaRateCell,
    esm: &EffectiveSpeedMap,
    from: &[PointKey],
    to: &[PointKey],
) -> Result<IntraTimes> {
    let extra: Vec<(SegmentId, f64)> = from
        .iter()
        .chain(to)
        .filter_map(|k| match *k {
            PointKey::On(s, bits) => Some((s, f64::from_bits(bits))),
            PointKey::Ri(_) => None,
        })
        .collect();
    let g = CellGraph::new(network, cell, esm, &extra)?;
    let mut times = Vec::with_capacity(from.len());
    let mut paths = Vec::with_capacity(from.len());
    for &f in from {
        let Some(src) = g.node(f) else {
            times.push(vec![f64::INFINITY; to.len()]);
            paths.push(vec![None; to.len()]);
            continue;
        };
        let sp = g.shortest_from(src);
        let mut row_t = Vec::with_capacity(to.len());
        let mut row_p = Vec::with_capacity(to.len());
        for &t in to {
            match g.node(t) {
                Some(dst) if sp.dist[dst].is_finite() => {
                    row_t.push(sp.dist[dst]);
                    row_p.push(g.path(&sp, esm, dst));
                }
                _ => {
                    row_t.push(f64::INFINITY);
                    row_p.push(None);
                }
            }
        }
        times.push(row_t);
        paths.push(row_p);
    }
    Ok(IntraTimes { times, paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{assign_esm, generate_grid};
    use crate::radio::{BsId, Interval};

    fn full_cell(net: &RoadNetwork) -> GammaRateCell {
        let mut c = GammaRateCell::empty(BsId(0), 0.0, 0.01);
        c.covered_intersections = net.intersections().iter().map(|r| r.id).collect();
        c.covered_segments = net.segments().iter().map(|s| s.id).collect();
        c
    }

    #[test]
    fn same_node_is_free() {
        let net = generate_grid(3, 3, 250.0, 100.0).unwrap();
        let esm = EffectiveSpeedMap::uniform(&net, 10.0).unwrap();
        let k = [PointKey::Ri(IntersectionId(4))];
        let t = intra_cell_times(&net, &full_cell(&net), &esm, &k, &k).unwrap();
        assert_eq!(t.times[0][0], 0.0);
        assert_eq!(t.paths[0][0].as_deref(), Some(&[][..]));
    }

    #[test]
    fn single_edge() {
        let net = generate_grid(2, 2, 250.0, 100.0).unwrap();
        let esm = EffectiveSpeedMap::uniform(&net, 10.0).unwrap();
        let mut cell = GammaRateCell::empty(BsId(0), 1.0, 0.01);
        cell.covered_intersections = [IntersectionId(0), IntersectionId(1)].into();
        cell.covered_segments = [SegmentId(0)].into();
        let t = intra_cell_times(
            &net,
            &cell,
            &esm,
            &[PointKey::Ri(IntersectionId(0))],
            &[PointKey::Ri(IntersectionId(1)), PointKey::Ri(IntersectionId(3))],
        )
        .unwrap();
        assert_eq!(t.times[0][0], 25.0);
        assert_eq!(t.times[0][1], f64::INFINITY);
    }

    #[test]
    fn partial_interval_and_midpoint() {
        let net = generate_grid(2, 2, 250.0, 100.0).unwrap();
        let esm = EffectiveSpeedMap::uniform(&net, 10.0).unwrap();
        let mut cell = GammaRateCell::empty(BsId(0), 1.0, 0.01);
        cell.covered_intersections = [IntersectionId(0)].into();
        cell.partially_covered_segments.insert(SegmentId(0), vec![Interval { lo: 0.0, hi: 0.6 }]);
        let mid = PointKey::at(&net, SegmentId(0), 125.0);
        let end = PointKey::at(&net, SegmentId(0), 150.0);
        let t = intra_cell_times(&net, &cell, &esm, &[PointKey::Ri(IntersectionId(0))], &[mid, end]).unwrap();
        assert_eq!(t.times[0], vec![12.5, 15.0]);
        let beyond = PointKey::at(&net, SegmentId(0), 200.0);
        let t = intra_cell_times(&net, &cell, &esm, &[PointKey::Ri(IntersectionId(0))], &[beyond]).unwrap();
        assert_eq!(t.times[0][0], f64::INFINITY);
    }

    #[test]
    fn covered_grid_matches_floyd_warshall() {
        let net = generate_grid(3, 3, 250.0, 100.0).unwrap();
        let esm = assign_esm(&net, &[10.0, 20.0, 30.0], 5).unwrap();
        let n = 9;
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for s in net.segments() {
            let (a, b) = (s.endpoints.0.index(), s.endpoints.1.index());
            let w = s.length / esm.speeds()[s.id.index()];
            d[a][b] = d[a][b].min(w);
            d[b][a] = d[b][a].min(w);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let keys: Vec<PointKey> = (0..n as u32).map(|i| PointKey::Ri(IntersectionId(i))).collect();
        let t = intra_cell_times(&net, &full_cell(&net), &esm, &keys, &keys).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((t.times[i][j] - d[i][j]).abs() < 1e-9);
            }
        }
    }
}
