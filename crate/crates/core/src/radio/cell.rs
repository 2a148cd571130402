use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{coverage_radius, point_segment_distance, rate_with_shadowing, BaseStation, BsId, ChannelModel};
use crate::error::{Error, Result};
use crate::net::{EffectiveSpeedMap, IntersectionId, Point, RoadNetwork, SegmentId};

/// Closed sub-interval of a segment, as fractions of its length measured from
/// the segment's first endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const FULL: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

const FULL_SLICE: &[Interval] = &[Interval::FULL];

/// Speed at which coverage is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum EvalSpeed<'a> {
    /// Each segment, its two ends included, at its ESM speed.
    Esm(&'a EffectiveSpeedMap),
    Uniform(f64),
}

impl From<f64> for EvalSpeed<'_> {
    fn from(v: f64) -> Self {
        EvalSpeed::Uniform(v)
    }
}

impl<'a> From<&'a EffectiveSpeedMap> for EvalSpeed<'a> {
    fn from(esm: &'a EffectiveSpeedMap) -> Self {
        EvalSpeed::Esm(esm)
    }
}

/// Sample positions along every segment of a network.
///
/// Segment `s` of length `ℓ` is cut into `n = ceil(ℓ / spacing)` equal pieces;
/// sample `k` sits at fraction `k / n`. Samples `0` and `n` are the segment's
/// endpoints and are shared with the other segments meeting there.
#[derive(Debug, Clone)]
pub struct SampleLayout {
    spacing: f64,
    counts: Vec<u32>,
    base: Vec<usize>,
    owner: Vec<u32>,
    n_intersections: usize,
}

impl SampleLayout {
    pub fn new(network: &RoadNetwork, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("sample_spacing", "must be positive"));
        }
        let mut counts = Vec::with_capacity(network.segments().len());
        let mut base = Vec::with_capacity(network.segments().len());
        let mut owner = Vec::new();
        for seg in network.segments() {
            let n = ((seg.length / spacing).ceil() as u32).max(1);
            base.push(owner.len());
            owner.extend(std::iter::repeat_n(seg.id.0, n as usize - 1));
            counts.push(n);
        }
        Ok(Self {
            spacing,
            counts,
            base,
            owner,
            n_intersections: network.intersections().len(),
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of pieces `n` the segment is cut into.
    pub fn pieces(&self, segment: SegmentId) -> u32 {
        self.counts[segment.index()]
    }

    pub fn fraction(&self, segment: SegmentId, k: u32) -> f64 {
        k as f64 / self.counts[segment.index()] as f64
    }

    fn total(&self) -> usize {
        self.n_intersections + self.owner.len()
    }

    fn node(&self, network: &RoadNetwork, segment: SegmentId, k: u32) -> usize {
        let n = self.counts[segment.index()];
        let seg = &network.segments()[segment.index()];
        if k == 0 {
            seg.endpoints.0.index()
        } else if k == n {
            seg.endpoints.1.index()
        } else {
            self.n_intersections + self.base[segment.index()] + k as usize - 1
        }
    }

    fn interior(&self, node: usize) -> (SegmentId, u32) {
        let i = node - self.n_intersections;
        let s = self.owner[i];
        (SegmentId(s), (i - self.base[s as usize]) as u32 + 1)
    }
}

/// Contiguous region around one base station where the ε-quantile rate is at
/// least γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRateCell {
    pub bs: BsId,
    pub gamma: f64,
    pub epsilon: f64,
    pub covered_intersections: BTreeSet<IntersectionId>,
    /// Segments covered end to end, both endpoints included.
    pub covered_segments: BTreeSet<SegmentId>,
    /// Covered runs of samples on segments that are not fully covered.
    pub partially_covered_segments: BTreeMap<SegmentId, Vec<Interval>>,
}

impl GammaRateCell {
    pub fn empty(bs: BsId, gamma: f64, epsilon: f64) -> Self {
        Self {
            bs,
            gamma,
            epsilon,
            covered_intersections: BTreeSet::new(),
            covered_segments: BTreeSet::new(),
            partially_covered_segments: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.covered_intersections.is_empty() && self.partially_covered_segments.is_empty()
    }

    pub fn contains_intersection(&self, id: IntersectionId) -> bool {
        self.covered_intersections.contains(&id)
    }

    pub fn covers_segment(&self, id: SegmentId) -> bool {
        self.covered_segments.contains(&id)
    }

    /// Covered intervals on a segment; empty when the segment is untouched.
    pub fn intervals(&self, id: SegmentId) -> &[Interval] {
        if self.covered_segments.contains(&id) {
            FULL_SLICE
        } else {
            self.partially_covered_segments
                .get(&id)
                .map(Vec::as_slice)
                .unwrap_or(&[])
        }
    }

    /// Every segment carrying at least one covered interval.
    pub fn touched_segments(&self) -> impl Iterator<Item = SegmentId> + '_ {
        let mut all: Vec<SegmentId> = self
            .covered_segments
            .iter()
            .chain(self.partially_covered_segments.keys())
            .copied()
            .collect();
        all.sort();
        all.into_iter()
    }

    /// True when the covered intersections and intervals form one connected piece.
    pub fn is_contiguous(&self, network: &RoadNetwork) -> bool {
        // Union-find over intersections plus one node per interval.
        let ni = network.intersections().len();
        let mut pieces: Vec<(SegmentId, Interval)> = Vec::new();
        for s in self.touched_segments() {
            for iv in self.intervals(s) {
                pieces.push((s, *iv));
            }
        }
        let mut parent: Vec<usize> = (0..ni + pieces.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut present = vec![false; ni + pieces.len()];
        for ri in &self.covered_intersections {
            present[ri.index()] = true;
        }
        for (i, (s, iv)) in pieces.iter().enumerate() {
            let node = ni + i;
            present[node] = true;
            let (a, b) = network.segments()[s.index()].endpoints;
            for (t, end) in [(0.0, a), (1.0, b)] {
                if iv.contains(t) {
                    if !self.contains_intersection(end) {
                        return false;
                    }
                    let (x, y) = (find(&mut parent, node), find(&mut parent, end.index()));
                    parent[x] = y;
                }
            }
        }
        let mut root = None;
        for (i, &here) in present.iter().enumerate() {
            if here {
                let r = find(&mut parent, i);
                match root {
                    None => root = Some(r),
                    Some(r0) if r0 != r => return false,
                    _ => {}
                }
            }
        }
        true
    }

    /// Whether the point at fraction `t` of `segment` lies in the cell.
    pub fn contains_point(&self, network: &RoadNetwork, segment: SegmentId, t: f64) -> bool {
        let seg = &network.segments()[segment.index()];
        if t <= 0.0 && self.contains_intersection(seg.endpoints.0) {
            return true;
        }
        if t >= 1.0 && self.contains_intersection(seg.endpoints.1) {
            return true;
        }
        self.intervals(segment).iter().any(|iv| iv.contains(t))
    }
}

/// Shared state for computing many cells over one network and speed map.
pub struct CellBuilder<'a> {
    network: &'a RoadNetwork,
    layout: &'a SampleLayout,
    model: &'a ChannelModel,
    epsilon: f64,
    shadow_db: f64,
    segment_speed: Vec<f64>,
    slowest_incident: Vec<f64>,
    min_speed: f64,
}

impl<'a> CellBuilder<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        layout: &'a SampleLayout,
        model: &'a ChannelModel,
        epsilon: f64,
        eval: EvalSpeed<'_>,
    ) -> Result<Self> {
        let shadow_db = model.shadowing_std_db * super::standard_normal_quantile(epsilon)?;
        if layout.counts.len() != network.segments().len() {
            return Err(Error::param("layout", "sample layout built for a different network"));
        }
        let segment_speed: Vec<f64> = match eval {
            EvalSpeed::Esm(esm) => {
                if !esm.covers(network) {
                    return Err(Error::InvalidNetwork("speed map does not match network".into()));
                }
                esm.speeds().to_vec()
            }
            EvalSpeed::Uniform(v) => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::param("speed_for_eval", "must be non-negative"));
                }
                vec![v; network.segments().len()]
            }
        };
        let slowest_incident = network
            .intersections()
            .iter()
            .map(|ri| {
                let v = network
                    .neighbors(ri.id)
                    .iter()
                    .map(|(s, _)| segment_speed[s.index()])
                    .fold(f64::INFINITY, f64::min);
                if v.is_finite() { v } else { 0.0 }
            })
            .collect();
        let min_speed = segment_speed.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            network,
            layout,
            model,
            epsilon,
            shadow_db,
            segment_speed,
            slowest_incident,
            min_speed: if min_speed.is_finite() { min_speed } else { 0.0 },
        })
    }

    pub fn build(&self, bs: &BaseStation, gamma: f64) -> Result<GammaRateCell> {
        let net = self.network;
        let layout = self.layout;
        let mut cell = GammaRateCell::empty(bs.id, gamma, self.epsilon);
        // Nothing can be covered beyond the radius at the slowest speed.
        let Some(reach) = coverage_radius(bs, gamma, self.epsilon, self.min_speed, self.model)? else {
            return Ok(cell);
        };
        let reach = reach * (1.0 + 1e-9) + 1e-9;
        let rate_at = |p: Point, speed: f64| {
            rate_with_shadowing(p.distance(&bs.position), bs, speed, self.shadow_db, self.model)
        };

        let total = layout.total();
        let mut covered = vec![false; total];
        let mut rate = vec![0.0; total];
        // Whether each end of a segment is covered at that segment's speed.
        let mut end_ok = vec![[false; 2]; net.segments().len()];
        let mut candidates = Vec::new();
        for seg in net.segments() {
            let a = net.position(seg.endpoints.0);
            let b = net.position(seg.endpoints.1);
            if point_segment_distance(bs.position, a, b) > reach {
                continue;
            }
            candidates.push(seg.id);
            let v = self.segment_speed[seg.id.index()];
            end_ok[seg.id.index()] = [rate_at(a, v) >= gamma, rate_at(b, v) >= gamma];
            let n = layout.pieces(seg.id);
            for k in 1..n {
                let node = layout.node(net, seg.id, k);
                let r = rate_at(a.lerp(&b, layout.fraction(seg.id, k)), v);
                rate[node] = r;
                covered[node] = r >= gamma;
            }
        }
        let end = |s: SegmentId, ri: IntersectionId| usize::from(net.segments()[s.index()].endpoints.0 != ri);
        for ri in net.intersections() {
            if ri.position.distance(&bs.position) > reach {
                continue;
            }
            let i = ri.id.index();
            covered[i] = net.neighbors(ri.id).iter().any(|&(s, _)| end_ok[s.index()][end(s, ri.id)]);
            rate[i] = rate_at(ri.position, self.slowest_incident[i]);
        }

        // Seed at the best covered sample; ties go to the closest, then the lowest index.
        let mut seed: Option<(usize, f64, f64)> = None;
        let mut consider = |node: usize, p: Point| {
            if !covered[node] {
                return;
            }
            let d = p.distance(&bs.position);
            let better = match seed {
                None => true,
                Some((_, r, d0)) => rate[node] > r || (rate[node] == r && d < d0),
            };
            if better {
                seed = Some((node, rate[node], d));
            }
        };
        for ri in net.intersections() {
            consider(ri.id.index(), ri.position);
        }
        for &s in &candidates {
            let seg = &net.segments()[s.index()];
            let a = net.position(seg.endpoints.0);
            let b = net.position(seg.endpoints.1);
            for k in 1..layout.pieces(s) {
                consider(layout.node(net, s, k), a.lerp(&b, layout.fraction(s, k)));
            }
        }
        let Some((seed, _, _)) = seed else {
            return Ok(cell);
        };

        // An intersection links to a segment only through a covered end, so
        // passing from one segment to another needs both ends covered.
        let mut in_cell = vec![false; total];
        in_cell[seed] = true;
        let mut queue = VecDeque::from([seed]);
        let push = |node: usize, in_cell: &mut [bool], queue: &mut VecDeque<usize>| {
            if covered[node] && !in_cell[node] {
                in_cell[node] = true;
                queue.push_back(node);
            }
        };
        while let Some(u) = queue.pop_front() {
            if u < layout.n_intersections {
                let id = IntersectionId(u as u32);
                for &(s, _) in net.neighbors(id) {
                    let e = end(s, id);
                    let n = layout.pieces(s);
                    if !end_ok[s.index()][e] || (n == 1 && !end_ok[s.index()][1 - e]) {
                        continue;
                    }
                    let k = if e == 0 { 1 } else { n - 1 };
                    push(layout.node(net, s, k), &mut in_cell, &mut queue);
                }
            } else {
                let (s, k) = layout.interior(u);
                let n = layout.pieces(s);
                if k > 1 || end_ok[s.index()][0] {
                    push(layout.node(net, s, k - 1), &mut in_cell, &mut queue);
                }
                if k + 1 < n || end_ok[s.index()][1] {
                    push(layout.node(net, s, k + 1), &mut in_cell, &mut queue);
                }
            }
        }

        for ri in net.intersections() {
            if in_cell[ri.id.index()] {
                cell.covered_intersections.insert(ri.id);
            }
        }
        for &s in &candidates {
            let n = layout.pieces(s);
            let ok = end_ok[s.index()];
            let mut runs = Vec::new();
            let mut start: Option<u32> = None;
            for k in 0..=n {
                let here = in_cell[layout.node(net, s, k)] && (k != 0 || ok[0]) && (k != n || ok[1]);
                match (here, start) {
                    (true, None) => start = Some(k),
                    (false, Some(k0)) => {
                        if k - 1 > k0 {
                            runs.push((k0, k - 1));
                        }
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(k0) = start {
                if n > k0 {
                    runs.push((k0, n));
                }
            }
            if runs == [(0, n)] {
                cell.covered_segments.insert(s);
            } else if !runs.is_empty() {
                let ivs = runs
                    .into_iter()
                    .map(|(k0, k1)| Interval {
                        lo: layout.fraction(s, k0),
                        hi: layout.fraction(s, k1),
                    })
                    .collect();
                cell.partially_covered_segments.insert(s, ivs);
            }
        }
        Ok(cell)
    }
}

/// Computes the γ-rate cell of one base station.
///
/// Every segment is sampled every `sample_spacing` meters (rounded so the
/// samples are evenly spread); a sample is covered when its ε-quantile rate at
/// the evaluation speed is at least `gamma`. The cell is the connected set of
/// covered samples around the station's best sample.
pub fn compute_gamma_cell(
    network: &RoadNetwork,
    bs: &BaseStation,
    gamma: f64,
    epsilon: f64,
    speed_for_eval: EvalSpeed<'_>,
    sample_spacing: f64,
    model: &ChannelModel,
) -> Result<GammaRateCell> {
    let layout = SampleLayout::new(network, sample_spacing)?;
    CellBuilder::new(network, &layout, model, epsilon, speed_for_eval)?.build(bs, gamma)
}
