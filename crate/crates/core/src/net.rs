//! Road-network model.
//!
//! A [`RoadNetwork`] is an undirected planar graph whose nodes are road
//! intersections (RIs) and whose edges are road segments (RSs). Ids are dense
//! integers: intersection `i` lives at index `i`, segment `s` at index `s`.
//! Grid networks number intersections in row-major lattice order
//! (`street * avenues + avenue`) and segments in the order they are met while
//! scanning intersections row-major, east-bound segment first.
//!
//! An [`EffectiveSpeedMap`] assigns one speed to every segment and is frozen
//! for the duration of a routing query.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntersectionId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub u32);

impl IntersectionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl SegmentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for IntersectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RI{}", self.0)
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RS{}", self.0)
    }
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point at fraction `t` of the way from `self` to `other`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub id: IntersectionId,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: SegmentId,
    pub endpoints: (IntersectionId, IntersectionId),
    pub length: f64,
    pub midpoint: Point,
}

impl Segment {
    /// The endpoint opposite to `from`, if `from` is an endpoint.
    pub fn other_end(&self, from: IntersectionId) -> Option<IntersectionId> {
        if self.endpoints.0 == from {
            Some(self.endpoints.1)
        } else if self.endpoints.1 == from {
            Some(self.endpoints.0)
        } else {
            None
        }
    }
}

/// Lattice dimensions of a generated grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub avenues: u32,
    pub streets: u32,
    pub block_length: f64,
    pub block_width: f64,
}

impl GridShape {
    pub fn width(&self) -> f64 {
        (self.avenues - 1) as f64 * self.block_length
    }

    pub fn height(&self) -> f64 {
        (self.streets - 1) as f64 * self.block_width
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetworkDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridShape>,
    intersections: Vec<Intersection>,
    segments: Vec<Segment>,
}

/// Undirected road graph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct RoadNetwork {
    intersections: Vec<Intersection>,
    segments: Vec<Segment>,
    grid: Option<GridShape>,
    adjacency: Vec<Vec<(SegmentId, IntersectionId)>>,
}

impl TryFrom<NetworkDocument> for RoadNetwork {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        RoadNetwork::new(doc.intersections, doc.segments, doc.grid)
    }
}

impl From<RoadNetwork> for NetworkDocument {
    fn from(net: RoadNetwork) -> Self {
        NetworkDocument {
            grid: net.grid,
            intersections: net.intersections,
            segments: net.segments,
        }
    }
}

impl RoadNetwork {
    /// Builds a network, validating ids, endpoints and lengths.
    pub fn new(
        intersections: Vec<Intersection>,
        segments: Vec<Segment>,
        grid: Option<GridShape>,
    ) -> Result<Self> {
        for (i, ri) in intersections.iter().enumerate() {
            if ri.id.index() != i {
                return Err(Error::InvalidNetwork(format!(
                    "intersection at position {i} has id {}; ids must be dense and ordered",
                    ri.id.0
                )));
            }
            if !ri.position.is_finite() {
                return Err(Error::InvalidNetwork(format!("{} has a non-finite position", ri.id)));
            }
        }
        let mut adjacency = vec![Vec::new(); intersections.len()];
        for (s, seg) in segments.iter().enumerate() {
            if seg.id.index() != s {
                return Err(Error::InvalidNetwork(format!(
                    "segment at position {s} has id {}; ids must be dense and ordered",
                    seg.id.0
                )));
            }
            let (a, b) = seg.endpoints;
            if a.index() >= intersections.len() || b.index() >= intersections.len() {
                return Err(Error::InvalidNetwork(format!("{} references a missing endpoint", seg.id)));
            }
            if a == b {
                return Err(Error::InvalidNetwork(format!("{} is a self loop", seg.id)));
            }
            if !(seg.length > 0.0 && seg.length.is_finite()) {
                return Err(Error::InvalidNetwork(format!("{} has non-positive length", seg.id)));
            }
            adjacency[a.index()].push((seg.id, b));
            adjacency[b.index()].push((seg.id, a));
        }
        Ok(Self {
            intersections,
            segments,
            grid,
            adjacency,
        })
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn grid(&self) -> Option<&GridShape> {
        self.grid.as_ref()
    }

    pub fn intersection(&self, id: IntersectionId) -> Result<&Intersection> {
        self.intersections
            .get(id.index())
            .ok_or(Error::UnknownIntersection(id))
    }

    pub fn segment(&self, id: SegmentId) -> Result<&Segment> {
        self.segments.get(id.index()).ok_or(Error::UnknownSegment(id))
    }

    pub fn position(&self, id: IntersectionId) -> Point {
        self.intersections[id.index()].position
    }

    /// Incident `(segment, neighbour)` pairs of an intersection.
    pub fn neighbors(&self, id: IntersectionId) -> &[(SegmentId, IntersectionId)] {
        &self.adjacency[id.index()]
    }

    /// Point at `offset` meters along `segment`, measured from its first endpoint.
    pub fn point_on(&self, segment: SegmentId, offset: f64) -> Point {
        let seg = &self.segments[segment.index()];
        let a = self.position(seg.endpoints.0);
        let b = self.position(seg.endpoints.1);
        a.lerp(&b, (offset / seg.length).clamp(0.0, 1.0))
    }

    pub fn contains(&self, id: IntersectionId) -> bool {
        id.index() < self.intersections.len()
    }

    pub fn is_connected(&self) -> bool {
        if self.intersections.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.intersections.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(_, v) in &self.adjacency[u] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    queue.push_back(v.index());
                }
            }
        }
        count == self.intersections.len()
    }

    /// `(avenue, street)` lattice coordinates of an intersection on a grid.
    pub fn lattice(&self, id: IntersectionId) -> Option<(u32, u32)> {
        let g = self.grid.as_ref()?;
        if !self.contains(id) {
            return None;
        }
        Some((id.0 % g.avenues, id.0 / g.avenues))
    }

    pub fn at_lattice(&self, avenue: u32, street: u32) -> Option<IntersectionId> {
        let g = self.grid.as_ref()?;
        (avenue < g.avenues && street < g.streets).then(|| IntersectionId(street * g.avenues + avenue))
    }

    /// Manhattan hop distance between two grid intersections.
    pub fn lattice_distance(&self, a: IntersectionId, b: IntersectionId) -> Option<u32> {
        let (ax, ay) = self.lattice(a)?;
        let (bx, by) = self.lattice(b)?;
        Some(ax.abs_diff(bx) + ay.abs_diff(by))
    }

    /// Splits `segment` at `offset` meters from its first endpoint, inserting a
    /// new intersection there. The original segment keeps its id and now ends
    /// at the new intersection; the remainder gets the next free segment id.
    /// The result is no longer tagged as a grid.
    pub fn split_segment(&self, segment: SegmentId, offset: f64) -> Result<SplitSegment> {
        let seg = self.segment(segment)?.clone();
        if !(offset > 0.0 && offset < seg.length) {
            return Err(Error::param("offset", "split point must lie strictly inside the segment"));
        }
        let position = self.point_on(segment, offset);
        let new_ri = IntersectionId(self.intersections.len() as u32);
        let mut intersections = self.intersections.clone();
        intersections.push(Intersection {
            id: new_ri,
            position,
        });
        let (a, b) = seg.endpoints;
        let pa = self.position(a);
        let pb = self.position(b);
        let tail = SegmentId(self.segments.len() as u32);
        let mut segments = self.segments.clone();
        segments[segment.index()] = Segment {
            id: segment,
            endpoints: (a, new_ri),
            length: offset,
            midpoint: pa.lerp(&position, 0.5),
        };
        segments.push(Segment {
            id: tail,
            endpoints: (new_ri, b),
            length: seg.length - offset,
            midpoint: position.lerp(&pb, 0.5),
        });
        Ok(SplitSegment {
            network: RoadNetwork::new(intersections, segments, None)?,
            intersection: new_ri,
            head: segment,
            tail,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SplitSegment {
    pub network: RoadNetwork,
    pub intersection: IntersectionId,
    pub head: SegmentId,
    pub tail: SegmentId,
}

/// Generates a rectangular grid: `avenues` columns spaced `block_length`
/// apart and `streets` rows spaced `block_width` apart.
pub fn generate_grid(
    avenues: u32,
    streets: u32,
    block_length: f64,
    block_width: f64,
) -> Result<RoadNetwork> {
    if avenues < 2 || streets < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 avenues and 2 streets, got {avenues}x{streets}"
        )));
    }
    if !(block_length > 0.0 && block_width > 0.0) || !block_length.is_finite() || !block_width.is_finite() {
        return Err(Error::InvalidGrid("block dimensions must be positive".into()));
    }
    let shape = GridShape {
        avenues,
        streets,
        block_length,
        block_width,
    };
    let mut intersections = Vec::with_capacity((avenues * streets) as usize);
    for s in 0..streets {
        for a in 0..avenues {
            intersections.push(Intersection {
                id: IntersectionId(s * avenues + a),
                position: Point::new(a as f64 * block_length, s as f64 * block_width),
            });
        }
    }
    let mut segments = Vec::new();
    let push = |from: u32, to: u32, segments: &mut Vec<Segment>| {
        let pa = intersections[from as usize].position;
        let pb = intersections[to as usize].position;
        segments.push(Segment {
            id: SegmentId(segments.len() as u32),
            endpoints: (IntersectionId(from), IntersectionId(to)),
            length: pa.distance(&pb),
            midpoint: pa.lerp(&pb, 0.5),
        });
    };
    for s in 0..streets {
        for a in 0..avenues {
            let id = s * avenues + a;
            if a + 1 < avenues {
                push(id, id + 1, &mut segments);
            }
            if s + 1 < streets {
                push(id, id + avenues, &mut segments);
            }
        }
    }
    RoadNetwork::new(intersections, segments, Some(shape))
}

/// Per-segment effective speed in m/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<SegmentId, f64>", into = "BTreeMap<SegmentId, f64>")]
pub struct EffectiveSpeedMap {
    speeds: Vec<f64>,
}

impl TryFrom<BTreeMap<SegmentId, f64>> for EffectiveSpeedMap {
    type Error = Error;

    fn try_from(map: BTreeMap<SegmentId, f64>) -> Result<Self> {
        let speeds: Vec<f64> = map.values().copied().collect();
        for (i, id) in map.keys().enumerate() {
            if id.index() != i {
                return Err(Error::MissingSpeed(SegmentId(i as u32)));
            }
        }
        EffectiveSpeedMap::from_speeds(speeds)
    }
}

impl From<EffectiveSpeedMap> for BTreeMap<SegmentId, f64> {
    fn from(esm: EffectiveSpeedMap) -> Self {
        esm.speeds
            .into_iter()
            .enumerate()
            .map(|(i, v)| (SegmentId(i as u32), v))
            .collect()
    }
}

impl EffectiveSpeedMap {
    pub fn from_speeds(speeds: Vec<f64>) -> Result<Self> {
        if speeds.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSpeedSet);
        }
        Ok(Self { speeds })
    }

    /// Same speed on every segment of `network`.
    pub fn uniform(network: &RoadNetwork, speed: f64) -> Result<Self> {
        Self::from_speeds(vec![speed; network.segments().len()])
    }

    pub fn speed(&self, segment: SegmentId) -> Result<f64> {
        self.speeds
            .get(segment.index())
            .copied()
            .ok_or(Error::MissingSpeed(segment))
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    /// True when the map has exactly one entry per segment of `network`.
    pub fn covers(&self, network: &RoadNetwork) -> bool {
        self.speeds.len() == network.segments().len()
    }

    /// Fastest speed among the segments incident to `ri`.
    pub fn max_incident(&self, network: &RoadNetwork, ri: IntersectionId) -> Option<f64> {
        network
            .neighbors(ri)
            .iter()
            .map(|(s, _)| self.speeds[s.index()])
            .reduce(f64::max)
    }

    /// Speed map for a network produced by [`RoadNetwork::split_segment`].
    pub fn for_split(&self, split: &SplitSegment) -> Result<Self> {
        let mut speeds = self.speeds.clone();
        speeds.push(self.speed(split.head)?);
        Self::from_speeds(speeds)
    }
}

/// Draws each segment's speed uniformly from `speed_set`, deterministically in `seed`.
pub fn assign_esm(network: &RoadNetwork, speed_set: &[f64], seed: u64) -> Result<EffectiveSpeedMap> {
    if speed_set.is_empty() || speed_set.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidSpeedSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speeds = network
        .segments()
        .iter()
        .map(|_| speed_set[rng.random_range(0..speed_set.len())])
        .collect();
    EffectiveSpeedMap::from_speeds(speeds)
}

/// Travel time over a whole segment: length over effective speed.
pub fn edge_travel_time(segment: &Segment, esm: &EffectiveSpeedMap) -> Result<f64> {
    Ok(segment.length / esm.speed(segment.id)?)
}

/// Serialized form of a network together with its speed map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkWithSpeeds {
    pub network: RoadNetwork,
    pub speeds: EffectiveSpeedMap,
}

impl NetworkWithSpeeds {
    pub fn new(network: RoadNetwork, speeds: EffectiveSpeedMap) -> Result<Self> {
        if !speeds.covers(&network) {
            return Err(Error::InvalidNetwork(format!(
                "speed map has {} entries for {} segments",
                speeds.len(),
                network.segments().len()
            )));
        }
        Ok(Self { network, speeds })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkWithSpeeds = serde_json::from_str(text)?;
        Self::new(doc.network, doc.speeds)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
