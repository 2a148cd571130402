use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{EffectiveSpeedMap, IntersectionId, RoadNetwork, SegmentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// From the segment's first endpoint toward its second.
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    TwoLayer,
    Greedy,
    GreedyCc,
    ShortestTime,
    Oracle,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::TwoLayer, Scheme::GreedyCc, Scheme::Greedy, Scheme::ShortestTime];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::TwoLayer => "two-layer",
            Scheme::Greedy => "greedy",
            Scheme::GreedyCc => "greedy-cc",
            Scheme::ShortestTime => "shortest-time",
            Scheme::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "two-layer" => Scheme::TwoLayer,
            "greedy" => Scheme::Greedy,
            "greedy-cc" => Scheme::GreedyCc,
            "shortest-time" => Scheme::ShortestTime,
            "oracle" => Scheme::Oracle,
            other => return Err(Error::param("scheme", format!("unknown scheme `{other}`"))),
        })
    }
}

/// Movement along one segment between two offsets (meters from the
/// segment's first endpoint).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    pub segment: SegmentId,
    pub direction: Direction,
    pub entry: f64,
    pub exit: f64,
    pub time: f64,
}

impl Traversal {
    pub fn length(&self) -> f64 {
        (self.exit - self.entry).abs()
    }

    /// Traversal of a whole segment starting at intersection `from`.
    pub fn whole(network: &RoadNetwork, esm: &EffectiveSpeedMap, segment: SegmentId, from: IntersectionId) -> Result<Self> {
        let seg = network.segment(segment)?;
        let speed = esm.speed(segment)?;
        let (direction, entry, exit) = if seg.endpoints.0 == from {
            (Direction::Forward, 0.0, seg.length)
        } else if seg.endpoints.1 == from {
            (Direction::Backward, seg.length, 0.0)
        } else {
            return Err(Error::InvalidNetwork(format!("{from} is not an endpoint of {segment}")));
        };
        Ok(Self {
            segment,
            direction,
            entry,
            exit,
            time: seg.length / speed,
        })
    }

    /// Partial traversal between two offsets on one segment.
    pub fn partial(esm: &EffectiveSpeedMap, segment: SegmentId, entry: f64, exit: f64) -> Result<Self> {
        let speed = esm.speed(segment)?;
        Ok(Self {
            segment,
            direction: if exit >= entry { Direction::Forward } else { Direction::Backward },
            entry,
            exit,
            time: (exit - entry).abs() / speed,
        })
    }

    /// Intersection where the traversal ends, when it ends at one.
    pub fn end_intersection(&self, network: &RoadNetwork) -> Option<IntersectionId> {
        point_intersection(network, self.segment, self.exit)
    }

    pub fn start_intersection(&self, network: &RoadNetwork) -> Option<IntersectionId> {
        point_intersection(network, self.segment, self.entry)
    }
}

fn point_intersection(network: &RoadNetwork, segment: SegmentId, offset: f64) -> Option<IntersectionId> {
    let seg = &network.segments()[segment.index()];
    if offset == 0.0 {
        Some(seg.endpoints.0)
    } else if offset == seg.length {
        Some(seg.endpoints.1)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub scheme: Scheme,
    pub source: IntersectionId,
    pub destination: IntersectionId,
    pub traversals: Vec<Traversal>,
    pub total_time: f64,
    /// Rate threshold the route was planned for; `None` for unconstrained schemes.
    pub gamma_used: Option<f64>,
    /// Index of the first traversal driven after a constrained greedy walk gave
    /// up on coverage.
    pub switch_index: Option<usize>,
}

impl Route {
    /// Builds a route, merging consecutive pieces that continue each other on
    /// the same segment in the same direction.
    pub fn new(scheme: Scheme, source: IntersectionId, destination: IntersectionId, pieces: Vec<Traversal>) -> Self {
        let mut traversals: Vec<Traversal> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if p.entry == p.exit {
                continue;
            }
            if let Some(last) = traversals.last_mut() {
                if last.segment == p.segment && last.direction == p.direction && last.exit == p.entry {
                    last.exit = p.exit;
                    last.time += p.time;
                    continue;
                }
            }
            traversals.push(p);
        }
        let total_time = traversals.iter().fold(0.0, |acc, t| acc + t.time);
        Self {
            scheme,
            source,
            destination,
            traversals,
            total_time,
            gamma_used: None,
            switch_index: None,
        }
    }

    pub fn segment_count(&self) -> usize {
        self.traversals.len()
    }

    /// Sequence of intersections the route passes through, starting at the source.
    pub fn intersections(&self, network: &RoadNetwork) -> Vec<IntersectionId> {
        let mut out = vec![self.source];
        for t in &self.traversals {
            if let Some(ri) = t.end_intersection(network) {
                if out.last() != Some(&ri) {
                    out.push(ri);
                }
            }
        }
        out
    }

    /// Checks that the traversals form a connected walk from source to
    /// destination and that the times agree with the speed map.
    pub fn check_walk(&self, network: &RoadNetwork, esm: &EffectiveSpeedMap) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNetwork(format!("route check failed: {msg}")));
        let mut at_ri = Some(self.source);
        let mut at_pt: Option<(SegmentId, f64)> = None;
        let mut total = 0.0;
        for (i, t) in self.traversals.iter().enumerate() {
            let seg = network.segment(t.segment)?;
            if !(0.0..=seg.length).contains(&t.entry) || !(0.0..=seg.length).contains(&t.exit) {
                return bad(format!("traversal {i} leaves its segment"));
            }
            let forward = t.exit > t.entry;
            if forward != (t.direction == Direction::Forward) {
                return bad(format!("traversal {i} has an inconsistent direction"));
            }
            let starts_here = match (at_ri, at_pt) {
                (Some(ri), _) => t.start_intersection(network) == Some(ri),
                (None, Some((s, off))) => s == t.segment && off == t.entry,
                (None, None) => false,
            };
            if !starts_here {
                return bad(format!("traversal {i} does not continue the walk"));
            }
            let expected = t.length() / esm.speed(t.segment)?;
            if (expected - t.time).abs() > 1e-9 * expected.max(1.0) {
                return bad(format!("traversal {i} time {} differs from {expected}", t.time));
            }
            total += t.time;
            at_ri = t.end_intersection(network);
            at_pt = Some((t.segment, t.exit));
        }
        if at_ri != Some(self.destination) {
            return bad("walk does not end at the destination".into());
        }
        if (total - self.total_time).abs() > 1e-9 * total.max(1.0) {
            return bad("total time is not the sum of traversal times".into());
        }
        Ok(())
    }
}

/// Relative tolerance used when comparing route times.
pub const TIME_RTOL: f64 = 1e-9;

pub fn times_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_RTOL * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::generate_grid;

    #[test]
    fn merge_and_check() {
        let net = generate_grid(3, 2, 250.0, 100.0).unwrap();
        let esm = EffectiveSpeedMap::uniform(&net, 10.0).unwrap();
        let pieces = vec![
            Traversal::partial(&esm, SegmentId(0), 0.0, 100.0).unwrap(),
            Traversal::partial(&esm, SegmentId(0), 100.0, 250.0).unwrap(),
            Traversal::whole(&net, &esm, SegmentId(2), IntersectionId(1)).unwrap(),
        ];
        let r = Route::new(Scheme::TwoLayer, IntersectionId(0), IntersectionId(2), pieces);
        assert_eq!(r.traversals.len(), 2);
        assert_eq!(r.total_time, 50.0);
        r.check_walk(&net, &esm).unwrap();
        assert_eq!(r.intersections(&net), vec![IntersectionId(0), IntersectionId(1), IntersectionId(2)]);

        let broken = Route::new(
            Scheme::TwoLayer,
            IntersectionId(0),
            IntersectionId(2),
            vec![Traversal::whole(&net, &esm, SegmentId(2), IntersectionId(1)).unwrap()],
        );
        assert!(broken.check_walk(&net, &esm).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::TwoLayer, Scheme::Greedy, Scheme::GreedyCc, Scheme::ShortestTime, Scheme::Oracle] {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
        assert!("fastest".parse::<Scheme>().is_err());
    }
}
