use serde::{Deserialize, Serialize};

use super::{BsId, GammaRateCell, Interval};
use crate::net::{IntersectionId, Point, RoadNetwork, SegmentId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreNodeKind {
    Intersection { id: IntersectionId },
    /// Point `offset` meters from the first endpoint of `segment`.
    Midpoint { segment: SegmentId, offset: f64 },
}

/// A point where an AV can hand over between two overlapping cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreNode {
    #[serde(flatten)]
    pub kind: CoreNodeKind,
    pub location: Point,
    /// The two cells, smaller id first.
    pub between: (BsId, BsId),
}

/// True when the two interval sets together span the whole segment.
pub(crate) fn spans(a: &[Interval], b: &[Interval]) -> bool {
    let mut all: Vec<Interval> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut reach = 0.0;
    for iv in all {
        if iv.lo > reach {
            return false;
        }
        reach = f64::max(reach, iv.hi);
    }
    reach >= 1.0
}

/// Pairwise overlaps of two interval sets.
pub(crate) fn overlaps(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out: Vec<Interval> = a
        .iter()
        .flat_map(|x| b.iter().filter_map(move |y| x.intersect(y)))
        .collect();
    out.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    out
}

/// True when `a` and `b` cover segment `s` jointly: their intervals overlap and
/// together reach from one end to the other.
pub fn jointly_cover(a: &GammaRateCell, b: &GammaRateCell, s: SegmentId) -> bool {
    let (ia, ib) = (a.intervals(s), b.intervals(s));
    !ia.is_empty() && !ib.is_empty() && spans(ia, ib) && !overlaps(ia, ib).is_empty()
}

/// Core nodes shared by two cells: every common intersection, plus the middle
/// of each overlap on a jointly covered segment that does not already reach
/// one of the segment's endpoints.
pub fn cell_connectivity(network: &RoadNetwork, a: &GammaRateCell, b: &GammaRateCell) -> Vec<CoreNode> {
    let between = if a.bs <= b.bs { (a.bs, b.bs) } else { (b.bs, a.bs) };
    let mut nodes: Vec<CoreNode> = a
        .covered_intersections
        .intersection(&b.covered_intersections)
        .map(|&id| CoreNode {
            kind: CoreNodeKind::Intersection { id },
            location: network.position(id),
            between,
        })
        .collect();
    let (small, large) = if a.covered_segments.len() + a.partially_covered_segments.len()
        <= b.covered_segments.len() + b.partially_covered_segments.len()
    {
        (a, b)
    } else {
        (b, a)
    };
    for s in small.touched_segments() {
        let (ia, ib) = (small.intervals(s), large.intervals(s));
        if ib.is_empty() || !spans(ia, ib) {
            continue;
        }
        let length = network.segments()[s.index()].length;
        for ov in overlaps(ia, ib) {
            if ov.lo <= 0.0 || ov.hi >= 1.0 {
                continue;
            }
            let offset = (ov.lo + ov.hi) / 2.0 * length;
            nodes.push(CoreNode {
                kind: CoreNodeKind::Midpoint { segment: s, offset },
                location: network.point_on(s, offset),
                between,
            });
        }
    }
    nodes
}

impl CoreNode {
    pub fn intersection(&self) -> Option<IntersectionId> {
        match self.kind {
            CoreNodeKind::Intersection { id } => Some(id),
            CoreNodeKind::Midpoint { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::generate_grid;
    use crate::radio::{compute_gamma_cell, BaseStation, ChannelModel};
    use std::collections::{BTreeMap, BTreeSet};

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    fn cell(bs: u32, ris: &[u32], full: &[u32], partial: &[(u32, Vec<Interval>)]) -> GammaRateCell {
        GammaRateCell {
            bs: BsId(bs),
            gamma: 1.0,
            epsilon: 0.01,
            covered_intersections: ris.iter().map(|&i| IntersectionId(i)).collect::<BTreeSet<_>>(),
            covered_segments: full.iter().map(|&s| SegmentId(s)).collect(),
            partially_covered_segments: partial
                .iter()
                .map(|(s, v)| (SegmentId(*s), v.clone()))
                .collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn span_and_overlap_helpers() {
        assert!(spans(&[iv(0.0, 0.5)], &[iv(0.4, 1.0)]));
        assert!(spans(&[iv(0.0, 0.5)], &[iv(0.5, 1.0)]));
        assert!(!spans(&[iv(0.0, 0.5)], &[iv(0.6, 1.0)]));
        assert!(!spans(&[iv(0.1, 0.5)], &[iv(0.4, 1.0)]));
        assert_eq!(overlaps(&[iv(0.0, 0.5)], &[iv(0.4, 1.0)]), vec![iv(0.4, 0.5)]);
        assert!(overlaps(&[iv(0.0, 0.3)], &[iv(0.4, 1.0)]).is_empty());
    }

    #[test]
    fn disjoint_and_identity() {
        let net = generate_grid(3, 1 + 1, 250.0, 100.0).unwrap();
        let a = cell(0, &[0, 1], &[0], &[]);
        let b = cell(1, &[5], &[], &[]);
        assert!(cell_connectivity(&net, &a, &b).is_empty());
        let same = cell_connectivity(&net, &a, &a);
        assert_eq!(same.len(), 2);
    }

    #[test]
    fn midpoint_at_overlap_centre() {
        let net = generate_grid(2, 2, 250.0, 100.0).unwrap();
        // Segment 0 runs from RI0 to RI1 along x.
        let a = cell(0, &[0], &[], &[(0, vec![iv(0.0, 0.6)])]);
        let b = cell(1, &[1], &[], &[(0, vec![iv(0.4, 1.0)])]);
        let nodes = cell_connectivity(&net, &a, &b);
        assert_eq!(nodes.len(), 1);
        match nodes[0].kind {
            CoreNodeKind::Midpoint { segment, offset } => {
                assert_eq!(segment, SegmentId(0));
                assert!((offset - 125.0).abs() < 1e-9);
            }
            _ => panic!("expected a midpoint"),
        }
        assert_eq!(nodes[0].between, (BsId(0), BsId(1)));
        assert_eq!(cell_connectivity(&net, &b, &a), nodes);
        assert!(jointly_cover(&a, &b, SegmentId(0)));

        // A gap between the two intervals means no shared coverage.
        let c = cell(2, &[1], &[], &[(0, vec![iv(0.7, 1.0)])]);
        assert!(cell_connectivity(&net, &a, &c).is_empty());
    }

    #[test]
    fn overlap_touching_endpoint_adds_no_midpoint() {
        let net = generate_grid(2, 2, 250.0, 100.0).unwrap();
        let a = cell(0, &[0, 1], &[0], &[]);
        let b = cell(1, &[1], &[], &[(0, vec![iv(0.3, 1.0)])]);
        let nodes = cell_connectivity(&net, &a, &b);
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].intersection(), Some(IntersectionId(1)));
    }

    #[test]
    fn two_stations_sharing_one_intersection() {
        // Stations 370 m either side of the middle column of a 3x2 grid;
        // the radius is tuned so that each cell reaches the centre RI and no
        // further.
        let net = generate_grid(3, 2, 250.0, 100.0).unwrap();
        let m = ChannelModel::default();
        let left = BaseStation::new(0, Point::new(-120.0, 0.0));
        let right = BaseStation::new(1, Point::new(620.0, 0.0));
        let r = 372.0;
        let gamma = crate::radio::rate_quantile(Point::new(r - 120.0, 0.0), &left, 10.0, 0.01, &m).unwrap();
        let a = compute_gamma_cell(&net, &left, gamma, 0.01, 10.0.into(), 5.0, &m).unwrap();
        let b = compute_gamma_cell(&net, &right, gamma, 0.01, 10.0.into(), 5.0, &m).unwrap();
        let nodes = cell_connectivity(&net, &a, &b);
        assert_eq!(nodes.len(), 1, "{nodes:?}");
        assert_eq!(nodes[0].intersection(), Some(IntersectionId(1)));
        // Exhaustive check: every sample both cells hold hangs off RI1 on the
        // middle avenue, so RI1 is the only hand-over point.
        let layout = crate::radio::SampleLayout::new(&net, 5.0).unwrap();
        let mut shared = 0;
        for seg in net.segments() {
            for k in 0..=layout.pieces(seg.id) {
                let t = layout.fraction(seg.id, k);
                if a.contains_point(&net, seg.id, t) && b.contains_point(&net, seg.id, t) {
                    shared += 1;
                    let p = net.point_on(seg.id, t * seg.length);
                    assert!(p.x == 250.0 && p.y < 50.0, "{p:?}");
                }
            }
        }
        assert!(shared > 0);
    }
}
