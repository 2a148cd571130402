use super::route::{Route, Scheme};
use super::shortest::fastest_over;
use crate::error::{Error, Result};
use crate::net::{EffectiveSpeedMap, IntersectionId, RoadNetwork, SegmentId};
use crate::radio::{jointly_cover, GammaRateCell};

/// Which intersections and whole segments can be driven without losing the
/// rate threshold, given a set of cells.
///
/// A segment is usable when one cell covers it end to end, or two cells
/// cover it together with overlapping coverage.
#[derive(Debug, Clone)]
pub struct CoverageIndex {
    usable: Vec<bool>,
    covered: Vec<bool>,
}

impl CoverageIndex {
    pub fn new(network: &RoadNetwork, cells: &[GammaRateCell]) -> Self {
        let mut covered = vec![false; network.intersections().len()];
        let mut on_segment: Vec<Vec<usize>> = vec![Vec::new(); network.segments().len()];
        let mut usable = vec![false; network.segments().len()];
        for (c, cell) in cells.iter().enumerate() {
            for ri in &cell.covered_intersections {
                covered[ri.index()] = true;
            }
            for s in &cell.covered_segments {
                usable[s.index()] = true;
            }
            for s in cell.partially_covered_segments.keys() {
                on_segment[s.index()].push(c);
            }
        }
        for (s, list) in on_segment.iter().enumerate() {
            if usable[s] {
                continue;
            }
            let seg = SegmentId(s as u32);
            'pairs: for (i, &a) in list.iter().enumerate() {
                for &b in &list[i + 1..] {
                    if jointly_cover(&cells[a], &cells[b], seg) {
                        usable[s] = true;
                        break 'pairs;
                    }
                }
            }
        }
        Self { usable, covered }
    }

    pub fn is_usable(&self, s: SegmentId) -> bool {
        self.usable[s.index()]
    }

    pub fn is_covered(&self, ri: IntersectionId) -> bool {
        self.covered[ri.index()]
    }

    pub fn usable_count(&self) -> usize {
        self.usable.iter().filter(|&&u| u).count()
    }
}

/// Brute-force constrained shortest route: plain Dijkstra over usable
/// segments. Meant as ground truth on small instances.
pub fn oracle_constrained_shortest(
    network: &RoadNetwork,
    cells: &[GammaRateCell],
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    gamma: f64,
) -> Result<Route> {
    network.intersection(src)?;
    network.intersection(dst)?;
    let index = CoverageIndex::new(network, cells);
    if !index.is_covered(src) {
        return Err(Error::SourceUncovered(src));
    }
    if !index.is_covered(dst) {
        return Err(Error::DestinationUncovered(dst));
    }
    let mut route = fastest_over(network, esm, src, dst, Scheme::Oracle, |s| index.is_usable(s))
        .map_err(|e| match e {
            Error::NoRoute { .. } => Error::NoRoute { src, dst, gamma },
            other => other,
        })?;
    route.gamma_used = Some(gamma);
    Ok(route)
}
