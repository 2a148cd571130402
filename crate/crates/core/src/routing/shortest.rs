use super::graph::dijkstra;
use super::route::{Route, Scheme, Traversal};
use crate::error::{Error, Result};
use crate::net::{EffectiveSpeedMap, IntersectionId, RoadNetwork, SegmentId};

/// Minimum-time route over a subset of segments. `usable` filters segments.
pub(crate) fn fastest_over(
    network: &RoadNetwork,
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    scheme: Scheme,
    usable: impl Fn(SegmentId) -> bool,
) -> Result<Route> {
    network.intersection(src)?;
    network.intersection(dst)?;
    if !esm.covers(network) {
        return Err(Error::InvalidNetwork("speed map does not match network".into()));
    }
    let adjacency: Vec<Vec<(usize, f64, SegmentId)>> = network
        .intersections()
        .iter()
        .map(|ri| {
            network
                .neighbors(ri.id)
                .iter()
                .filter(|(s, _)| usable(*s))
                .map(|&(s, v)| (v.index(), network.segments()[s.index()].length / esm.speeds()[s.index()], s))
                .collect()
        })
        .collect();
    let sp = dijkstra(&adjacency, src.index(), |&(v, w, _)| (v, w));
    let edges = sp.edges_to(dst.index()).ok_or(Error::NoRoute {
        src,
        dst,
        gamma: 0.0,
    })?;
    let pieces = edges
        .into_iter()
        .map(|(u, k)| Traversal::whole(network, esm, adjacency[u][k].2, IntersectionId(u as u32)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Route::new(scheme, src, dst, pieces))
}

/// Minimum-time route ignoring coverage. Ties go to the lowest intersection id.
pub fn shortest_time_route(
    network: &RoadNetwork,
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
) -> Result<Route> {
    fastest_over(network, esm, src, dst, Scheme::ShortestTime, |_| true)
}
