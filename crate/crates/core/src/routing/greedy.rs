use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::CoverageIndex;
use super::route::{Route, Scheme, Traversal};
use crate::error::{Error, Result};
use crate::net::{EffectiveSpeedMap, IntersectionId, RoadNetwork, SegmentId};
use crate::radio::GammaRateCell;

/// Default cap on segments driven under the coverage constraint.
pub fn default_max_segments(network: &RoadNetwork) -> Option<usize> {
    network.grid().map(|g| 4 * (g.avenues + g.streets) as usize)
}

fn require_grid(network: &RoadNetwork, src: IntersectionId, dst: IntersectionId) -> Result<()> {
    if network.grid().is_none() {
        return Err(Error::NotAGrid);
    }
    network.intersection(src)?;
    network.intersection(dst)?;
    Ok(())
}

/// Continues a walk from `at` choosing uniformly among segments that
/// strictly reduce the lattice distance to `dst`.
fn walk_no_cc(
    network: &RoadNetwork,
    esm: &EffectiveSpeedMap,
    mut at: IntersectionId,
    dst: IntersectionId,
    rng: &mut ChaCha8Rng,
    pieces: &mut Vec<Traversal>,
) -> Result<()> {
    while at != dst {
        let here = network.lattice_distance(at, dst).ok_or(Error::NotAGrid)?;
        let closer: Vec<(SegmentId, IntersectionId)> = network
            .neighbors(at)
            .iter()
            .copied()
            .filter(|&(_, v)| network.lattice_distance(v, dst).is_some_and(|d| d < here))
            .collect();
        let (s, v) = closer[rng.random_range(0..closer.len())];
        pieces.push(Traversal::whole(network, esm, s, at)?);
        at = v;
    }
    Ok(())
}

/// Random monotone walk on a grid: at every intersection one of the
/// segments leading closer to the destination is picked uniformly.
pub fn greedy_route_no_cc(
    network: &RoadNetwork,
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    seed: u64,
) -> Result<Route> {
    require_grid(network, src, dst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pieces = Vec::new();
    walk_no_cc(network, esm, src, dst, &mut rng, &mut pieces)?;
    Ok(Route::new(Scheme::Greedy, src, dst, pieces))
}

/// Depth-first greedy walk restricted to covered segments.
///
/// From each intersection the AV takes an unvisited covered neighbour,
/// preferring ones closer to the destination (uniformly among them), and
/// makes a U-turn back to the previous intersection at dead ends. Every
/// segment driven, U-turns included, counts toward `max_segments`; once the
/// cap is hit, or the covered region reachable from the source is
/// exhausted, the walk finishes as [`greedy_route_no_cc`] with the same
/// random stream. `Route::switch_index` marks where that happened.
#[allow(clippy::too_many_arguments)]
pub fn greedy_route_cc(
    network: &RoadNetwork,
    cells: &[GammaRateCell],
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    gamma: f64,
    max_segments: usize,
    seed: u64,
) -> Result<Route> {
    require_grid(network, src, dst)?;
    let index = CoverageIndex::new(network, cells);
    greedy_cc_with_index(network, &index, esm, src, dst, gamma, max_segments, seed)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn greedy_cc_with_index(
    network: &RoadNetwork,
    index: &CoverageIndex,
    esm: &EffectiveSpeedMap,
    src: IntersectionId,
    dst: IntersectionId,
    gamma: f64,
    max_segments: usize,
    seed: u64,
) -> Result<Route> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pieces = Vec::new();
    let mut visited = vec![false; network.intersections().len()];
    visited[src.index()] = true;
    // Stack of (intersection, segment used to reach it).
    let mut stack: Vec<(IntersectionId, Option<SegmentId>)> = vec![(src, None)];
    let mut at = src;
    let mut switched = None;
    while at != dst {
        if pieces.len() >= max_segments {
            switched = Some(pieces.len());
            break;
        }
        let here = network.lattice_distance(at, dst).ok_or(Error::NotAGrid)?;
        let open: Vec<(SegmentId, IntersectionId)> = if index.is_covered(at) {
            network
                .neighbors(at)
                .iter()
                .copied()
                .filter(|&(s, v)| index.is_usable(s) && !visited[v.index()])
                .collect()
        } else {
            Vec::new()
        };
        let closer: Vec<_> = open
            .iter()
            .copied()
            .filter(|&(_, v)| network.lattice_distance(v, dst).is_some_and(|d| d < here))
            .collect();
        let pool = if closer.is_empty() { &open } else { &closer };
        if !pool.is_empty() {
            let (s, v) = pool[rng.random_range(0..pool.len())];
            pieces.push(Traversal::whole(network, esm, s, at)?);
            visited[v.index()] = true;
            stack.push((v, Some(s)));
            at = v;
            continue;
        }
        // Dead end: U-turn to the previous intersection.
        let (_, via) = stack.pop().expect("stack holds the current intersection");
        match (via, stack.last()) {
            (Some(s), Some(&(prev, _))) => {
                pieces.push(Traversal::whole(network, esm, s, at)?);
                at = prev;
            }
            _ => {
                switched = Some(pieces.len());
                break;
            }
        }
    }
    if switched.is_some() {
        walk_no_cc(network, esm, at, dst, &mut rng, &mut pieces)?;
    }
    // Route::new merges pieces; U-turn pairs never merge because their
    // directions differ, so indices are preserved.
    let mut route = Route::new(Scheme::GreedyCc, src, dst, pieces);
    route.gamma_used = Some(gamma);
    route.switch_index = switched;
    Ok(route)
}
