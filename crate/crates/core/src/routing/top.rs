use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::net::RoadNetwork;
use crate::radio::{cell_connectivity, BsId, CoreNode, GammaRateCell};

/// Connectivity graph between cells. Node `i` is `cells[i]` of the slice the
/// graph was built from.
#[derive(Debug, Clone)]
pub struct TopLayerGraph {
    pub cells: Vec<BsId>,
    edges: BTreeMap<(usize, usize), Vec<CoreNode>>,
    adjacency: Vec<Vec<usize>>,
}

impl TopLayerGraph {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Core nodes shared by cells `i` and `j`; empty when not adjacent.
    pub fn core_nodes(&self, i: usize, j: usize) -> &[CoreNode] {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.edges.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), &[CoreNode])> {
        self.edges.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Hop distances to `target`; `usize::MAX` when unreachable.
    pub fn hops_to(&self, target: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[target] = 0;
        let mut queue = VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Builds the cell connectivity graph; an edge joins two cells exactly when
/// they share at least one core node.
pub fn build_top_layer(network: &RoadNetwork, cells: &[GammaRateCell]) -> TopLayerGraph {
    let mut edges = BTreeMap::new();
    let mut adjacency = vec![Vec::new(); cells.len()];
    for i in 0..cells.len() {
        if cells[i].is_empty() {
            continue;
        }
        for j in i + 1..cells.len() {
            if cells[j].is_empty() {
                continue;
            }
            let nodes = cell_connectivity(network, &cells[i], &cells[j]);
            if !nodes.is_empty() {
                edges.insert((i, j), nodes);
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    TopLayerGraph {
        cells: cells.iter().map(|c| c.bs).collect(),
        edges,
        adjacency,
    }
}

/// Ordered sequence of distinct cells, consecutive ones adjacent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopPath(pub Vec<usize>);

/// All simple paths from `src` to `dst`, fewest hops first (lexicographic by
/// cell index within one length), at most `max_paths` of them.
pub fn enumerate_top_paths(g: &TopLayerGraph, src: usize, dst: usize, max_paths: usize) -> Vec<TopPath> {
    let mut out = Vec::new();
    if max_paths == 0 {
        return out;
    }
    if src == dst {
        out.push(TopPath(vec![src]));
        return out;
    }
    let hops = g.hops_to(dst);
    if hops[src] == usize::MAX {
        return out;
    }
    let mut on_path = vec![false; g.len()];
    let mut path = vec![src];
    on_path[src] = true;
    // Only cells that can still reach dst matter; hops[] bounds what is left.
    for len in hops[src] + 1..=g.len() {
        let full = extend(g, dst, len, &hops, &mut path, &mut on_path, &mut out, max_paths);
        if full {
            log::warn!("top-layer path enumeration truncated at {max_paths} paths");
            break;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &TopLayerGraph,
    dst: usize,
    len: usize,
    hops: &[usize],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<TopPath>,
    max_paths: usize,
) -> bool {
    let u = *path.last().unwrap();
    if path.len() == len {
        if u == dst {
            out.push(TopPath(path.clone()));
            return out.len() >= max_paths;
        }
        return false;
    }
    if u == dst {
        return false;
    }
    let mut next: Vec<usize> = g.neighbors(u).to_vec();
    next.sort_unstable();
    for v in next {
        if on_path[v] || hops[v] == usize::MAX || path.len() + 1 + hops[v] > len {
            continue;
        }
        path.push(v);
        on_path[v] = true;
        let full = extend(g, dst, len, hops, path, on_path, out, max_paths);
        on_path[v] = false;
        path.pop();
        if full {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> TopLayerGraph {
        let mut adjacency = vec![Vec::new(); n];
        let mut map = BTreeMap::new();
        for &(a, b) in edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
            map.insert((a.min(b), a.max(b)), Vec::new());
        }
        TopLayerGraph {
            cells: (0..n as u32).map(BsId).collect(),
            edges: map,
            adjacency,
        }
    }

    fn paths(g: &TopLayerGraph, s: usize, d: usize) -> Vec<Vec<usize>> {
        enumerate_top_paths(g, s, d, 10_000).into_iter().map(|p| p.0).collect()
    }

    #[test]
    fn trivial_cases() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(paths(&g, 1, 1), vec![vec![1]]);
        assert_eq!(paths(&g, 0, 2), vec![vec![0, 1, 2]]);
        let split = graph(3, &[(0, 1)]);
        assert!(paths(&split, 0, 2).is_empty());
    }

    #[test]
    fn four_cycle_has_two_paths() {
        // A-B-C-D-A
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(paths(&g, 0, 2), vec![vec![0, 1, 2], vec![0, 3, 2]]);
    }

    #[test]
    fn shortest_hop_first_and_truncation() {
        // Complete graph on 5 nodes: 1 + 3 + 6 + 6 = 16 simple paths 0 -> 4.
        let mut e = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                e.push((a, b));
            }
        }
        let g = graph(5, &e);
        let all = paths(&g, 0, 4);
        assert_eq!(all.len(), 16);
        assert!(all.windows(2).all(|w| w[0].len() <= w[1].len()));
        assert_eq!(all[0], vec![0, 4]);
        assert_eq!(enumerate_top_paths(&g, 0, 4, 5).len(), 5);
    }
}
