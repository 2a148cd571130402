use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Min-heap entry ordered by time, then by node id.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Entry {
    pub time: f64,
    pub node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source shortest paths over an adjacency list of `(target, weight)`.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub dist: Vec<f64>,
    /// `(previous node, index into the previous node's adjacency list)`.
    pub pred: Vec<Option<(usize, usize)>>,
}

impl ShortestPaths {
    /// Edges `(node, adjacency index)` from the source to `target`, in order.
    pub fn edges_to(&self, target: usize) -> Option<Vec<(usize, usize)>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut out = Vec::new();
        let mut at = target;
        while let Some((prev, k)) = self.pred[at] {
            out.push((prev, k));
            at = prev;
        }
        out.reverse();
        Some(out)
    }
}

/// Dijkstra. On equal times the node with the lower id is settled first and
/// a predecessor is only replaced by a strictly better one.
pub fn dijkstra<E>(adjacency: &[Vec<E>], source: usize, weight: impl Fn(&E) -> (usize, f64)) -> ShortestPaths {
    let n = adjacency.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { time: 0.0, node: source });
    while let Some(Entry { time, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for (k, e) in adjacency[node].iter().enumerate() {
            let (v, w) = weight(e);
            let t = time + w;
            if t < dist[v] {
                dist[v] = t;
                pred[v] = Some((node, k));
                heap.push(Entry { time: t, node: v });
            }
        }
    }
    ShortestPaths { dist, pred }
}
