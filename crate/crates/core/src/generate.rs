//! Seeded random instances for property checks and benchmarks.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::WeightedGraph;
use crate::kron::Partition;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopMix {
    LoopLess,
    StrictlyLoopy,
    /// Coin flip between the two classes per graph.
    Mixed,
}

/// Connected graph on `n` nodes: a random spanning tree plus each remaining
/// pair with probability `density`. Edge weights are uniform on [0.1, 2],
/// self-loop weights uniform on [0.1, 1].
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, density: f64, loops: LoopMix) -> WeightedGraph {
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut present = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for k in 1..n {
        let (u, v) = (labels[k], labels[rng.random_range(0..k)]);
        present[u][v] = true;
        present[v][u] = true;
        edges.push((u.min(v), u.max(v), rng.random_range(0.1..=2.0)));
    }
    for (u, row) in present.iter().enumerate() {
        for (v, &seen) in row.iter().enumerate().skip(u + 1) {
            if !seen && rng.random_bool(density) {
                edges.push((u, v, rng.random_range(0.1..=2.0)));
            }
        }
    }
    let loopy = match loops {
        LoopMix::LoopLess => false,
        LoopMix::StrictlyLoopy => true,
        LoopMix::Mixed => rng.random_bool(0.5),
    };
    let mut self_loops = Vec::new();
    if loopy {
        for u in 0..n {
            if rng.random_bool(0.3) {
                self_loops.push((u, rng.random_range(0.1..=1.0)));
            }
        }
        if self_loops.is_empty() {
            self_loops.push((rng.random_range(0..n), rng.random_range(0.1..=1.0)));
        }
    }
    WeightedGraph::from_edges(n, &edges, &self_loops).expect("generated graph is valid")
}

/// Random boundary of size `2..=n-1`. Needs `n >= 3`.
pub fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Partition {
    assert!(n >= 3, "a proper boundary needs at least 3 nodes");
    let size = rng.random_range(2..n);
    let boundary = index::sample(rng, n, size).into_vec();
    Partition::new(n, &boundary).expect("sampled boundary is valid")
}

/// Interior nodes of `p` in random elimination order.
pub fn random_order<R: Rng>(rng: &mut R, p: &Partition) -> Vec<usize> {
    let mut order = p.interior().to_vec();
    order.shuffle(rng);
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_irreducible, laplacian_from_graph};

    #[test]
    fn graphs_are_connected_and_classed() {
        let mut r = rng(7);
        for n in [1, 2, 5, 30] {
            let g = random_connected_graph(&mut r, n, 0.1, LoopMix::LoopLess);
            let q = laplacian_from_graph(&g);
            assert!(is_irreducible(&q) && q.is_loop_less());
            let g = random_connected_graph(&mut r, n, 0.1, LoopMix::StrictlyLoopy);
            assert!(laplacian_from_graph(&g).is_strictly_loopy());
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = random_connected_graph(&mut rng(3), 12, 0.2, LoopMix::Mixed);
        let b = random_connected_graph(&mut rng(3), 12, 0.2, LoopMix::Mixed);
        assert_eq!(a, b);
        let p = random_partition(&mut rng(3), 12);
        assert!(p.boundary().len() >= 2 && !p.interior().is_empty());
    }
}
