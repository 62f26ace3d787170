//! Fixtures shared by the criterion benches.

use kronred_core::generate::{random_connected_graph, random_partition, rng, LoopMix};
use kronred_core::{laplacian_from_graph, LoopyLaplacian, Partition};

/// Seeded connected graph on `n` nodes, average degree about 4, with a
/// boundary of roughly a third of the nodes.
pub fn fixture(n: usize, loops: LoopMix, seed: u64) -> (LoopyLaplacian, Partition) {
    let mut r = rng(seed);
    let density = (4.0 / n as f64).min(1.0);
    let q = laplacian_from_graph(&random_connected_graph(&mut r, n, density, loops));
    let boundary: Vec<usize> = (0..n).step_by(3).collect();
    let p = if boundary.len() >= 2 && boundary.len() < n {
        Partition::new(n, &boundary).expect("valid boundary")
    } else {
        random_partition(&mut r, n)
    };
    (q, p)
}
