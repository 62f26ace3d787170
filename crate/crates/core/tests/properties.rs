use kronred_core::generate::{random_connected_graph, random_order, random_partition, rng, LoopMix};
use kronred_core::graph::{augment, graph_from_laplacian, is_irreducible};
use kronred_core::kron::predict_reduced_topology;
use kronred_core::linalg::max_abs_diff;
use kronred_core::power::{cutset, DcNetwork};
use kronred_core::{
    effective_resistance, kron_reduce, kron_reduce_iterative, laplacian_from_graph, GraphFile, LoopyLaplacian,
    Partition, WeightedGraph,
};
use proptest::prelude::*;
use rand::Rng;

fn loop_mix() -> impl Strategy<Value = LoopMix> {
    prop_oneof![Just(LoopMix::LoopLess), Just(LoopMix::StrictlyLoopy)]
}

fn instance(seed: u64, n: usize, mix: LoopMix) -> (LoopyLaplacian, Partition) {
    let mut r = rng(seed);
    let q = laplacian_from_graph(&random_connected_graph(&mut r, n, 0.2, mix));
    let p = random_partition(&mut r, n);
    (q, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_round_trip(seed in any::<u64>(), n in 1usize..20, mix in loop_mix()) {
        let g = random_connected_graph(&mut rng(seed), n, 0.3, mix);
        let q = laplacian_from_graph(&g);
        prop_assert!(max_abs_diff(graph_from_laplacian(&q).weights(), g.weights()) <= 1e-12);
        prop_assert_eq!(q.is_strictly_loopy(), (0..n).any(|i| g.self_loop(i) > 1e-9));
        prop_assert_eq!(GraphFile::parse(&GraphFile::from_graph(&g, None).to_json()).unwrap().to_graph().unwrap(), g);
    }

    #[test]
    fn augmentation_is_loop_less_and_connected(seed in any::<u64>(), n in 1usize..20) {
        let q = laplacian_from_graph(&random_connected_graph(&mut rng(seed), n, 0.3, LoopMix::StrictlyLoopy));
        let hat = augment(&q).laplacian;
        prop_assert!(hat.is_loop_less());
        prop_assert!(is_irreducible(&hat));
        prop_assert!(max_abs_diff(hat.entries(), &hat.entries().transpose()) == 0.0);
    }

    #[test]
    fn reduction_in_two_stages(seed in any::<u64>(), n in 4usize..25, mix in loop_mix()) {
        let (q, p) = instance(seed, n, mix);
        prop_assume!(p.interior().len() >= 2);
        // Keep the boundary plus one interior node, then reduce that away.
        let keep = p.interior()[0];
        let mut mid: Vec<usize> = p.boundary().to_vec();
        mid.push(keep);
        let first = kron_reduce(&q, &Partition::new(n, &mid).unwrap()).unwrap();
        let mid_sorted = first.partition.boundary().to_vec();
        let outer: Vec<usize> = p.boundary().iter().map(|v| mid_sorted.iter().position(|x| x == v).unwrap()).collect();
        let second = kron_reduce(&first.q_red, &Partition::new(mid_sorted.len(), &outer).unwrap()).unwrap();
        let direct = kron_reduce(&q, &p).unwrap();
        prop_assert!(max_abs_diff(second.q_red.entries(), direct.q_red.entries()) <= 1e-9);
    }

    #[test]
    fn random_orders_agree(seed in any::<u64>(), n in 3usize..25, mix in loop_mix()) {
        let (q, p) = instance(seed, n, mix);
        let order = random_order(&mut rng(seed ^ 0x5eed), &p);
        let it = kron_reduce_iterative(&q, &p, &order).unwrap();
        let one = kron_reduce(&q, &p).unwrap();
        prop_assert!(max_abs_diff(it.reduction.q_red.entries(), one.q_red.entries()) <= 1e-9);
        prop_assert!(max_abs_diff(&it.reduction.q_ac, &one.q_ac) <= 1e-9);
        prop_assert_eq!(predict_reduced_topology(&q, &p).unwrap(), kronred_core::kron::ReducedTopology::from_graph(&one.a_red));
    }

    #[test]
    fn resistance_is_a_metric(seed in any::<u64>(), n in 2usize..20, mix in loop_mix()) {
        let q = laplacian_from_graph(&random_connected_graph(&mut rng(seed), n, 0.3, mix));
        prop_assert!(effective_resistance(&q).unwrap().metric_violation() <= 1e-9);
    }

    #[test]
    fn cutset_ignores_interior_labels(seed in any::<u64>(), n in 4usize..20, mix in loop_mix()) {
        let mut r = rng(seed);
        let g = random_connected_graph(&mut r, n, 0.2, mix);
        let q = laplacian_from_graph(&g);
        let p = random_partition(&mut r, n);
        let mut pw: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mean = pw.iter().sum::<f64>() / n as f64;
        pw.iter_mut().for_each(|v| *v -= mean);
        let m = p.boundary().len();
        let mut sigma = vec![false; m];
        sigma[0] = true;

        // Reverse the interior labels while keeping boundary labels fixed.
        let inner = p.interior();
        let relabel: Vec<usize> = (0..n)
            .map(|v| match inner.iter().position(|&x| x == v) {
                Some(k) => inner[inner.len() - 1 - k],
                None => v,
            })
            .collect();
        let w = g.weights();
        let permuted = WeightedGraph::new(nalgebra_perm(w, &relabel)).unwrap();
        let mut pw2 = vec![0.0; n];
        for v in 0..n {
            pw2[relabel[v]] = pw[v];
        }
        let a = cutset(&DcNetwork::new(q, pw).unwrap(), &p, &sigma).unwrap();
        let b = cutset(&DcNetwork::new(laplacian_from_graph(&permuted), pw2).unwrap(), &p, &sigma).unwrap();
        prop_assert!((a.p_cut - b.p_cut).abs() <= 1e-9);
        prop_assert!((a.b_cut - b.b_cut).abs() <= 1e-9);
        prop_assert!((a.theta_cut - b.theta_cut).abs() <= 1e-9);
    }

    #[test]
    fn strengthening_interior_lines_raises_cut_susceptance(seed in any::<u64>(), n in 4usize..20, delta in 0.01f64..3.0) {
        let mut r = rng(seed);
        let q = laplacian_from_graph(&random_connected_graph(&mut r, n, 0.3, LoopMix::LoopLess));
        let p = random_partition(&mut r, n);
        prop_assume!(p.interior().len() >= 2);
        let (i, j) = (p.interior()[0], p.interior()[1]);
        let m = p.boundary().len();
        let sigma: Vec<bool> = (0..m).map(|k| k < m / 2 || k == 0).collect();
        prop_assume!(sigma.iter().any(|s| !s));
        let zero = vec![0.0; n];
        let before = cutset(&DcNetwork::new(q.clone(), zero.clone()).unwrap(), &p, &sigma).unwrap();
        let kr = kron_reduce(&q, &p).unwrap();
        let (q_red, _) = kr.perturb_interior_edge(&q, i, j, delta).unwrap();
        let s = kronred_core::DVector::from_iterator(m, sigma.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        let after = (s.transpose() * q_red.entries() * &s)[(0, 0)];
        prop_assert!(after >= before.b_cut - 1e-12, "{} < {}", after, before.b_cut);
    }
}

fn nalgebra_perm(w: &kronred_core::DMatrix<f64>, relabel: &[usize]) -> kronred_core::DMatrix<f64> {
    let n = w.nrows();
    let mut out = kronred_core::DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(relabel[a], relabel[b])] = w[(a, b)];
        }
    }
    out
}
