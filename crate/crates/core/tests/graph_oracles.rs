//! Graph construction against independent oracles: exhaustive tree search
//! for the minimum spanning tree, direct reconstruction for the
//! nearest-neighbor graph, and plain pair sums for the complete graph.

mod common;

use common::{exhaustive_mst_weight, gauss_stream, obs, rel_gap};
use gsrcpd_core::graph::{build_graph, squared_distance, GraphKind, Observation};
use gsrcpd_core::rng::stream_rng;
use gsrcpd_core::spanning_triplet;
use rand::Rng;

#[test]
fn mst_weight_matches_exhaustive_tree_search() {
    let mut checked = 0;
    for trial in 0..60u64 {
        let size = 3 + (trial % 5) as usize; // 3..=7 points
        let d = 1 + (trial % 4) as usize;
        let points = gauss_stream(size, d, 0xA11CE, trial);
        let tree = build_graph(&points, GraphKind::Mst).unwrap();
        let oracle = exhaustive_mst_weight(&points);
        assert!(
            rel_gap(tree.weight, oracle) <= 1e-12,
            "trial {trial}: kruskal {} vs exhaustive {oracle}",
            tree.weight
        );
        assert_eq!(tree.edges.len(), size - 1, "a tree spans with m-1 edges");
        checked += 1;
    }
    assert_eq!(checked, 60);
}

#[test]
fn mst_weight_matches_exhaustive_search_under_ties() {
    // Integer lattice points make many pairwise distances collide, so the
    // minimum is attained by several trees; the weights must still agree.
    let mut rng = stream_rng(0xBEE, 0);
    for trial in 0..40 {
        let size = 4 + trial % 4; // 4..=7
        let points: Vec<Observation> = (0..size)
            .map(|_| {
                obs(&[
                    rng.gen_range(-2..=2) as f64,
                    rng.gen_range(-2..=2) as f64,
                ])
            })
            .collect();
        let tree = build_graph(&points, GraphKind::Mst).unwrap();
        let oracle = exhaustive_mst_weight(&points);
        assert!(
            (tree.weight - oracle).abs() <= 1e-12,
            "trial {trial}: {} vs {oracle}",
            tree.weight
        );
    }
}

#[test]
fn nng_matches_direct_reconstruction() {
    for trial in 0..40u64 {
        let size = 2 + (trial % 9) as usize; // 2..=10
        let points = gauss_stream(size, 3, 0xD06, trial);
        let graph = build_graph(&points, GraphKind::Nng).unwrap();

        // Rebuild from scratch: one arc per node to its nearest neighbor
        // (ties to the lowest index), stored undirected, mutual pairs kept
        // once per endpoint.
        let mut expected: Vec<(usize, usize)> = Vec::with_capacity(size);
        for i in 0..size {
            let mut best = usize::MAX;
            let mut best_w = f64::INFINITY;
            for j in 0..size {
                if i == j {
                    continue;
                }
                let w = squared_distance(&points[i], &points[j]).unwrap();
                if w < best_w {
                    best_w = w;
                    best = j;
                }
            }
            expected.push((i.min(best), i.max(best)));
        }
        expected.sort_unstable();
        let got: Vec<(usize, usize)> = graph.edges.iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(got, expected, "trial {trial}");
        let weight: f64 = expected
            .iter()
            .map(|&(i, j)| squared_distance(&points[i], &points[j]).unwrap())
            .sum();
        assert!(rel_gap(graph.weight, weight) <= 1e-12);
    }
}

#[test]
fn complete_graph_triplet_matches_pair_sums_far_from_origin() {
    // Data sits 10^4 away from the origin; the swept evaluation must not
    // lose the in-window structure to cancellation.
    for trial in 0..20u64 {
        let m = 12;
        let d = 3;
        let points: Vec<Observation> = gauss_stream(m, d, 0x0FF5E7, trial)
            .into_iter()
            .map(|p| {
                let v: Vec<f64> = p.values().iter().map(|x| x + 1e4).collect();
                obs(&v)
            })
            .collect();
        let pair_sum = |block: &[Observation]| -> f64 {
            let mut acc = 0.0;
            for i in 0..block.len() {
                for j in (i + 1)..block.len() {
                    acc += squared_distance(&block[i], &block[j]).unwrap();
                }
            }
            acc
        };
        for k in 2..=(m - 2) {
            let t = spanning_triplet(&points, k, GraphKind::Complete).unwrap();
            assert!(
                rel_gap(t.left, pair_sum(&points[..k])) <= 1e-9,
                "left block at k={k}"
            );
            assert!(
                rel_gap(t.right, pair_sum(&points[k..])) <= 1e-9,
                "right block at k={k}"
            );
            assert!(rel_gap(t.full, pair_sum(&points)) <= 1e-9, "full window");
        }
    }
}

#[test]
fn spanning_weights_are_ordered_by_graph_sparsity() {
    // Both sparse graphs pick their edges from the complete edge set, so
    // with nonnegative weights neither can outweigh the complete graph;
    // and the MST is minimal among spanning trees, so it is no heavier
    // than the chain visiting the points in index order.
    for trial in 0..20u64 {
        let points = gauss_stream(9, 2, 0x50A7, trial);
        let cg = build_graph(&points, GraphKind::Complete).unwrap().weight;
        let mst = build_graph(&points, GraphKind::Mst).unwrap().weight;
        let nng = build_graph(&points, GraphKind::Nng).unwrap().weight;
        assert!(mst <= cg && nng <= cg, "sparse graphs weigh at most CG");
        let chain: f64 = (1..points.len())
            .map(|i| squared_distance(&points[i - 1], &points[i]).unwrap())
            .sum();
        assert!(mst <= chain + 1e-12, "MST no heavier than the index chain");
    }
}
