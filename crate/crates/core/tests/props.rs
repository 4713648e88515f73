//! Property tests for the structural invariants: partition identities,
//! exact invariance under translation and dyadic scaling, reciprocity of
//! the variance ratios, resampling multiset laws, and quantile
//! monotonicity.

mod common;

use gsrcpd_core::calibrate::{per_k_quantile, resample, MaxScanRecord, ResampleMethod};
use gsrcpd_core::graph::{GraphKind, Observation};
use gsrcpd_core::rng::stream_rng;
use gsrcpd_core::stats::{profile, split_statistics, Statistic};
use gsrcpd_core::{gap_spanning, spanning_triplet};
use proptest::prelude::*;

/// Windows of 2n observations (n in 2..=5) with integer-valued coordinates,
/// so translation and dyadic scaling are exact in floating point.
fn lattice_window() -> impl Strategy<Value = Vec<Observation>> {
    (2usize..=5, 1usize..=3).prop_flat_map(|(n, d)| {
        proptest::collection::vec(
            proptest::collection::vec(-8i32..=8, d).prop_map(|v| {
                Observation::new(v.into_iter().map(f64::from).collect()).unwrap()
            }),
            2 * n,
        )
    })
}

fn any_kind() -> impl Strategy<Value = GraphKind> {
    prop_oneof![
        Just(GraphKind::Complete),
        Just(GraphKind::Mst),
        Just(GraphKind::Nng),
    ]
}

proptest! {
    #[test]
    fn complete_graph_weights_partition_the_window(window in lattice_window()) {
        let m = window.len();
        for k in 2..=(m - 2) {
            let t = spanning_triplet(&window, k, GraphKind::Complete).unwrap();
            let gap = gap_spanning(&window, k).unwrap();
            let total = t.left + t.right + gap;
            prop_assert!(
                (total - t.full).abs() <= 1e-9 * t.full.max(1.0),
                "k={k}: {} + {} + {gap} != {}", t.left, t.right, t.full
            );
        }
    }

    #[test]
    fn statistics_are_bitwise_invariant_under_integer_translation(
        window in lattice_window(),
        kind in any_kind(),
        shift in -1_000_000i32..=1_000_000,
    ) {
        let translated: Vec<Observation> = window
            .iter()
            .map(|p| {
                Observation::new(p.values().iter().map(|v| v + f64::from(shift)).collect())
                    .unwrap()
            })
            .collect();
        let a = profile(&window, kind).unwrap();
        let b = profile(&translated, kind).unwrap();
        prop_assert_eq!(a.splits(), b.splits());
    }

    #[test]
    fn statistics_are_bitwise_invariant_under_dyadic_scaling(
        window in lattice_window(),
        kind in any_kind(),
        log_scale in -2i32..=3,
    ) {
        let c = 2.0f64.powi(log_scale);
        let scaled: Vec<Observation> = window
            .iter()
            .map(|p| Observation::new(p.values().iter().map(|v| v * c).collect()).unwrap())
            .collect();
        let a = profile(&window, kind).unwrap();
        let b = profile(&scaled, kind).unwrap();
        prop_assert_eq!(a.splits(), b.splits());
    }

    #[test]
    fn variance_ratios_are_reciprocal(window in lattice_window(), kind in any_kind()) {
        // One-sided degeneracy is legitimate: a zero block weight makes
        // one ratio exactly 0 and its reciprocal undefined.
        let m = window.len();
        for k in 2..=(m - 2) {
            let t = spanning_triplet(&window, k, kind).unwrap();
            let sv = split_statistics(&t, m, k).unwrap();
            match (sv.var_up, sv.var_down) {
                (Some(up), Some(down)) => {
                    prop_assert!(up > 0.0 && down > 0.0);
                    prop_assert!(
                        (up * down - 1.0).abs() <= 1e-12,
                        "k={k}: {up} * {down} != 1"
                    );
                }
                (Some(zero), None) => {
                    prop_assert_eq!(zero, 0.0);
                    prop_assert_eq!(t.right, 0.0, "up = 0 needs a zero right block");
                }
                (None, Some(zero)) => {
                    prop_assert_eq!(zero, 0.0);
                    prop_assert_eq!(t.left, 0.0, "down = 0 needs a zero left block");
                }
                (None, None) => {}
            }
        }
    }

    #[test]
    fn permutation_resampling_preserves_the_multiset(len in 2usize..40, seed in any::<u64>()) {
        let train: Vec<Observation> = (0..len)
            .map(|i| Observation::new(vec![i as f64, (i * i) as f64]).unwrap())
            .collect();
        let mut rng = stream_rng(seed, 0);
        let sample = resample(&train, ResampleMethod::Permutation, &mut rng).unwrap();
        let key = |p: &Observation| p.values().to_vec();
        let mut a: Vec<_> = train.iter().map(key).collect();
        let mut b: Vec<_> = sample.iter().map(key).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_resampling_draws_members_only(len in 1usize..40, seed in any::<u64>()) {
        let train: Vec<Observation> = (0..len)
            .map(|i| Observation::new(vec![i as f64 / 3.0]).unwrap())
            .collect();
        let mut rng = stream_rng(seed, 1);
        let sample = resample(&train, ResampleMethod::Bootstrap, &mut rng).unwrap();
        prop_assert_eq!(sample.len(), train.len());
        for p in &sample {
            prop_assert!(train.iter().any(|q| q == p), "{p:?} not in training data");
        }
    }

    #[test]
    fn per_split_quantile_is_monotone_in_the_level(
        values in proptest::collection::vec(-100.0f64..100.0, 5..60),
    ) {
        // One split, each record carrying one value: a higher exceedance
        // budget can only lower the threshold.
        let records: Vec<MaxScanRecord> = values
            .iter()
            .map(|&v| {
                MaxScanRecord::from_parts(2, vec![Some(v)], vec![Some(v)], vec![Some(v)])
                    .unwrap()
            })
            .collect();
        let mut prev: Option<f64> = None;
        for level in [0.05, 0.1, 0.25, 0.5, 0.75, 0.95] {
            let rho = per_k_quantile(&records, Statistic::Mean, level).unwrap()[&2];
            if let Some(p) = prev {
                prop_assert!(rho <= p, "level {level}: {rho} > {p}");
            }
            prev = Some(rho);
        }
    }
}
