//! Shared generators and independent oracles for the integration suites.
//!
//! The oracles deliberately avoid the library's own sweep machinery: the
//! spanning-tree oracle enumerates every labeled tree, and the scan oracle
//! evaluates each window position and split through the one-split API.

#![allow(dead_code)]

use gsrcpd_core::calibrate::{CalibrationConfig, MaxScanRecord};
use gsrcpd_core::graph::{squared_distance, GraphKind, Observation};
use gsrcpd_core::rng::stream_rng;
use gsrcpd_core::stats::split_statistics;
use gsrcpd_core::spanning_triplet;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn obs(values: &[f64]) -> Observation {
    Observation::new(values.to_vec()).unwrap()
}

/// I.i.d. standard normal observations.
pub fn gauss_stream(len: usize, d: usize, seed: u64, stream: u64) -> Vec<Observation> {
    let mut rng = stream_rng(seed, stream);
    (0..len)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            Observation::new(v).unwrap()
        })
        .collect()
}

/// Standard normal stream whose every coordinate shifts by `shift` from
/// index `change_at` on.
pub fn shifted_gauss_stream(
    len: usize,
    d: usize,
    change_at: usize,
    shift: f64,
    seed: u64,
    stream: u64,
) -> Vec<Observation> {
    let mut rng = stream_rng(seed, stream);
    (0..len)
        .map(|i| {
            let offset = if i >= change_at { shift } else { 0.0 };
            let v: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal) + offset)
                .collect();
            Observation::new(v).unwrap()
        })
        .collect()
}

/// Minimum spanning weight by exhaustive search over all m^(m-2) labeled
/// trees (decoded from their index sequences), for 2 <= m <= 7.
pub fn exhaustive_mst_weight(points: &[Observation]) -> f64 {
    let m = points.len();
    assert!((2..=7).contains(&m), "exhaustive search needs 2..=7 points");
    let dist =
        |i: usize, j: usize| squared_distance(&points[i], &points[j]).unwrap();
    if m == 2 {
        return dist(0, 1);
    }
    let seq_len = m - 2;
    let total = m.pow(seq_len as u32);
    let mut seq = vec![0usize; seq_len];
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % m;
            c /= m;
        }
        let w = decoded_tree_weight(&seq, m, &dist);
        if w < best {
            best = w;
        }
    }
    best
}

/// Weight of the labeled tree a neighbor-index sequence decodes to.
fn decoded_tree_weight(seq: &[usize], m: usize, dist: &dyn Fn(usize, usize) -> f64) -> f64 {
    let mut degree = vec![1u32; m];
    for &s in seq {
        degree[s] += 1;
    }
    let mut total = 0.0;
    for &s in seq {
        let leaf = (0..m).find(|&i| degree[i] == 1).unwrap();
        degree[leaf] -= 1;
        degree[s] -= 1;
        total += dist(leaf.min(s), leaf.max(s));
    }
    let rest: Vec<usize> = (0..m).filter(|&i| degree[i] == 1).collect();
    assert_eq!(rest.len(), 2);
    total + dist(rest[0], rest[1])
}

/// Plain per-window, per-split scan: every start s places a window of 2n,
/// every split goes through the one-split evaluation, maxima are merged by
/// hand. Must agree exactly with the library's swept scan.
pub fn naive_max_scan(points: &[Observation], config: &CalibrationConfig) -> MaxScanRecord {
    let n = config.n;
    let m = 2 * n;
    let t_l = 2 * n - 3;
    let mut mean: Vec<Option<f64>> = vec![None; t_l];
    let mut var_up: Vec<Option<f64>> = vec![None; t_l];
    let mut var_down: Vec<Option<f64>> = vec![None; t_l];
    let merge = |slot: &mut Option<f64>, v: Option<f64>| {
        if let Some(x) = v {
            if slot.map_or(true, |cur| x > cur) {
                *slot = Some(x);
            }
        }
    };
    for s in 0..=(points.len() - m) {
        let win = &points[s..s + m];
        for (idx, k) in (2..=(2 * n - 2)).enumerate() {
            let trip = spanning_triplet(win, k, config.graph).unwrap();
            let sv = split_statistics(&trip, m, k).unwrap();
            merge(&mut mean[idx], sv.mean);
            merge(&mut var_up[idx], sv.var_up);
            merge(&mut var_down[idx], sv.var_down);
        }
    }
    MaxScanRecord::from_parts(n, mean, var_up, var_down).unwrap()
}

/// Relative gap |a-b| / max(|a|, |b|, 1).
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn graph_kinds() -> [GraphKind; 3] {
    [GraphKind::Complete, GraphKind::Mst, GraphKind::Nng]
}
