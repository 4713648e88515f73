//! Spanning-ratio statistics over window splits.
//!
//! For a window of 2n observations split at k, with block weights
//! (wl, wr, w2n) from [`crate::graph::spanning_triplet`]:
//!
//! - Mean ratio: `(w2n - s) / s` where `s = (2n/k) wl + (2n/(2n-k)) wr`
//!   rescales each block weight to the pair count of the full window.
//!   Large values mean the split explains much of the total spread.
//! - Upward variance ratio: `((k-1) wr) / ((2n-k-1) wl)`, large when the
//!   right block is more dispersed than the left.
//! - Downward variance ratio: the reciprocal, large when dispersion drops.
//!
//! A statistic is degenerate at a split when its denominator vanishes
//! (a block of identical points); degenerate values are `None` and are
//! skipped by calibration and detection, which track a skip count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_window, CgScan, DistanceMatrix, GraphKind, Observation, SpanningTriplet};

/// The three scan statistics. Order is the tie-break order for events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "mean")]
    Mean,
    #[serde(rename = "var_up")]
    VarUp,
    #[serde(rename = "var_down")]
    VarDown,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Mean, Statistic::VarUp, Statistic::VarDown];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::VarUp => "var_up",
            Statistic::VarDown => "var_down",
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Statistic::Mean),
            "var_up" => Ok(Statistic::VarUp),
            "var_down" => Ok(Statistic::VarDown),
            other => Err(Error::domain(format!(
                "unknown statistic {other:?} (expected mean, var_up, or var_down)"
            ))),
        }
    }
}

/// The three ratio statistics at one split; `None` marks a degenerate value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitValues {
    pub k: usize,
    pub mean: Option<f64>,
    pub var_up: Option<f64>,
    pub var_down: Option<f64>,
}

impl SplitValues {
    pub fn get(&self, stat: Statistic) -> Option<f64> {
        match stat {
            Statistic::Mean => self.mean,
            Statistic::VarUp => self.var_up,
            Statistic::VarDown => self.var_down,
        }
    }

    fn degenerate_count(&self) -> usize {
        [self.mean, self.var_up, self.var_down]
            .iter()
            .filter(|v| v.is_none())
            .count()
    }
}

/// Evaluates the three statistics from block weights at split k of a
/// window of `window_len` observations.
pub fn split_statistics(
    triplet: &SpanningTriplet,
    window_len: usize,
    k: usize,
) -> Result<SplitValues> {
    if window_len < 4 || window_len % 2 != 0 {
        return Err(Error::BadWindowLength { got: window_len });
    }
    let max = window_len - 2;
    if k < 2 || k > max {
        return Err(Error::SplitOutOfRange { k, max });
    }
    for w in [triplet.left, triplet.right, triplet.full] {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::numerics(format!("invalid block weight {w}")));
        }
    }
    let m = window_len as f64;
    let kf = k as f64;
    let scaled = (m / kf) * triplet.left + (m / (m - kf)) * triplet.right;
    let mean = guard(if scaled == 0.0 {
        None
    } else {
        Some((triplet.full - scaled) / scaled)
    });
    let up_num = (kf - 1.0) * triplet.right;
    let up_den = (m - kf - 1.0) * triplet.left;
    let var_up = guard(if up_den == 0.0 {
        None
    } else {
        Some(up_num / up_den)
    });
    let var_down = guard(if up_num == 0.0 {
        None
    } else {
        Some(up_den / up_num)
    });
    Ok(SplitValues {
        k,
        mean,
        var_up,
        var_down,
    })
}

fn guard(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.is_finite())
}

/// Symmetric mean ratio of the central split: `w2n / (wl + wr) - 2`.
///
/// This is the form the distribution theory is stated for; it equals twice
/// the Mean statistic at k = n. `None` when both blocks are degenerate.
pub fn symmetric_mean_statistic(triplet: &SpanningTriplet) -> Option<f64> {
    let denom = triplet.left + triplet.right;
    if denom == 0.0 {
        return None;
    }
    guard(Some(triplet.full / denom - 2.0))
}

/// All three statistics at every split of one window, ordered by k.
#[derive(Debug, Clone)]
pub struct WindowProfile {
    half_len: usize,
    splits: Vec<SplitValues>,
}

impl WindowProfile {
    pub fn half_len(&self) -> usize {
        self.half_len
    }

    /// Split values in increasing k over {2, ..., 2n-2}.
    pub fn splits(&self) -> &[SplitValues] {
        &self.splits
    }

    /// Number of evaluated splits, 2n - 3.
    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    /// Largest non-degenerate value of the statistic with its split;
    /// ties resolve to the smallest k. `None` if every split degenerated.
    pub fn max(&self, stat: Statistic) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for sv in &self.splits {
            if let Some(v) = sv.get(stat) {
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((sv.k, v));
                }
            }
        }
        best
    }

    /// Total count of degenerate (statistic, split) entries.
    pub fn degenerate_count(&self) -> usize {
        self.splits.iter().map(|s| s.degenerate_count()).sum()
    }

    #[cfg(test)]
    pub(crate) fn from_splits(half_len: usize, splits: Vec<SplitValues>) -> Self {
        WindowProfile { half_len, splits }
    }
}

/// Sweeps every split of the window and evaluates all three statistics.
///
/// Complete-graph weights reuse one prefix/suffix scan; MST and NNG reuse
/// one pairwise distance matrix. The arithmetic per split is identical to
/// `spanning_triplet` followed by `split_statistics`.
pub fn profile(points: &[Observation], kind: GraphKind) -> Result<WindowProfile> {
    check_window(points)?;
    let m = points.len();
    let mut splits = Vec::with_capacity(m - 3);
    match kind {
        GraphKind::Complete => {
            let scan = CgScan::new(points)?;
            let full = scan.full_weight();
            for k in 2..=(m - 2) {
                let t = SpanningTriplet {
                    left: scan.left_weight(k),
                    right: scan.right_weight(k),
                    full,
                };
                splits.push(split_statistics(&t, m, k)?);
            }
        }
        GraphKind::Mst | GraphKind::Nng => {
            let dm = DistanceMatrix::new(points)?;
            let full = dm.block_weight(kind, 0, m);
            for k in 2..=(m - 2) {
                let t = SpanningTriplet {
                    left: dm.block_weight(kind, 0, k),
                    right: dm.block_weight(kind, k, m),
                    full,
                };
                splits.push(split_statistics(&t, m, k)?);
            }
        }
    }
    Ok(WindowProfile {
        half_len: m / 2,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{spanning_triplet, split_range};

    fn obs(v: &[f64]) -> Observation {
        Observation::new(v.to_vec()).unwrap()
    }

    fn window_1d(vals: &[f64]) -> Vec<Observation> {
        vals.iter().map(|&v| obs(&[v])).collect()
    }

    #[test]
    fn hand_computed_split_on_dyadic_window() {
        // Left block [0,2,0,2] has weight 16, right [10,14,10,14] has 64,
        // cross pairs add 2016, so w2n = 2096. At k = 4 the scaled blocks
        // are 32 + 128 = 160, giving mean (2096-160)/160, var ratios 4, 1/4.
        let pts = window_1d(&[0.0, 2.0, 0.0, 2.0, 10.0, 14.0, 10.0, 14.0]);
        let t = spanning_triplet(&pts, 4, GraphKind::Complete).unwrap();
        assert_eq!((t.left, t.right, t.full), (16.0, 64.0, 2096.0));
        let sv = split_statistics(&t, 8, 4).unwrap();
        assert_eq!(sv.mean, Some(12.1));
        assert_eq!(sv.var_up, Some(4.0));
        assert_eq!(sv.var_down, Some(0.25));
    }

    #[test]
    fn degenerate_blocks_yield_none() {
        // Both blocks are constant: every denominator vanishes.
        let pts = window_1d(&[0.0, 0.0, 1.0, 1.0]);
        let t = spanning_triplet(&pts, 2, GraphKind::Complete).unwrap();
        let sv = split_statistics(&t, 4, 2).unwrap();
        assert_eq!(sv, SplitValues { k: 2, mean: None, var_up: None, var_down: None });
        // Only the left block constant: mean and var_down survive.
        let pts = window_1d(&[1.0, 1.0, 0.0, 4.0]);
        let t = spanning_triplet(&pts, 2, GraphKind::Complete).unwrap();
        let sv = split_statistics(&t, 4, 2).unwrap();
        assert!(sv.mean.is_some());
        assert_eq!(sv.var_up, None);
        assert_eq!(sv.var_down, Some(0.0));
    }

    #[test]
    fn variance_ratios_are_reciprocal() {
        let pts = window_1d(&[0.5, -1.25, 2.0, 0.75, -0.5, 1.5, 3.0, -2.25]);
        for k in split_range(4) {
            let t = spanning_triplet(&pts, k, GraphKind::Complete).unwrap();
            let sv = split_statistics(&t, 8, k).unwrap();
            let prod = sv.var_up.unwrap() * sv.var_down.unwrap();
            assert!((prod - 1.0).abs() <= 1e-12, "k={k}: {prod}");
        }
    }

    #[test]
    fn split_statistics_validates_inputs() {
        let t = SpanningTriplet { left: 1.0, right: 1.0, full: 4.0 };
        assert!(split_statistics(&t, 7, 3).is_err());
        assert!(split_statistics(&t, 8, 1).is_err());
        assert!(split_statistics(&t, 8, 7).is_err());
        let bad = SpanningTriplet { left: -1.0, right: 1.0, full: 4.0 };
        assert!(split_statistics(&bad, 8, 4).is_err());
    }

    #[test]
    fn symmetric_form_doubles_the_central_mean_ratio() {
        let pts = window_1d(&[0.0, 2.0, 0.0, 2.0, 10.0, 14.0, 10.0, 14.0]);
        let t = spanning_triplet(&pts, 4, GraphKind::Complete).unwrap();
        let sym = symmetric_mean_statistic(&t).unwrap();
        let mean = split_statistics(&t, 8, 4).unwrap().mean.unwrap();
        assert!((sym - 2.0 * mean).abs() <= 1e-12 * sym.abs().max(1.0));
        // 2096/80 - 2 = 24.2 exactly on this dyadic window.
        assert_eq!(sym, 24.2);
    }

    #[test]
    fn profile_covers_all_splits_in_order() {
        let pts = window_1d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let p = profile(&pts, GraphKind::Complete).unwrap();
        assert_eq!(p.half_len(), 4);
        let ks: Vec<usize> = p.splits().iter().map(|s| s.k).collect();
        assert_eq!(ks, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn profile_matches_per_split_evaluation_bitwise() {
        let mut state = 3141592653589793_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        let pts: Vec<Observation> = (0..12)
            .map(|_| Observation::new((0..3).map(|_| next()).collect()).unwrap())
            .collect();
        for kind in GraphKind::ALL {
            let p = profile(&pts, kind).unwrap();
            for sv in p.splits() {
                let t = spanning_triplet(&pts, sv.k, kind).unwrap();
                let direct = split_statistics(&t, pts.len(), sv.k).unwrap();
                assert_eq!(*sv, direct, "{kind} k={}", sv.k);
            }
        }
    }

    #[test]
    fn mean_profile_peaks_at_a_strong_separation() {
        let pts = window_1d(&[0.0, 0.1, -0.1, 0.05, 100.0, 100.2, 99.9, 100.1]);
        for kind in GraphKind::ALL {
            let p = profile(&pts, kind).unwrap();
            let (k, _) = p.max(Statistic::Mean).unwrap();
            assert_eq!(k, 4, "{kind}");
        }
    }

    #[test]
    fn max_breaks_ties_toward_smallest_split() {
        let splits = vec![
            SplitValues { k: 2, mean: Some(1.0), var_up: None, var_down: None },
            SplitValues { k: 3, mean: Some(3.0), var_up: Some(2.0), var_down: None },
            SplitValues { k: 4, mean: Some(3.0), var_up: Some(5.0), var_down: Some(0.5) },
        ];
        let p = WindowProfile::from_splits(3, splits);
        assert_eq!(p.max(Statistic::Mean), Some((3, 3.0)));
        assert_eq!(p.max(Statistic::VarUp), Some((4, 5.0)));
        assert_eq!(p.max(Statistic::VarDown), Some((4, 0.5)));
        // Degenerate entries: var_up and var_down at k=2, var_down at k=3.
        assert_eq!(p.degenerate_count(), 3);
    }

    #[test]
    fn all_degenerate_profile_reports_no_max() {
        let pts: Vec<Observation> = (0..6).map(|_| obs(&[2.5])).collect();
        let p = profile(&pts, GraphKind::Complete).unwrap();
        assert_eq!(p.max(Statistic::Mean), None);
        assert_eq!(p.degenerate_count(), 3 * p.len());
    }
}
