//! Resampling calibration of per-split critical values.
//!
//! Training data under the no-change hypothesis is resampled B times
//! (bootstrap or permutation). Each replicate is scanned like deployment
//! data: every window position contributes all three statistics at every
//! split k, and the per-(statistic, k) maximum over positions is recorded.
//! Per-k thresholds are conservative upper order statistics of those
//! maxima at an inner level alpha_star, and alpha_star is tuned per
//! statistic by a damped fixed-point iteration until the family-wise
//! alarm rate across all k matches the target alpha.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_uniform_dim, GraphKind, Observation};
use crate::rng::stream_rng;
use crate::specialfn::f_quantile;
use crate::stats::{profile, Statistic};

/// How replicates are drawn from the training sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResampleMethod {
    /// I.i.d. uniform draws with replacement, same length.
    #[serde(rename = "bootstrap")]
    Bootstrap,
    /// A uniform random permutation of the training sequence.
    #[serde(rename = "permutation")]
    Permutation,
}

impl ResampleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ResampleMethod::Bootstrap => "bootstrap",
            ResampleMethod::Permutation => "permutation",
        }
    }
}

impl std::fmt::Display for ResampleMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" => Ok(ResampleMethod::Bootstrap),
            "permutation" => Ok(ResampleMethod::Permutation),
            other => Err(Error::domain(format!(
                "unknown resample method {other:?} (expected bootstrap or permutation)"
            ))),
        }
    }
}

/// Calibration parameters. `k_range` is implied: splits {2, ..., 2n-2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub n: usize,
    pub alpha: f64,
    /// Number of resampling replicates B.
    pub reps: usize,
    pub method: ResampleMethod,
    pub graph: GraphKind,
    pub seed: u64,
    pub bisection_tol: f64,
    pub max_bisection_iters: usize,
}

pub const DEFAULT_REPS: usize = 500;
pub const DEFAULT_BISECTION_TOL: f64 = 0.001;
pub const DEFAULT_MAX_BISECTION_ITERS: usize = 100;

impl CalibrationConfig {
    pub fn new(
        n: usize,
        alpha: f64,
        reps: usize,
        method: ResampleMethod,
        graph: GraphKind,
        seed: u64,
    ) -> Result<Self> {
        let config = CalibrationConfig {
            n,
            alpha,
            reps,
            method,
            graph,
            seed,
            bisection_tol: DEFAULT_BISECTION_TOL,
            max_bisection_iters: DEFAULT_MAX_BISECTION_ITERS,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain("window half-length must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("alpha must lie in (0,1)"));
        }
        if self.alpha * (self.reps as f64) < 5.0 {
            return Err(Error::domain(
                "alpha * reps must be at least 5 for quantile estimability",
            ));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::domain("bisection_tol must be positive"));
        }
        if self.max_bisection_iters == 0 {
            return Err(Error::domain("max_bisection_iters must be positive"));
        }
        Ok(())
    }

    /// Number of splits scanned per window: 2n - 3.
    pub fn split_count(&self) -> usize {
        2 * self.n - 3
    }

    /// Split indices {2, ..., 2n-2}.
    pub fn splits(&self) -> impl Iterator<Item = usize> {
        2..=(2 * self.n - 2)
    }
}

/// One replicate's per-(statistic, split) maxima over the scan zone.
/// `None` means every scan position degenerated at that entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxScanRecord {
    n: usize,
    mean: Vec<Option<f64>>,
    var_up: Vec<Option<f64>>,
    var_down: Vec<Option<f64>>,
}

impl MaxScanRecord {
    /// Builds a record from per-split maxima; all three vectors must have
    /// length 2n - 3 (ordered by k = 2, ..., 2n-2).
    pub fn from_parts(
        n: usize,
        mean: Vec<Option<f64>>,
        var_up: Vec<Option<f64>>,
        var_down: Vec<Option<f64>>,
    ) -> Result<Self> {
        let want = 2 * n - 3;
        for v in [&mean, &var_up, &var_down] {
            if v.len() != want {
                return Err(Error::domain(format!(
                    "record needs {want} split entries, got {}",
                    v.len()
                )));
            }
        }
        Ok(MaxScanRecord {
            n,
            mean,
            var_up,
            var_down,
        })
    }

    pub fn half_len(&self) -> usize {
        self.n
    }

    /// Per-split maxima for one statistic, ordered by k = 2, ..., 2n-2.
    pub fn values(&self, stat: Statistic) -> &[Option<f64>] {
        match stat {
            Statistic::Mean => &self.mean,
            Statistic::VarUp => &self.var_up,
            Statistic::VarDown => &self.var_down,
        }
    }

    /// True when every split degenerated for this statistic.
    pub fn is_flagged(&self, stat: Statistic) -> bool {
        self.values(stat).iter().all(|v| v.is_none())
    }
}

/// Draws one replicate from the training sequence.
pub fn resample<R: Rng>(
    train: &[Observation],
    method: ResampleMethod,
    rng: &mut R,
) -> Result<Vec<Observation>> {
    if train.is_empty() {
        return Err(Error::TooFewObservations { min: 1, got: 0 });
    }
    match method {
        ResampleMethod::Bootstrap => Ok((0..train.len())
            .map(|_| train[rng.gen_range(0..train.len())].clone())
            .collect()),
        ResampleMethod::Permutation => {
            let mut out = train.to_vec();
            out.shuffle(rng);
            Ok(out)
        }
    }
}

/// Scans a replicate over the zone of all window positions and records the
/// per-(statistic, split) maxima.
///
/// The zone places a window of 2n at every start s in {0, ..., N-2n}; each
/// window is profiled with the same arithmetic as single-window evaluation,
/// so a plain per-window oracle reproduces this exactly.
pub fn max_scan(sampled: &[Observation], config: &CalibrationConfig) -> Result<MaxScanRecord> {
    config.validate()?;
    let m = 2 * config.n;
    if sampled.len() < m {
        return Err(Error::TooFewObservations {
            min: m,
            got: sampled.len(),
        });
    }
    let t_l = config.split_count();
    let mut mean = vec![None; t_l];
    let mut var_up = vec![None; t_l];
    let mut var_down = vec![None; t_l];
    for s in 0..=(sampled.len() - m) {
        let p = profile(&sampled[s..s + m], config.graph)?;
        for (idx, sv) in p.splits().iter().enumerate() {
            merge_max(&mut mean[idx], sv.mean);
            merge_max(&mut var_up[idx], sv.var_up);
            merge_max(&mut var_down[idx], sv.var_down);
        }
    }
    Ok(MaxScanRecord {
        n: config.n,
        mean,
        var_up,
        var_down,
    })
}

fn merge_max(slot: &mut Option<f64>, v: Option<f64>) {
    if let Some(x) = v {
        if slot.map_or(true, |cur| x > cur) {
            *slot = Some(x);
        }
    }
}

/// Conservative per-k upper quantile of the replicate maxima.
///
/// For each split, the values present across records are sorted and the
/// ceil(level * count)-th largest is returned (no interpolation), so the
/// exceedance rate per k is at most `level` at finite B. Splits where every
/// record degenerated are omitted; an error is returned only if that
/// happens at every split.
pub fn per_k_quantile(
    records: &[MaxScanRecord],
    stat: Statistic,
    level: f64,
) -> Result<BTreeMap<usize, f64>> {
    if records.is_empty() {
        return Err(Error::domain("no replicates"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("quantile level must lie in (0,1)"));
    }
    let t_l = records[0].mean.len();
    for r in records {
        if r.mean.len() != t_l {
            return Err(Error::domain("replicates disagree on split count"));
        }
    }
    let mut out = BTreeMap::new();
    for idx in 0..t_l {
        let mut vals: Vec<f64> = records
            .iter()
            .filter_map(|r| r.values(stat)[idx])
            .collect();
        if vals.is_empty() {
            continue;
        }
        vals.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite statistics"));
        let rank = ((level * vals.len() as f64).ceil() as usize).clamp(1, vals.len());
        out.insert(idx + 2, vals[rank - 1]);
    }
    if out.is_empty() {
        return Err(Error::Degenerate(
            "every replicate degenerated at every split",
        ));
    }
    Ok(out)
}

/// Per-statistic calibration output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatThresholds {
    /// Inner per-k level the iteration settled on.
    pub alpha_star: f64,
    /// Family-wise alarm rate achieved on the replicates at `alpha_star`.
    pub achieved_rate: f64,
    /// Whether |achieved_rate - alpha| came within the tolerance.
    pub converged: bool,
    pub iterations: usize,
    /// Replicates that degenerated at every split (excluded throughout).
    pub flagged_replicates: usize,
    /// Critical value per split k; splits with no usable data are absent.
    pub rho: BTreeMap<usize, f64>,
}

/// Calibrated critical values for all three statistics plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub n: usize,
    pub dim: usize,
    pub graph: GraphKind,
    pub method: ResampleMethod,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub stats: BTreeMap<Statistic, StatThresholds>,
}

impl ThresholdTable {
    pub fn stat(&self, stat: Statistic) -> &StatThresholds {
        &self.stats[&stat]
    }

    pub fn threshold(&self, stat: Statistic, k: usize) -> Option<f64> {
        self.stats.get(&stat).and_then(|s| s.rho.get(&k)).copied()
    }

    pub fn converged(&self) -> bool {
        self.stats.values().all(|s| s.converged)
    }
}

/// Tunes the inner level for every statistic so the family-wise alarm rate
/// over the replicates matches the target, then freezes the thresholds.
///
/// Update rule per iteration: level += (alpha - rate) / (2 t_L) with
/// t_L = 2n - 3, starting from alpha / (2 t_L). A statistic with no usable
/// replicate at all is an error; non-convergence within the iteration cap
/// is reported through the `converged` flag.
pub fn calibrate_family(
    records: &[MaxScanRecord],
    config: &CalibrationConfig,
    dim: usize,
) -> Result<ThresholdTable> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::domain("no replicates"));
    }
    let mut stats = BTreeMap::new();
    for stat in Statistic::ALL {
        stats.insert(stat, calibrate_one(records, config, stat)?);
    }
    Ok(ThresholdTable {
        n: config.n,
        dim,
        graph: config.graph,
        method: config.method,
        alpha: config.alpha,
        reps: config.reps,
        seed: config.seed,
        stats,
    })
}

const LEVEL_FLOOR: f64 = 1e-12;
const LEVEL_CEIL: f64 = 1.0 - 1e-12;

fn calibrate_one(
    records: &[MaxScanRecord],
    config: &CalibrationConfig,
    stat: Statistic,
) -> Result<StatThresholds> {
    let flagged = records.iter().filter(|r| r.is_flagged(stat)).count();
    let usable = records.len() - flagged;
    if usable == 0 {
        return Err(Error::Degenerate(
            "every replicate degenerated; cannot calibrate",
        ));
    }
    let t_l = config.split_count() as f64;
    let mut level = (config.alpha / (2.0 * t_l)).clamp(LEVEL_FLOOR, LEVEL_CEIL);
    let mut iterations = 0;
    let mut converged = false;
    let (rho, achieved) = loop {
        iterations += 1;
        let rho = per_k_quantile(records, stat, level)?;
        let achieved = family_rate(records, stat, &rho, usable);
        if (achieved - config.alpha).abs() <= config.bisection_tol {
            converged = true;
            break (rho, achieved);
        }
        if iterations >= config.max_bisection_iters {
            break (rho, achieved);
        }
        level = (level + (config.alpha - achieved) / (2.0 * t_l)).clamp(LEVEL_FLOOR, LEVEL_CEIL);
    };
    Ok(StatThresholds {
        alpha_star: level,
        achieved_rate: achieved,
        converged,
        iterations,
        flagged_replicates: flagged,
        rho,
    })
}

/// Fraction of usable replicates where any split strictly exceeds its
/// threshold.
fn family_rate(
    records: &[MaxScanRecord],
    stat: Statistic,
    rho: &BTreeMap<usize, f64>,
    usable: usize,
) -> f64 {
    let alarms = records
        .iter()
        .filter(|r| {
            r.values(stat)
                .iter()
                .enumerate()
                .any(|(idx, v)| match (v, rho.get(&(idx + 2))) {
                    (Some(x), Some(t)) => x > t,
                    _ => false,
                })
        })
        .count();
    alarms as f64 / usable as f64
}

/// Draws B replicates from the training stream and scans each one.
///
/// Replicate b draws from an independent, reproducible stream derived from
/// (seed, b); replicates run in parallel and are collected in index order,
/// so the result is bit-identical for a fixed config regardless of thread
/// count.
pub fn scan_replicates(
    train: &[Observation],
    config: &CalibrationConfig,
) -> Result<Vec<MaxScanRecord>> {
    config.validate()?;
    if train.len() < 2 * config.n {
        return Err(Error::TooFewObservations {
            min: 2 * config.n,
            got: train.len(),
        });
    }
    check_uniform_dim(train)?;
    (0..config.reps)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(config.seed, b as u64);
            let sampled = resample(train, config.method, &mut rng)?;
            max_scan(&sampled, config)
        })
        .collect()
}

/// Full pipeline: resample the training stream B times, scan each
/// replicate, and calibrate the family of thresholds.
pub fn calibrate(train: &[Observation], config: &CalibrationConfig) -> Result<ThresholdTable> {
    let records = scan_replicates(train, config)?;
    calibrate_family(&records, config, train[0].dim())
}

/// Critical value at the central split under the Gaussian complete-graph
/// null laws (no resampling).
///
/// Mean: 2 (N/D) f_quantile(1-alpha; N, D) with N = d and D = 2(n-1)d,
/// matching the symmetric form of the statistic at k = n. VarUp and
/// VarDown: f_quantile(1-alpha; (n-1)d, (n-1)d). Valid for the k = n split
/// only.
pub fn parametric_threshold(n: usize, d: usize, alpha: f64, stat: Statistic) -> Result<f64> {
    if n < 2 || d == 0 {
        return Err(Error::domain("need n >= 2 and d >= 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha must lie in (0,1)"));
    }
    match stat {
        Statistic::Mean => {
            let num = d as f64;
            let den = (2 * (n - 1) * d) as f64;
            Ok(2.0 * (num / den) * f_quantile(1.0 - alpha, num, den)?)
        }
        Statistic::VarUp | Statistic::VarDown => {
            let df = ((n - 1) * d) as f64;
            Ok(f_quantile(1.0 - alpha, df, df)?)
        }
    }
}
