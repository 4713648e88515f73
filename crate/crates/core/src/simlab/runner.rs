//! Experiment driver: calibrate a detector, score labeled trials, and
//! reproduce the benchmark power tables.
//!
//! A power run draws `trials` independent windows from a [`Scenario`]
//! (change present in roughly half of them), applies a detector to each,
//! and reports the confusion counts together with the derived metrics.
//! Trials whose detector is not applicable (degenerate window, singular
//! covariance) are excluded from every rate but reported in the count.
//!
//! Detector thresholds come in two flavors. `Central` mode mirrors the
//! benchmark tables: the change, when present, sits exactly at the window
//! center, so only the middle split k = n is tested, at the plain
//! per-split level alpha, against critical values resampled from the
//! sample itself (the classical two-sample resampling test; no training
//! data involved). `FullScan` mode uses family-calibrated thresholds at
//! every split over a separate training stream and is what an online or
//! scanning deployment would use.

use rayon::prelude::*;
use serde::Serialize;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::calibrate::{
    calibrate, CalibrationConfig, ResampleMethod, ThresholdTable, DEFAULT_BISECTION_TOL,
    DEFAULT_MAX_BISECTION_ITERS, DEFAULT_REPS,
};
use crate::detect::detect_offline;
use crate::error::{Error, Result};
use crate::graph::{DistanceMatrix, GraphKind, Observation, SpanningTriplet};
use crate::rng::{derive_seed, stream_rng, tag};
use crate::simlab::baseline::{edge_count_baseline, hotelling_t2, BaselineDecision};
use crate::simlab::scenario::{Scenario, ScenarioKind};
use crate::stats::{split_statistics, Statistic};

/// How thresholds are assembled for a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepMode {
    /// Test only the central split k = n at the per-split level alpha.
    Central,
    /// Family-calibrated thresholds over every split {2, ..., 2n-2}.
    FullScan,
}

/// Spanning-ratio detector settings for a power run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorConfig {
    pub graph: GraphKind,
    pub alpha: f64,
    /// Resampling replicates B.
    pub reps: usize,
    pub method: ResampleMethod,
    pub sweep: SweepMode,
    /// FullScan training stream length; None means a single window of 2n.
    /// Central mode resamples each sample itself and ignores this.
    pub training_len: Option<usize>,
}

impl DetectorConfig {
    /// The settings the benchmark tables are run at: permutation
    /// resampling, B = 500, alpha = 0.025, central split only, critical
    /// values resampled from each sample.
    pub fn table_default(graph: GraphKind) -> Self {
        DetectorConfig {
            graph,
            alpha: 0.025,
            reps: DEFAULT_REPS,
            method: ResampleMethod::Permutation,
            sweep: SweepMode::Central,
            training_len: None,
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// Whether the generator actually planted a change.
    pub change: bool,
    /// Whether the detector raised an alarm on a scored statistic.
    pub alarm: bool,
    /// Whether the trial was dropped (detector not applicable).
    pub excluded: bool,
}

/// Confusion counts and derived metrics for one power run.
///
/// Rates are computed over the scored trials only. Empty denominators
/// yield 0.0: sensitivity with no planted changes, the false positive rate
/// with no nulls, and everything when every trial was excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    /// Trials the detector was not applicable to.
    pub excluded: usize,
    pub trials: usize,
    /// (TP + TN) / scored.
    pub accuracy: f64,
    /// TP / (TP + FN).
    pub sensitivity: f64,
    /// Geometric mean of accuracy and sensitivity.
    pub p_mean: f64,
    /// FP / (FP + TN).
    pub fpr: f64,
    pub per_trial: Vec<TrialRecord>,
}

impl PowerReport {
    pub fn from_trials(per_trial: Vec<TrialRecord>) -> Self {
        let trials = per_trial.len();
        let mut tp = 0;
        let mut tn = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        let mut excluded = 0;
        for r in &per_trial {
            if r.excluded {
                excluded += 1;
            } else {
                match (r.change, r.alarm) {
                    (true, true) => tp += 1,
                    (true, false) => fn_ += 1,
                    (false, true) => fp += 1,
                    (false, false) => tn += 1,
                }
            }
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let accuracy = ratio(tp + tn, trials - excluded);
        let sensitivity = ratio(tp, tp + fn_);
        PowerReport {
            true_pos: tp,
            true_neg: tn,
            false_pos: fp,
            false_neg: fn_,
            excluded,
            trials,
            accuracy,
            sensitivity,
            p_mean: (accuracy * sensitivity).sqrt(),
            fpr: ratio(fp, fp + tn),
            per_trial,
        }
    }

    /// Trials that entered the rates: total minus excluded.
    pub fn scored(&self) -> usize {
        self.trials - self.excluded
    }
}

/// Which statistics count as alarms for a scenario: the variance-shift
/// families score the two variance ratios, everything else scores the mean
/// ratio.
pub fn scored_statistics(kind: &ScenarioKind) -> &'static [Statistic] {
    match kind {
        ScenarioKind::GaussVarShift { .. } | ScenarioKind::UniformVarShift => {
            &[Statistic::VarUp, Statistic::VarDown]
        }
        _ => &[Statistic::Mean],
    }
}

/// Builds the family-calibrated threshold table for FullScan runs: draws
/// the training stream from the null regime and calibrates over every
/// split. Central runs never call this; they resample each sample itself.
pub fn build_table(scenario: &Scenario, config: &DetectorConfig) -> Result<ThresholdTable> {
    scenario.validate()?;
    let train_len = config.training_len.unwrap_or(2 * scenario.n);
    let train = scenario.training_stream(train_len)?;
    let cal = CalibrationConfig {
        n: scenario.n,
        alpha: config.alpha,
        reps: config.reps,
        method: config.method,
        graph: config.graph,
        seed: derive_seed(scenario.seed, tag::CALIBRATION),
        bisection_tol: DEFAULT_BISECTION_TOL,
        max_bisection_iters: DEFAULT_MAX_BISECTION_ITERS,
    };
    calibrate(&train, &cal)
}

/// Statistics that fired on one window under the per-sample central test.
struct CentralDecision {
    alarms: Vec<Statistic>,
    /// Every statistic degenerated at the central split.
    excluded: bool,
}

/// The benchmark-table test on one window: resample the window itself B
/// times, take the upper-alpha replicate quantile of each statistic at the
/// central split, and compare the observed values against it.
///
/// Permutations keep the point multiset, so the full-window weight is
/// computed once; only the block weights change per replicate. Replicates
/// that degenerate for a statistic drop out of its quantile, matching the
/// family calibration; a statistic with no usable replicates never fires.
fn central_self_test<R: Rng>(
    points: &[Observation],
    kind: GraphKind,
    alpha: f64,
    reps: usize,
    method: ResampleMethod,
    rng: &mut R,
) -> Result<CentralDecision> {
    let m = points.len();
    let n = m / 2;
    let dm = DistanceMatrix::new(points)?;
    let identity: Vec<usize> = (0..m).collect();
    let observed_full = dm.subset_weight(kind, &identity);
    let observed = split_statistics(
        &SpanningTriplet {
            left: dm.subset_weight(kind, &identity[..n]),
            right: dm.subset_weight(kind, &identity[n..]),
            full: observed_full,
        },
        m,
        n,
    )?;

    let mut mean_vals = Vec::with_capacity(reps);
    let mut up_vals = Vec::with_capacity(reps);
    let mut down_vals = Vec::with_capacity(reps);
    let mut idx = identity;
    for _ in 0..reps {
        let full = match method {
            ResampleMethod::Permutation => {
                idx.shuffle(rng);
                observed_full
            }
            ResampleMethod::Bootstrap => {
                for slot in idx.iter_mut() {
                    *slot = rng.gen_range(0..m);
                }
                dm.subset_weight(kind, &idx)
            }
        };
        let t = SpanningTriplet {
            left: dm.subset_weight(kind, &idx[..n]),
            right: dm.subset_weight(kind, &idx[n..]),
            full,
        };
        let sv = split_statistics(&t, m, n)?;
        if let Some(v) = sv.mean {
            mean_vals.push(v);
        }
        if let Some(v) = sv.var_up {
            up_vals.push(v);
        }
        if let Some(v) = sv.var_down {
            down_vals.push(v);
        }
    }

    let mut alarms = Vec::new();
    for (stat, observed_value, vals) in [
        (Statistic::Mean, observed.mean, &mut mean_vals),
        (Statistic::VarUp, observed.var_up, &mut up_vals),
        (Statistic::VarDown, observed.var_down, &mut down_vals),
    ] {
        let (Some(v), Some(rho)) = (observed_value, upper_quantile(vals, alpha)) else {
            continue;
        };
        if v > rho {
            alarms.push(stat);
        }
    }
    Ok(CentralDecision {
        alarms,
        excluded: observed.mean.is_none()
            && observed.var_up.is_none()
            && observed.var_down.is_none(),
    })
}

/// Descending-rank upper quantile, the same convention as the family
/// calibration: the ceil(level * count)-th largest value, no interpolation.
fn upper_quantile(vals: &mut [f64], level: f64) -> Option<f64> {
    if vals.is_empty() {
        return None;
    }
    vals.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite statistics"));
    let rank = ((level * vals.len() as f64).ceil() as usize).clamp(1, vals.len());
    Some(vals[rank - 1])
}

/// Scores every trial by the per-sample central test.
fn run_power_central(scenario: &Scenario, config: &DetectorConfig) -> Result<PowerReport> {
    // Reuse the calibration validity rules (alpha domain, quantile
    // estimability at B replicates).
    CalibrationConfig {
        n: scenario.n,
        alpha: config.alpha,
        reps: config.reps,
        method: config.method,
        graph: config.graph,
        seed: 0,
        bisection_tol: DEFAULT_BISECTION_TOL,
        max_bisection_iters: DEFAULT_MAX_BISECTION_ITERS,
    }
    .validate()?;
    let scored = scored_statistics(&scenario.kind);
    let resample_seed = derive_seed(scenario.seed, tag::CALIBRATION);
    let per_trial: Result<Vec<TrialRecord>> = (0..scenario.trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial = scenario.generate(t)?;
            let mut rng = stream_rng(resample_seed, t);
            let decision = central_self_test(
                trial.window.observations(),
                config.graph,
                config.alpha,
                config.reps,
                config.method,
                &mut rng,
            )?;
            Ok(TrialRecord {
                trial: t,
                change: trial.change,
                alarm: decision.alarms.iter().any(|s| scored.contains(s)),
                excluded: decision.excluded,
            })
        })
        .collect();
    Ok(PowerReport::from_trials(per_trial?))
}

/// Scores every trial of the scenario against a prebuilt table.
///
/// A trial alarms when any scored statistic exceeds its threshold at any
/// tabulated split. Windows that degenerate at every split are excluded.
pub fn run_power_with_table(scenario: &Scenario, table: &ThresholdTable) -> Result<PowerReport> {
    scenario.validate()?;
    let scored = scored_statistics(&scenario.kind);
    let per_trial: Result<Vec<TrialRecord>> = (0..scenario.trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial = scenario.generate(t)?;
            match detect_offline(&trial.window, table, table.graph) {
                Ok(det) => Ok(TrialRecord {
                    trial: t,
                    change: trial.change,
                    alarm: det.events.iter().any(|e| scored.contains(&e.stat)),
                    excluded: false,
                }),
                Err(Error::Degenerate(_)) => Ok(TrialRecord {
                    trial: t,
                    change: trial.change,
                    alarm: false,
                    excluded: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect();
    Ok(PowerReport::from_trials(per_trial?))
}

/// Scores every trial of the scenario per the sweep mode: the per-sample
/// central test, or family calibration over a training stream followed by
/// a full-split scan of each trial.
pub fn run_power(scenario: &Scenario, config: &DetectorConfig) -> Result<PowerReport> {
    match config.sweep {
        SweepMode::Central => run_power_central(scenario, config),
        SweepMode::FullScan => {
            let table = build_table(scenario, config)?;
            run_power_with_table(scenario, &table)
        }
    }
}

/// Reference detectors runnable on the same trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BaselineKind {
    /// Two-sample location test with pooled covariance.
    Hotelling,
    /// Spanning-tree cross-edge count with permutation p-value.
    EdgeCount,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Hotelling => "hotelling_t2",
            BaselineKind::EdgeCount => "edge_count",
        }
    }
}

/// Scores every trial of the scenario with a baseline test at the central
/// split. `reps` is the permutation count for the edge-count baseline and
/// unused by the location test.
pub fn run_power_baseline(
    scenario: &Scenario,
    kind: BaselineKind,
    alpha: f64,
    reps: usize,
) -> Result<PowerReport> {
    scenario.validate()?;
    let baseline_seed = derive_seed(scenario.seed, tag::BASELINE);
    let per_trial: Result<Vec<TrialRecord>> = (0..scenario.trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial = scenario.generate(t)?;
            let outcome = match kind {
                BaselineKind::Hotelling => hotelling_t2(trial.window.observations(), alpha)?,
                BaselineKind::EdgeCount => {
                    let mut rng = stream_rng(baseline_seed, t);
                    edge_count_baseline(trial.window.observations(), alpha, reps, &mut rng)?
                }
            };
            Ok(TrialRecord {
                trial: t,
                change: trial.change,
                alarm: outcome.decision == BaselineDecision::Reject,
                excluded: outcome.decision == BaselineDecision::NotApplicable,
            })
        })
        .collect();
    Ok(PowerReport::from_trials(per_trial?))
}

// ---- registered table experiments ----

/// Experiment identifiers accepted by [`run_table`].
pub const EXPERIMENT_IDS: &[&str] = &[
    "mean_gauss",
    "var_gauss",
    "mean_uniform",
    "var_uniform",
    "er_connectivity",
];

/// Desk-scale budget; requests beyond it need `full`.
pub const DESK_MAX_TRIALS: usize = 100;
pub const DESK_MAX_REPS: usize = 500;

/// Options for a registered table run.
///
/// `trials` and `reps` default to the experiment's reference settings,
/// clamped to the desk budget unless `full` is set; explicit values above
/// the budget are an error without `full`. Filters restrict the grid (a
/// filter matching nothing yields an empty table); they never change the
/// seeds of the surviving cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableOptions {
    pub trials: Option<usize>,
    pub reps: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
    /// Removes the desk budget caps.
    pub full: bool,
    pub n_filter: Option<Vec<usize>>,
    pub d_filter: Option<Vec<usize>>,
    /// Restrict to these method labels (e.g. "gsr_cg").
    pub methods: Option<Vec<String>>,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            trials: None,
            reps: None,
            alpha: 0.025,
            seed: 1,
            full: false,
            n_filter: None,
            d_filter: None,
            methods: None,
        }
    }
}

impl TableOptions {
    /// Trials per cell; `reference` is what the mirrored experiment used.
    fn effective_trials(&self, reference: usize) -> Result<usize> {
        match self.trials {
            Some(0) => Err(Error::domain("trials must be at least 1")),
            Some(t) if !self.full && t > DESK_MAX_TRIALS => Err(Error::domain(format!(
                "{t} trials exceeds the desk budget of {DESK_MAX_TRIALS}; pass full to lift it"
            ))),
            Some(t) => Ok(t),
            None if self.full => Ok(reference),
            None => Ok(reference.min(DESK_MAX_TRIALS)),
        }
    }

    fn effective_reps(&self) -> Result<usize> {
        match self.reps {
            Some(r) if !self.full && r > DESK_MAX_REPS => Err(Error::domain(format!(
                "{r} replicates exceeds the desk budget of {DESK_MAX_REPS}; pass full to lift it"
            ))),
            Some(r) => Ok(r),
            None => Ok(DEFAULT_REPS),
        }
    }

    fn keeps_method(&self, method: &str) -> bool {
        self.methods
            .as_ref()
            .map_or(true, |ms| ms.iter().any(|m| m == method))
    }

    fn keeps_n(&self, n: usize) -> bool {
        self.n_filter.as_ref().map_or(true, |ns| ns.contains(&n))
    }

    fn keeps_d(&self, d: usize) -> bool {
        self.d_filter.as_ref().map_or(true, |ds| ds.contains(&d))
    }
}

/// One CSV row of a table run. For graph-valued scenarios `d` is the node
/// count of the observed graphs, not the vector dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub scenario: String,
    pub p_mean: f64,
    pub fpr: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub trials: usize,
    pub seed: u64,
}

fn row_from_report(
    method: &str,
    scenario: &Scenario,
    label: &str,
    report: &PowerReport,
) -> ExperimentRow {
    // A cell where the detector never applied (all trials excluded) is
    // reported as NaN rather than a fake zero.
    let (p_mean, fpr, accuracy, sensitivity) = if report.scored() == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            report.p_mean,
            report.fpr,
            report.accuracy,
            report.sensitivity,
        )
    };
    ExperimentRow {
        method: method.to_string(),
        n: scenario.n,
        d: scenario.d,
        scenario: label.to_string(),
        p_mean,
        fpr,
        accuracy,
        sensitivity,
        trials: scenario.trials,
        seed: scenario.seed,
    }
}

/// Runs one registered experiment and returns its rows in grid order.
///
/// Within a cell every method sees the same trials (the cell seed depends
/// only on the grid position), so method columns are paired comparisons.
/// Unknown identifiers are an error; see [`EXPERIMENT_IDS`].
pub fn run_table(experiment: &str, options: &TableOptions) -> Result<Vec<ExperimentRow>> {
    match experiment {
        "mean_gauss" | "var_gauss" | "mean_uniform" | "var_uniform" => {
            shift_table(experiment, options)
        }
        "er_connectivity" => er_table(options),
        other => Err(Error::domain(format!(
            "unknown experiment {other:?}; expected one of {EXPERIMENT_IDS:?}"
        ))),
    }
}

const SHIFT_N_GRID: [usize; 2] = [35, 50];
const SHIFT_D_GRID: [usize; 5] = [1, 10, 50, 100, 500];
const SHIFT_METHODS: [&str; 3] = ["gsr_cg", "hotelling_t2", "edge_count"];

fn shift_kind(experiment: &str, d: usize) -> ScenarioKind {
    match experiment {
        "mean_gauss" => ScenarioKind::gauss_mean_default(d),
        "var_gauss" => ScenarioKind::GaussVarShift { scale: 2.0 },
        "mean_uniform" => ScenarioKind::UniformMeanShift,
        "var_uniform" => ScenarioKind::UniformVarShift,
        other => unreachable!("unregistered shift experiment {other}"),
    }
}

/// Mean- and variance-shift grids: n in {35, 50} x d in {1, 10, 50, 100,
/// 500}, spanning-ratio detector on the complete graph plus both baselines.
fn shift_table(experiment: &str, options: &TableOptions) -> Result<Vec<ExperimentRow>> {
    let trials = options.effective_trials(100)?;
    let reps = options.effective_reps()?;
    let mut rows = Vec::new();
    for (ni, &n) in SHIFT_N_GRID.iter().enumerate() {
        for (di, &d) in SHIFT_D_GRID.iter().enumerate() {
            // Cell seeds run over the unfiltered grid so filters never
            // change which data a surviving cell sees.
            let cell = (ni * SHIFT_D_GRID.len() + di) as u64;
            if !options.keeps_n(n) || !options.keeps_d(d) {
                continue;
            }
            let seed = derive_seed(options.seed, 1000 + cell);
            let scenario = Scenario::new(shift_kind(experiment, d), n, d, trials, seed)?;
            let label = scenario.kind.name();
            for method in SHIFT_METHODS {
                if !options.keeps_method(method) {
                    continue;
                }
                let report = match method {
                    "gsr_cg" => {
                        let mut config = DetectorConfig::table_default(GraphKind::Complete);
                        config.alpha = options.alpha;
                        config.reps = reps;
                        run_power(&scenario, &config)?
                    }
                    "hotelling_t2" => {
                        run_power_baseline(&scenario, BaselineKind::Hotelling, options.alpha, reps)?
                    }
                    "edge_count" => {
                        run_power_baseline(&scenario, BaselineKind::EdgeCount, options.alpha, reps)?
                    }
                    _ => unreachable!(),
                };
                rows.push(row_from_report(method, &scenario, label, &report));
            }
        }
    }
    Ok(rows)
}

const ER_NODES: usize = 30;
const ER_N: usize = 30;
const ER_P0: f64 = 0.5;
const ER_DP_DENOMS: [u32; 4] = [6, 12, 24, 48];
const ER_GRAPHS: [(GraphKind, &str); 3] = [
    (GraphKind::Complete, "gsr_cg"),
    (GraphKind::Mst, "gsr_mst"),
    (GraphKind::Nng, "gsr_nng"),
];

/// Random-graph connectivity grid: 30-node graphs, connect probability
/// drops from 1/2 by 1/6, 1/12, 1/24, or 1/48; all three spanning graphs.
/// The reference run used 1000 trials per cell.
fn er_table(options: &TableOptions) -> Result<Vec<ExperimentRow>> {
    let trials = options.effective_trials(1000)?;
    let reps = options.effective_reps()?;
    let mut rows = Vec::new();
    if let Some(ns) = &options.n_filter {
        if !ns.contains(&ER_N) {
            return Ok(rows);
        }
    }
    if let Some(ds) = &options.d_filter {
        if !ds.contains(&ER_NODES) {
            return Ok(rows);
        }
    }
    for (pi, &den) in ER_DP_DENOMS.iter().enumerate() {
        let seed = derive_seed(options.seed, 2000 + pi as u64);
        let kind = ScenarioKind::ErConnectivityShift {
            p0: ER_P0,
            p1: ER_P0 - 1.0 / den as f64,
        };
        let scenario = Scenario::new(kind, ER_N, ER_NODES, trials, seed)?;
        let label = format!("er_connectivity:dp=1/{den}");
        for (graph, method) in ER_GRAPHS {
            if !options.keeps_method(method) {
                continue;
            }
            let mut config = DetectorConfig::table_default(graph);
            config.alpha = options.alpha;
            config.reps = reps;
            let report = run_power(&scenario, &config)?;
            rows.push(row_from_report(method, &scenario, &label, &report));
        }
    }
    Ok(rows)
}
