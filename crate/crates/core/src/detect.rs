//! Offline and online detection against a calibrated threshold table.
//!
//! Offline detection sweeps every split k of one window and emits an event
//! for each (statistic, k) whose value strictly exceeds its threshold. The
//! online detector keeps a ring of the latest 2n observations and runs the
//! same sweep once the ring fills, with either a stop-on-first policy or a
//! cooldown that suppresses detection for a fixed number of pushes after
//! an alarm. A multiwindow wrapper pools detectors with different n and
//! raises a pooled alarm when any central mean ratio clears its threshold.
//!
//! Time convention: observations arrive at indices 0, 1, 2, ...; a full
//! window of the latest 2n points at arrival count m is centered at
//! t = m - n and spans arrivals {t-n, ..., t+n-1}. An event at split k
//! points at location t - n + k, the first index of the changed regime.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::calibrate::ThresholdTable;
use crate::error::{Error, Result};
use crate::graph::{spanning_triplet, GraphKind, Observation, ObservationWindow};
use crate::stats::{profile, split_statistics, Statistic};

/// One threshold exceedance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    /// Arrival index of the window center.
    #[serde(rename = "t")]
    pub time: i64,
    /// Estimated first index of the new regime: time - n + k.
    #[serde(rename = "loc")]
    pub location: i64,
    pub stat: Statistic,
    pub k: usize,
    pub value: f64,
    pub threshold: f64,
    #[serde(rename = "n")]
    pub window_n: usize,
}

/// Events from one window sweep plus skip diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Detection {
    /// Exceedances sorted by (statistic, k).
    pub events: Vec<DetectionEvent>,
    /// (statistic, k) entries whose value degenerated in this window.
    pub degenerate_entries: usize,
    /// (statistic, k) entries the table carries no threshold for.
    pub missing_thresholds: usize,
}

fn check_table(table: &ThresholdTable, graph: GraphKind, n: usize, dim: usize) -> Result<()> {
    if table.graph != graph {
        return Err(Error::domain(format!(
            "threshold table was calibrated for graph {}, not {}",
            table.graph, graph
        )));
    }
    if table.n != n {
        return Err(Error::domain(format!(
            "threshold table is for half-length {}, window has {}",
            table.n, n
        )));
    }
    if table.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: table.dim,
            got: dim,
        });
    }
    Ok(())
}

/// Sweeps one window (centered at `center`) against the table.
fn sweep(
    points: &[Observation],
    center: i64,
    table: &ThresholdTable,
    graph: GraphKind,
) -> Result<Detection> {
    let n = points.len() / 2;
    let p = profile(points, graph)?;
    let mut out = Detection::default();
    out.degenerate_entries = p.degenerate_count();
    for stat in Statistic::ALL {
        for sv in p.splits() {
            let Some(value) = sv.get(stat) else { continue };
            let Some(threshold) = table.threshold(stat, sv.k) else {
                out.missing_thresholds += 1;
                continue;
            };
            if value > threshold {
                out.events.push(DetectionEvent {
                    time: center,
                    location: center - n as i64 + sv.k as i64,
                    stat,
                    k: sv.k,
                    value,
                    threshold,
                    window_n: n,
                });
            }
        }
    }
    out.events
        .sort_by(|a, b| (a.stat, a.k).cmp(&(b.stat, b.k)));
    Ok(out)
}

/// Detects on a fixed window; the event time is the window's center.
///
/// Errors if the table disagrees with the window (half-length, dimension,
/// graph) or if every (statistic, split) entry degenerated.
pub fn detect_offline(
    window: &ObservationWindow,
    table: &ThresholdTable,
    graph: GraphKind,
) -> Result<Detection> {
    check_table(table, graph, window.half_len(), window.dim())?;
    let out = sweep(window.observations(), window.center(), table, graph)?;
    if out.degenerate_entries == 3 * (window.len() - 3) {
        return Err(Error::Degenerate("window degenerate at every split"));
    }
    Ok(out)
}

/// What the online detector does after an alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionPolicy {
    /// First alarm freezes the detector; later pushes are counted no-ops.
    StopOnFirst,
    /// After an alarm, skip detection for this many pushes.
    ContinuousWithCooldown(usize),
}

impl DetectionPolicy {
    /// The default cooldown spans one full window: 2n pushes.
    pub fn default_cooldown(n: usize) -> Self {
        DetectionPolicy::ContinuousWithCooldown(2 * n)
    }
}

/// Streaming detector over a ring of the latest 2n observations.
#[derive(Debug, Clone)]
pub struct OnlineDetector {
    table: ThresholdTable,
    graph: GraphKind,
    policy: DetectionPolicy,
    buffer: VecDeque<Observation>,
    samples_seen: u64,
    cooldown_remaining: usize,
    terminal: bool,
    post_terminal_pushes: u64,
    degenerate_entries: u64,
}

impl OnlineDetector {
    pub fn new(table: ThresholdTable, graph: GraphKind, policy: DetectionPolicy) -> Result<Self> {
        if table.graph != graph {
            return Err(Error::domain(format!(
                "threshold table was calibrated for graph {}, not {}",
                table.graph, graph
            )));
        }
        if let DetectionPolicy::ContinuousWithCooldown(0) = policy {
            // Zero cooldown is allowed; it means re-evaluate every push.
        }
        let capacity = 2 * table.n;
        Ok(OnlineDetector {
            table,
            graph,
            policy,
            buffer: VecDeque::with_capacity(capacity + 1),
            samples_seen: 0,
            cooldown_remaining: 0,
            terminal: false,
            post_terminal_pushes: 0,
            degenerate_entries: 0,
        })
    }

    pub fn half_len(&self) -> usize {
        self.table.n
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// True once StopOnFirst has fired; later pushes are no-ops.
    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    /// Number of pushes swallowed after the terminal state was reached.
    pub fn post_terminal_pushes(&self) -> u64 {
        self.post_terminal_pushes
    }

    /// Cumulative degenerate (statistic, split) entries across evaluations.
    pub fn degenerate_entries(&self) -> u64 {
        self.degenerate_entries
    }

    /// Arrival index of the current window center, once the ring is full.
    fn center(&self) -> i64 {
        self.samples_seen as i64 - self.table.n as i64
    }

    /// Ingests one observation and returns any events from the resulting
    /// window. Detection runs only with a full ring and outside cooldown;
    /// a fully degenerate window is skipped, not an error.
    pub fn push(&mut self, y: Observation) -> Result<Vec<DetectionEvent>> {
        if self.terminal {
            self.post_terminal_pushes += 1;
            return Ok(Vec::new());
        }
        if y.dim() != self.table.dim {
            return Err(Error::DimensionMismatch {
                expected: self.table.dim,
                got: y.dim(),
            });
        }
        let capacity = 2 * self.table.n;
        self.buffer.push_back(y);
        if self.buffer.len() > capacity {
            self.buffer.pop_front();
        }
        self.samples_seen += 1;
        if self.buffer.len() < capacity {
            return Ok(Vec::new());
        }
        if self.cooldown_remaining > 0 {
            self.cooldown_remaining -= 1;
            return Ok(Vec::new());
        }
        let center = self.center();
        let points: &[Observation] = self.buffer.make_contiguous();
        let out = sweep(points, center, &self.table, self.graph)?;
        self.degenerate_entries += out.degenerate_entries as u64;
        if !out.events.is_empty() {
            match self.policy {
                DetectionPolicy::StopOnFirst => self.terminal = true,
                DetectionPolicy::ContinuousWithCooldown(c) => self.cooldown_remaining = c,
            }
        }
        Ok(out.events)
    }

    /// Central mean ratio minus its threshold on the current window, for
    /// pooled multiwindow alarms. `None` until the ring is full, when the
    /// central split degenerates, or when the table lacks the k = n entry.
    pub fn central_mean_excess(&mut self) -> Option<f64> {
        let capacity = 2 * self.table.n;
        if self.terminal || self.buffer.len() < capacity {
            return None;
        }
        let n = self.table.n;
        let points: &[Observation] = self.buffer.make_contiguous();
        let t = spanning_triplet(points, n, self.graph).ok()?;
        let value = split_statistics(&t, 2 * n, n).ok()?.mean?;
        let threshold = self.table.threshold(Statistic::Mean, n)?;
        Some(value - threshold)
    }
}

/// Result of one multiwindow push.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledPush {
    /// True iff some full, live window's central mean ratio exceeds its
    /// threshold at this push.
    pub alarm: bool,
    /// Events from each per-n detector, in family order.
    pub events_per_window: Vec<Vec<DetectionEvent>>,
}

/// A family of online detectors over several window half-lengths, pooled
/// by the supremum of central mean-ratio excesses.
///
/// Family-wise control is the caller's choice of per-n levels; splitting
/// the budget as alpha / |family| keeps the pooled rate at most alpha.
#[derive(Debug, Clone)]
pub struct MultiwindowDetector {
    detectors: Vec<OnlineDetector>,
}

impl MultiwindowDetector {
    pub fn new(detectors: Vec<OnlineDetector>) -> Result<Self> {
        if detectors.is_empty() {
            return Err(Error::domain("multiwindow family is empty"));
        }
        let dim = detectors[0].table.dim;
        for det in &detectors {
            if det.table.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: det.table.dim,
                });
            }
        }
        Ok(MultiwindowDetector { detectors })
    }

    pub fn windows(&self) -> usize {
        self.detectors.len()
    }

    pub fn detectors(&self) -> &[OnlineDetector] {
        &self.detectors
    }

    /// Pushes the observation into every window and pools central alarms.
    pub fn push(&mut self, y: &Observation) -> Result<PooledPush> {
        let mut events_per_window = Vec::with_capacity(self.detectors.len());
        for det in &mut self.detectors {
            events_per_window.push(det.push(y.clone())?);
        }
        let alarm = self
            .detectors
            .iter_mut()
            .filter_map(|det| det.central_mean_excess())
            .any(|excess| excess > 0.0);
        Ok(PooledPush {
            alarm,
            events_per_window,
        })
    }
}
