//! Change-point detection by graph spanning ratios.
//!
//! A window of 2n multivariate observations is split at every index k; the
//! left and right blocks are summarized by the spanning weight of a graph
//! built on each (complete graph, minimum spanning tree, or symmetrized
//! nearest-neighbor graph), and ratios of those weights react to mean
//! shifts and variance changes. Critical values come from bootstrap or
//! permutation resampling of training data with a family-wise correction
//! across splits, or from closed-form F laws in the Gaussian
//! complete-graph case.
//!
//! Module map:
//! - [`graph`]: observations, windows, spanning weights of the three
//!   graph kinds.
//! - [`stats`]: the three ratio statistics and full window profiles.
//! - [`calibrate`]: resampling calibration of per-split thresholds.
//! - [`detect`]: offline sweeps, the online ring detector, multiwindow
//!   pooling.
//! - [`theory`]: closed-form power guarantees and the minimax radius.
//! - [`specialfn`]: in-repo gamma/beta/F machinery behind the theory.
//! - [`simlab`]: scenario generators, baselines, and the power-table
//!   experiment runner.
//! - [`rng`]: seed derivation and per-replicate random streams.

pub mod calibrate;
pub mod detect;
pub mod error;
pub mod graph;
pub mod rng;
pub mod simlab;
pub mod specialfn;
pub mod stats;
pub mod theory;

pub use calibrate::{
    calibrate, calibrate_family, max_scan, parametric_threshold, per_k_quantile, resample,
    scan_replicates, CalibrationConfig, MaxScanRecord, ResampleMethod, StatThresholds,
    ThresholdTable,
};
pub use detect::{
    detect_offline, Detection, DetectionEvent, DetectionPolicy, MultiwindowDetector,
    OnlineDetector, PooledPush,
};
pub use error::{Error, Result};
pub use graph::{
    build_graph, gap_spanning, spanning_triplet, split_range, squared_distance, Edge, GraphKind,
    GraphSpanning, Observation, ObservationWindow, SpanningTriplet,
};
pub use stats::{
    profile, split_statistics, symmetric_mean_statistic, SplitValues, Statistic, WindowProfile,
};
pub use theory::{
    delta_mu, delta_mu_constants, delta_mu_series, delta_sigma_constants, delta_sigma_minus,
    delta_sigma_plus, default_mean_spanning_sq, gap_expectation, min_radius, theta, PowerConstants,
    PowerInputs,
};
