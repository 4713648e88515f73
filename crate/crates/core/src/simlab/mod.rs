//! Simulation lab: scenario generators, baselines, metrics, and the
//! power-table runner.

pub mod baseline;
pub mod runner;
pub mod scenario;

pub use baseline::{edge_count_baseline, hotelling_t2, BaselineDecision, BaselineOutcome};
pub use runner::{
    build_table, run_power, run_power_baseline, run_power_with_table, run_table,
    scored_statistics, BaselineKind, DetectorConfig, ExperimentRow, PowerReport, SweepMode,
    TableOptions, TrialRecord, EXPERIMENT_IDS,
};
pub use scenario::{Scenario, ScenarioKind, TrialData};
