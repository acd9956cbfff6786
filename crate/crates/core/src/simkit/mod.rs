//! Scenario configuration, seeded trials, sweeps and export.

pub mod config;
pub mod export;
pub mod rng;
pub mod sweep;
pub mod trial;
pub mod world;

pub use config::{AssignerKind, Placement, ScenarioConfig};
pub use export::{latency_figure_csv, rate_figure_csv, round_sig, Format};
pub use sweep::{run_sweep, run_sweep_with, MetricsTable, Stat, SweepAxis, SweepOutcome, SweepPlan, SweepRow};
pub use trial::{run_paired_trial, run_trial, run_trial_traced, PairedTrial, TrialMetrics};
pub use world::World;
