//! Scenario configuration, seeded sampling, sweeps and figure output.

pub mod check;
pub mod config;
pub mod figures;
pub mod sweep;

pub use check::{property_suite, write_property_csv};
pub use config::{CostSpec, Distribution, ScenarioConfig, SweepAxis, SweepParameter};
pub use figures::{figure_data, figure_suite, render, write_figures, FigureData, FigureGrid};
pub use sweep::{
    evaluate_replicate, run_points, sample_bets, sample_raw_bets, sweep, with_threads,
    write_rows_csv, ReplicateMetrics, SweepRow,
};
