//! Data generation, seeded runs, Monte Carlo, timing, and CSV/SVG output.

mod config;
mod csv;
mod data;
mod run;
mod svg;

pub use config::{DataConfig, DataMode, ExperimentConfig, Scale, ScheduleConfig};
pub use csv::{emit_csv, CsvTable};
pub use data::{experiment_rng, gen_data, trial_seed, BoxMuller, ExperimentRng};
pub use run::{
    error_path, excitation, mean_ci, run_all, run_monte_carlo, run_single, run_timing, run_trace,
    Excitation, McRow, McSummary, Phase, RunOutput, TimingRow, TimingSummary, WARMUP_STEPS,
};
pub use svg::{
    emit_svg, emit_timing_svg, render_svg, render_timing_svg, PlotSpec, Series,
};
