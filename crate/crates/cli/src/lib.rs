//! Command-line front end: config handling, the experiment subcommands, and
//! the exit-code mapping.

mod meta;
mod overrides;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvrls::estimators::EstimatorKind;
use tvrls::experiments::{
    emit_csv, emit_svg, emit_timing_svg, excitation, experiment_rng, gen_data, run_all,
    run_monte_carlo, run_timing, trial_seed, DataMode, ExperimentConfig, McSummary, PlotSpec,
    Scale, Series,
};
use tvrls::{Error, Result};

pub use meta::{read_config, Meta, META_FILE, NONDETERMINISTIC_COLUMNS};
pub use overrides::{apply, Override};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tvrls", version, about = "Recursive least squares with fading regularization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the estimators on one config (Monte Carlo when trials > 1).
    Run(RunArgs),
    /// Noise-free convergence traces on PE and non-PE data.
    Example1(PresetArgs),
    /// Monte Carlo error means with intervals for r0 in {0.01, 1, 100}.
    Example2(PresetArgs),
    /// Per-step timing in the fading and post-cutoff phases.
    Bench(PresetArgs),
    /// Check a config (with overrides) without running it.
    ValidateConfig(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Full,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Scale {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Full => Scale::Full,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Override a config value, e.g. `--set schedule.mu=0.95`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Directory for CSV, SVG and meta.json output.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write SVG charts.
    #[arg(long, overrides_with = "no_svg")]
    pub svg: bool,
    /// Skip SVG charts.
    #[arg(long, overrides_with = "svg")]
    pub no_svg: bool,
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Common {
    fn svg_or(&self, default: bool) -> bool {
        if self.svg {
            true
        } else if self.no_svg {
            false
        } else {
            default
        }
    }

    fn overrides(&self) -> Result<Vec<Override>> {
        self.set.iter().map(|s| Override::parse(s)).collect()
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config, or a meta.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    #[arg(long, value_enum, default_value = "desk")]
    pub scale: ScaleArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Usage errors count as config errors.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Example1(a) => cmd_example1(a),
        Command::Example2(a) => cmd_example2(a),
        Command::Bench(a) => cmd_bench(a),
        Command::ValidateConfig(a) => cmd_validate(a),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn file_name(dir: &Path, name: &str, artifacts: &mut Vec<String>) -> PathBuf {
    artifacts.push(name.to_string());
    dir.join(name)
}

fn r0_tag(r0: f64) -> String {
    format!("{r0}")
}

/// First-trial rank step, reported alongside Monte Carlo means.
fn first_trial_k_rank(cfg: &ExperimentConfig) -> Result<Option<usize>> {
    let (_, data) = gen_data(cfg, &mut experiment_rng(trial_seed(cfg.seed, 0)))?;
    Ok(excitation(cfg, &data)?.k_rank)
}

fn fmt_k_rank(k: Option<usize>) -> String {
    k.map_or_else(|| "none".to_string(), |k| k.to_string())
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let sets = a.set.iter().map(|s| Override::parse(s)).collect::<Result<Vec<_>>>()?;
    let cfg = apply(&read_config(&a.config)?, &sets)?;
    println!(
        "config ok: n = {}, p = {}, steps = {}, trials = {}, estimators = {}",
        cfg.n,
        cfg.p,
        cfg.data.steps,
        cfg.trials,
        cfg.estimators.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",")
    );
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let start = Instant::now();
    let overrides = a.common.overrides()?;
    let cfg = apply(&read_config(&a.config)?, &overrides)?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    let mut artifacts = Vec::new();
    let svg = a.common.svg_or(false);

    let (finals, k_rank) = if cfg.trials == 1 {
        let out = run_all(&cfg)?;
        let mut series = Vec::new();
        for (i, (kind, trace)) in out.traces.iter().enumerate() {
            emit_csv(trace, file_name(dir, &format!("trace_{kind}.csv"), &mut artifacts))?;
            series.push(Series::from_trace(trace, i, false));
        }
        if svg {
            let path = file_name(dir, "errors.svg", &mut artifacts);
            emit_svg(&series, path, &PlotSpec::error_plot("parameter estimation error"))?;
        }
        let finals: Vec<(EstimatorKind, f64)> =
            out.traces.iter().map(|(k, t)| (*k, t.final_error().unwrap_or(f64::NAN))).collect();
        (finals, out.excitation.k_rank)
    } else {
        let sums = run_monte_carlo(&cfg, a.common.threads)?;
        write_mc(dir, "mc", &sums, svg, "mean parameter estimation error", &mut artifacts)?;
        let finals = sums
            .iter()
            .map(|s| (s.kind, s.rows.last().map_or(f64::NAN, |r| r.mean)))
            .collect();
        (finals, first_trial_k_rank(&cfg)?)
    };

    let wall = start.elapsed().as_secs_f64();
    Meta {
        command: "run",
        runs: vec![("run".into(), cfg.clone())],
        overrides: overrides.iter().map(Override::as_arg).collect(),
        wall_time_s: wall,
        artifacts,
    }
    .write(dir)?;
    let errs: Vec<String> = finals.iter().map(|(k, e)| format!("{} {e:.3e}", k.label())).collect();
    println!(
        "final error: {}; k_rank = {}; wall time {wall:.3} s",
        errs.join(", "),
        fmt_k_rank(k_rank)
    );
    Ok(())
}

fn write_mc(
    dir: &Path,
    stem: &str,
    sums: &[McSummary],
    svg: bool,
    title: &str,
    artifacts: &mut Vec<String>,
) -> Result<()> {
    for s in sums {
        emit_csv(s, file_name(dir, &format!("{stem}_{}.csv", s.kind), artifacts))?;
    }
    if svg {
        let series: Vec<Series> = sums.iter().enumerate().map(|(i, s)| Series::from_mc(s, i)).collect();
        emit_svg(&series, file_name(dir, &format!("{stem}.svg"), artifacts), &PlotSpec::error_plot(title))?;
    }
    Ok(())
}

fn cmd_example1(a: &PresetArgs) -> Result<()> {
    let start = Instant::now();
    let overrides = a.common.overrides()?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    let mut artifacts = Vec::new();
    let mut runs = Vec::new();
    let mut series = Vec::new();
    for mode in [DataMode::Pe, DataMode::NonPe] {
        let cfg = apply(&ExperimentConfig::example1(a.scale.into(), mode), &overrides)?;
        let out = run_all(&cfg)?;
        for (i, (kind, trace)) in out.traces.iter().enumerate() {
            let name = format!("example1_{}_{kind}.csv", mode.as_str());
            emit_csv(trace, file_name(dir, &name, &mut artifacts))?;
            let mut s = Series::from_trace(trace, i, mode == DataMode::NonPe);
            s.label = format!("{} ({})", trace.label, mode.as_str().replace('_', "-"));
            series.push(s);
            let last = trace.final_error().unwrap_or(f64::NAN);
            println!("{} {:<8} final error {last:.3e}", mode.as_str(), kind.label());
        }
        println!("{} k_rank = {}", mode.as_str(), fmt_k_rank(out.excitation.k_rank));
        runs.push((mode.as_str().to_string(), cfg));
    }
    if a.common.svg_or(true) {
        let spec = PlotSpec::error_plot("estimation error, PE (solid) and non-PE (dashed)");
        emit_svg(&series, file_name(dir, "example1.svg", &mut artifacts), &spec)?;
    }
    finish(dir, "example1", runs, &overrides, start, artifacts)
}

fn cmd_example2(a: &PresetArgs) -> Result<()> {
    let start = Instant::now();
    let overrides = a.common.overrides()?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    let mut artifacts = Vec::new();
    let mut runs = Vec::new();
    for r0 in [0.01, 1.0, 100.0] {
        let cfg = apply(&ExperimentConfig::example2(a.scale.into(), r0), &overrides)?;
        let sums = run_monte_carlo(&cfg, a.common.threads)?;
        let tag = r0_tag(cfg.schedule.r0_scale);
        let title = format!("mean estimation error, r0 = {tag}, {} trials", cfg.trials);
        write_mc(dir, &format!("example2_r0_{tag}"), &sums, a.common.svg_or(true), &title, &mut artifacts)?;
        for s in &sums {
            let last = s.rows.last().map_or(f64::NAN, |r| r.mean);
            println!("r0 = {tag:<5} {:<8} final mean error {last:.3e}", s.label());
        }
        runs.push((format!("r0_{tag}"), cfg));
    }
    finish(dir, "example2", runs, &overrides, start, artifacts)
}

fn cmd_bench(a: &PresetArgs) -> Result<()> {
    let start = Instant::now();
    let overrides = a.common.overrides()?;
    let cfg = apply(&ExperimentConfig::bench(a.scale.into()), &overrides)?;
    let dir = &a.common.out;
    prepare_out(dir)?;
    let mut artifacts = Vec::new();
    let summary = run_timing(&cfg)?;
    emit_csv(&summary, file_name(dir, "timing.csv", &mut artifacts))?;
    if a.common.svg_or(true) {
        let title = format!("time per step, n = {}, p = {}", cfg.n, cfg.p);
        emit_timing_svg(&summary, file_name(dir, "timing.svg", &mut artifacts), &title)?;
    }
    for r in &summary.rows {
        println!(
            "{:<8} {:<11} {:.4} ms [{:.4}, {:.4}] over {} steps",
            r.kind.label(),
            r.phase.as_str(),
            r.mean_ms,
            r.ci_lo_ms,
            r.ci_hi_ms,
            r.samples
        );
    }
    finish(dir, "bench", vec![("bench".into(), cfg)], &overrides, start, artifacts)
}

fn finish(
    dir: &Path,
    command: &str,
    runs: Vec<(String, ExperimentConfig)>,
    overrides: &[Override],
    start: Instant,
    artifacts: Vec<String>,
) -> Result<()> {
    let wall = start.elapsed().as_secs_f64();
    Meta {
        command,
        runs,
        overrides: overrides.iter().map(Override::as_arg).collect(),
        wall_time_s: wall,
        artifacts,
    }
    .write(dir)?;
    println!("wrote {} in {wall:.2} s", dir.display());
    Ok(())
}
