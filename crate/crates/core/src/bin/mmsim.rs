use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use serde::Serialize;

use mmsim::check::{run_builtin, validate_rows, CsvLimits};
use mmsim::config::{load_config, ConfigError, Overrides, RunConfig};
use mmsim::output::{metadata_path, read_trajectory, write_json, write_trajectory, OutputError, RunMetadata};
use mmsim::scenario::{run_scenario, ScenarioRun, TrajectoryRecord};
use mmsim::woolsey::{compare_trajectories, ComparisonReport};
use mmsim::{Formulation, ModelError};

#[derive(Parser)]
#[command(name = "mmsim", version, about = "Underwater vehicle with an internal moving mass")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one formulation and write its trajectory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        formulation: Option<Formulation>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        decimate: Option<usize>,
    },
    /// Simulate both formulations and summarise their differences.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        decimate: Option<usize>,
    },
    /// Run the built-in invariant suite, or validate a trajectory CSV.
    Check {
        /// Validate this trajectory file instead of running the suite.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Take rail and force limits (and the seed) from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (class, msg, code) = match self {
            Failure::Config(m) => ("config", m, 2),
            Failure::Numeric(m) => ("numeric", m, 3),
            Failure::Io(m) => ("io", m, 4),
        };
        eprintln!("error[{class}]: {msg}");
        ExitCode::from(code)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Io(e.to_string())
    }
}

fn config_failure(e: ModelError) -> Failure {
    Failure::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    let outcome = match cli.command {
        Command::Run { config, formulation, out, dt, duration, decimate } => {
            let o = Overrides { formulation, dt, duration, decimate, output: out };
            run(&config, &o)
        }
        Command::Compare { config, out, dt, duration, decimate } => {
            let o = Overrides { dt, duration, decimate, ..Default::default() };
            compare(&config, &out, &o)
        }
        Command::Check { csv, config, seed } => check(csv.as_deref(), config.as_deref(), seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}

fn load(path: &Path, o: &Overrides) -> Result<(RunConfig, String), Failure> {
    let (mut cfg, text) = load_config(path)?;
    o.apply(&mut cfg)?;
    Ok((cfg, text))
}

/// Simulate `cfg` and write its CSV and metadata next to `csv`.
fn simulate_and_write(
    cfg: &RunConfig,
    csv: &Path,
    config_path: &Path,
    text: &str,
    o: &Overrides,
) -> Result<ScenarioRun, Failure> {
    let model = cfg.model().map_err(config_failure)?;
    info!("{}: integrating {} s at dt = {}", cfg.formulation, cfg.scenario.duration, cfg.scenario.dt);
    let run = run_scenario(&model, &cfg.scenario);
    if let Some(ModelError::InvalidScenario(m)) = &run.failure {
        return Err(Failure::Config(m.clone()));
    }
    let summary = write_trajectory(&run.records, csv, cfg.decimate)?;
    let mut meta = RunMetadata::new(cfg, Some(config_path), text, o);
    meta.rows = summary.rows;
    meta.failure = run.failure.as_ref().map(|e| format!("{e} (after t = {})", last_time(&run.records)));
    write_json(&meta, &metadata_path(csv))?;
    println!("{}: {} rows -> {}", cfg.formulation, summary.rows, csv.display());
    Ok(run)
}

fn last_time(records: &[TrajectoryRecord]) -> f64 {
    records.last().map_or(0.0, |r| r.t)
}

fn numeric_failure(name: &str, run: &ScenarioRun) -> Option<Failure> {
    run.failure
        .as_ref()
        .map(|e| Failure::Numeric(format!("{name} run stopped after t = {}: {e}", last_time(&run.records))))
}

fn run(config: &Path, o: &Overrides) -> Result<(), Failure> {
    let (cfg, text) = load(config, o)?;
    let run = simulate_and_write(&cfg, &cfg.output, config, &text, o)?;
    numeric_failure(&cfg.formulation.to_string(), &run).map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct CompareSummary {
    /// Samples present in both runs; the comparison covers these.
    common_samples: usize,
    newton_euler_end: f64,
    woolsey_end: f64,
    newton_euler_failure: Option<String>,
    woolsey_failure: Option<String>,
    /// Window of the close-up comparison, clipped to the common samples.
    closeup_end: f64,
    max_abs_dq_closeup: f64,
    peak_abs_q_closeup_newton_euler: f64,
    peak_abs_q_closeup_woolsey: f64,
    report: ComparisonReport,
}

const CLOSEUP: f64 = 12.0;

fn compare(config: &Path, out: &Path, o: &Overrides) -> Result<(), Failure> {
    let (cfg, text) = load(config, o)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let with = |f: Formulation| RunConfig { formulation: f, ..cfg.clone() };
    let (ne_cfg, w_cfg) = (with(Formulation::NewtonEuler), with(Formulation::Woolsey));
    let (ne_csv, w_csv) = (out.join("newton-euler.csv"), out.join("woolsey.csv"));
    let (ne, w) = std::thread::scope(|s| {
        let a = s.spawn(|| simulate_and_write(&ne_cfg, &ne_csv, config, &text, o));
        let b = s.spawn(|| simulate_and_write(&w_cfg, &w_csv, config, &text, o));
        (a.join().expect("newton-euler run panicked"), b.join().expect("woolsey run panicked"))
    });
    let (ne, w) = (ne?, w?);

    let n = ne.records.len().min(w.records.len());
    let report =
        compare_trajectories(&ne.records[..n], &w.records[..n]).map_err(|e| Failure::Numeric(e.to_string()))?;
    let close = |r: &[TrajectoryRecord]| r[..n].iter().filter(|x| x.t <= CLOSEUP).map(|x| x.nu[4]).collect::<Vec<_>>();
    let (q_ne, q_w) = (close(&ne.records), close(&w.records));
    let peak = |q: &[f64]| q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let summary = CompareSummary {
        common_samples: n,
        newton_euler_end: last_time(&ne.records),
        woolsey_end: last_time(&w.records),
        newton_euler_failure: ne.failure.as_ref().map(ToString::to_string),
        woolsey_failure: w.failure.as_ref().map(ToString::to_string),
        closeup_end: ne.records[..n].iter().map(|r| r.t).filter(|t| *t <= CLOSEUP).fold(0.0, f64::max),
        max_abs_dq_closeup: q_ne.iter().zip(&q_w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        peak_abs_q_closeup_newton_euler: peak(&q_ne),
        peak_abs_q_closeup_woolsey: peak(&q_w),
        report,
    };
    write_json(&summary, &out.join("summary.json"))?;
    println!(
        "max |dq| over [0, {}] s: {:.6e} rad/s (peak |q|: newton-euler {:.6e}, woolsey {:.6e})",
        summary.closeup_end,
        summary.max_abs_dq_closeup,
        summary.peak_abs_q_closeup_newton_euler,
        summary.peak_abs_q_closeup_woolsey
    );
    numeric_failure("newton-euler", &ne).or_else(|| numeric_failure("woolsey", &w)).map_or(Ok(()), Err)
}

fn check(csv: Option<&Path>, config: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let cfg = config.map(|p| load(p, &Overrides::default())).transpose()?.map(|(c, _)| c);
    let results = match csv {
        Some(path) => {
            let rows = read_trajectory(path)?;
            let limits = cfg.as_ref().map_or_else(CsvLimits::default, |c| CsvLimits {
                stroke: (c.scenario.rail.stroke_min, c.scenario.rail.stroke_max),
                surge_force: c.scenario.surge_force,
                mass_force: c.scenario.mass_force_magnitude,
            });
            validate_rows(&rows, &limits)
        }
        None => run_builtin(seed.or(cfg.map(|c| c.seed)).unwrap_or(0)),
    };
    let mut failed = 0;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.passed);
    }
    if failed > 0 {
        return Err(Failure::Numeric(format!("{failed} of {} checks failed", results.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::error::ErrorKind;

    fn config_file(dir: &Path, duration: f64) -> PathBuf {
        let path = dir.join("remus.toml");
        let text = mmsim::config::REMUS100.replace("duration = 500.0", &format!("duration = {duration}"));
        assert_ne!(text, mmsim::config::REMUS100);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn code(f: &Failure) -> u8 {
        match f {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let err = Cli::try_parse_from(["mmsim", "run", "--config", "x.toml", "--bogus"]).err().unwrap();
        assert_eq!(err.kind(), ErrorKind::UnknownArgument);
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn identical_config_gives_identical_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_file(dir.path(), 2.0);
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        for out in [&a, &b] {
            let o = Overrides { output: Some(out.clone()), ..Default::default() };
            assert!(run(&cfg, &o).is_ok());
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["rows"], 201);
        assert!(meta["failure"].is_null());
    }

    #[test]
    fn overrides_reach_the_output() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_file(dir.path(), 2.0);
        let out = dir.path().join("w.csv");
        let o = Overrides {
            formulation: Some(Formulation::Woolsey),
            dt: Some(0.02),
            duration: Some(1.0),
            decimate: Some(5),
            output: Some(out.clone()),
        };
        run(&cfg, &o).ok().unwrap();
        assert_eq!(read_trajectory(&out).unwrap().len(), 11);
        let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(metadata_path(&out)).unwrap()).unwrap();
        assert_eq!(meta["formulation"], "woolsey");
        assert_eq!(meta["overrides"]["dt"], 0.02);
    }

    #[test]
    fn error_classes() {
        let dir = tempfile::tempdir().unwrap();
        let missing = run(&dir.path().join("none.toml"), &Overrides::default()).err().unwrap();
        assert_eq!(code(&missing), 4);

        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, mmsim::config::REMUS100.replace("depth_shallow = 3.0", "depth_shallow = 30.0")).unwrap();
        assert_eq!(code(&run(&bad, &Overrides::default()).err().unwrap()), 2);

        // the undamped shipped vehicle pitches through the Euler singularity
        let cfg = config_file(dir.path(), 8.0);
        let out = dir.path().join("long.csv");
        let f = run(&cfg, &Overrides { output: Some(out.clone()), ..Default::default() }).err().unwrap();
        assert_eq!(code(&f), 3);
        assert!(read_trajectory(&out).unwrap().len() > 1);
        let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(metadata_path(&out)).unwrap()).unwrap();
        assert!(meta["failure"].as_str().unwrap().contains("singularity"));
    }

    #[test]
    fn compare_writes_both_runs_and_a_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_file(dir.path(), 3.0);
        let out = dir.path().join("cmp");
        compare(&cfg, &out, &Overrides::default()).ok().unwrap();
        let ne = read_trajectory(&out.join("newton-euler.csv")).unwrap();
        let w = read_trajectory(&out.join("woolsey.csv")).unwrap();
        assert_eq!(ne.len(), w.len());
        let s: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["common_samples"], 301);
        assert!(s["max_abs_dq_closeup"].as_f64().unwrap() > 0.0);
        assert!(s["peak_abs_q_closeup_woolsey"].as_f64().unwrap() > s["peak_abs_q_closeup_newton_euler"].as_f64().unwrap());
    }

    #[test]
    fn check_validates_written_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_file(dir.path(), 2.0);
        let out = dir.path().join("c.csv");
        run(&cfg, &Overrides { output: Some(out.clone()), ..Default::default() }).ok().unwrap();
        assert!(check(Some(&out), Some(&cfg), None).is_ok());
        let text = std::fs::read_to_string(&out).unwrap().replacen(",5.0000000000000000e-1,", ",4.0000000000000000e-1,", 1);
        std::fs::write(&out, text).unwrap();
        assert_eq!(code(&check(Some(&out), None, None).err().unwrap()), 3);
    }
}
