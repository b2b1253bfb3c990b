//! `projlab`: run, sweep, and verify projection-dynamics experiments.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numeric failure.

mod config;
mod report;
mod runner;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use projlab::verify::{run_criteria, FAMILIES};
use projlab::Tolerances;

use config::{CliError, ExperimentConfig, OutputFormat, SweepConfig};

#[derive(Parser)]
#[command(name = "projlab", version, about = "Projection-dynamics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Directory the output file is created under.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the config's output format.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Seed for randomized kinds (required there unless set in the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        /// Restrict to one criterion family.
        #[arg(long, value_parser = FAMILIES.to_vec())]
        only: Option<String>,
        /// Override the root-solve tolerance fed to the library (the
        /// acceptance thresholds stay pinned); useful as a negative control.
        #[arg(long)]
        root_tol: Option<f64>,
    },
    /// Execute a parameter grid of experiments concurrently.
    Sweep {
        config: PathBuf,
        /// Directory the per-point reports are created under.
        #[arg(long, default_value = "sweep-out")]
        output_dir: PathBuf,
        /// Override the config's output format.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Seed for randomized kinds.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            output_dir,
            format,
            seed,
        } => cmd_run(&config, output_dir.as_deref(), format, seed),
        Command::Verify { only, root_tol } => cmd_verify(only.as_deref(), root_tol),
        Command::Sweep {
            config,
            output_dir,
            format,
            seed,
        } => cmd_sweep(&config, &output_dir, format, seed),
    };
    match code {
        Ok(exit) => exit,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(
    path: &Path,
    format: Option<OutputFormat>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config::config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut parsed: ExperimentConfig =
        toml::from_str(&text).map_err(|e| config::config_err(e.to_string()))?;
    if let Some(f) = format {
        parsed.format = f;
    }
    if let Some(s) = seed {
        parsed.override_seed(s);
    }
    parsed.validate()?;
    Ok(parsed)
}

fn write_outputs(
    config: &ExperimentConfig,
    output_dir: Option<&Path>,
    report: &report::RunReport,
    table: &report::CsvTable,
) -> Result<PathBuf, CliError> {
    let mut path = config.output.clone();
    if let Some(dir) = output_dir {
        fs::create_dir_all(dir)
            .map_err(|e| config::config_err(format!("cannot create {}: {e}", dir.display())))?;
        path = dir.join(path);
    }
    let io_err =
        |p: &Path, e: std::io::Error| config::config_err(format!("cannot write {}: {e}", p.display()));
    match config.format {
        OutputFormat::Csv => {
            fs::write(&path, table.render()).map_err(|e| io_err(&path, e))?;
            // the machine-readable report rides alongside the data table
            let report_path = path.with_extension("report.json");
            let json = report
                .to_json()
                .map_err(|e| config::config_err(e.to_string()))?;
            fs::write(&report_path, json).map_err(|e| io_err(&report_path, e))?;
        }
        OutputFormat::Json => {
            let json = report
                .to_json()
                .map_err(|e| config::config_err(e.to_string()))?;
            fs::write(&path, json).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(path)
}

fn cmd_run(
    path: &Path,
    output_dir: Option<&Path>,
    format: Option<OutputFormat>,
    seed: Option<u64>,
) -> Result<ExitCode, CliError> {
    let config = load_config(path, format, seed)?;
    let tol = Tolerances::default();
    let (report, table) = runner::execute(&config, &tol)?;
    let written = write_outputs(&config, output_dir, &report, &table)?;
    println!(
        "{}: {} rows -> {} ({:.3}s)",
        config.experiment.kind_name(),
        table.rows.len(),
        written.display(),
        report.duration_seconds
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(only: Option<&str>, root_tol: Option<f64>) -> Result<ExitCode, CliError> {
    let tol = match root_tol {
        Some(rt) => Tolerances::new(1e-12, 1e-9, rt, rt.max(1e-8))
            .map_err(|e| config::config_err(e.to_string()))?,
        None => Tolerances::default(),
    };
    let reports = run_criteria(only, &tol).map_err(|e| config::config_err(e.to_string()))?;
    let mut all_passed = true;
    for r in &reports {
        println!("{}", r.summary_line());
        all_passed &= r.passed;
    }
    if all_passed {
        println!("all {} criteria passed", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        let failed: Vec<String> = reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{} ({})", r.id, r.name))
            .collect();
        println!("failed criteria: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}

fn cmd_sweep(
    path: &Path,
    output_dir: &Path,
    format: Option<OutputFormat>,
    seed: Option<u64>,
) -> Result<ExitCode, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config::config_err(format!("cannot read {}: {e}", path.display())))?;
    let sweep = SweepConfig::parse(&text)?;
    let mut points = sweep.points()?;
    for (_, config) in points.iter_mut() {
        if let Some(f) = format {
            config.format = f;
        }
        if let Some(s) = seed {
            config.override_seed(s);
        }
        config.validate()?;
    }
    fs::create_dir_all(output_dir)
        .map_err(|e| config::config_err(format!("cannot create {}: {e}", output_dir.display())))?;

    let tol = Tolerances::default();
    let results: Vec<(String, Result<PathBuf, CliError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|(label, config)| {
                let tol = &tol;
                let label = label.clone();
                scope.spawn(move || {
                    let outcome = runner::execute(config, tol).and_then(|(report, table)| {
                        let mut point_config = config.clone();
                        let stem = point_config
                            .output
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_else(|| "run".into());
                        let ext = match point_config.format {
                            OutputFormat::Csv => "csv",
                            OutputFormat::Json => "json",
                        };
                        point_config.output = PathBuf::from(format!("{stem}_{label}.{ext}"));
                        write_outputs(&point_config, Some(output_dir), &report, &table)
                    });
                    (label, outcome)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut index = Vec::new();
    let mut any_failed = false;
    for (label, outcome) in &results {
        match outcome {
            Ok(path) => index.push(serde_json::json!({
                "point": label,
                "status": "ok",
                "output": path.display().to_string(),
            })),
            Err(e) => {
                any_failed = true;
                eprintln!("point {label} failed: {e}");
                index.push(serde_json::json!({
                    "point": label,
                    "status": "failed",
                    "error": e.to_string(),
                }));
            }
        }
    }
    let index_path = output_dir.join("index.json");
    fs::write(
        &index_path,
        serde_json::to_string_pretty(&index).map_err(|e| config::config_err(e.to_string()))?,
    )
    .map_err(|e| config::config_err(format!("cannot write {}: {e}", index_path.display())))?;
    println!(
        "sweep: {} points, index at {}",
        results.len(),
        index_path.display()
    );
    if any_failed {
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
