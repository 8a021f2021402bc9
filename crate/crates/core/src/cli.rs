//! `decarb` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use decarb_milp::{default_backend, emit_mps};

use crate::assembly::build_planning_model;
use crate::pipeline::{solve_scenario, PipelineError, SolveRequest};
use crate::results::{read_results, render_report, write_report, write_results};
use crate::sampler::sample_config;
use crate::scenario::{load_scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "decarb", version, about = "Capacity-expansion planning with hourly unit commitment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Manifest path, directory holding scenario.json, or bundled fixture name.
    #[arg(long)]
    scenario: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate a scenario.
    Validate(ScenarioArg),
    /// Choose representative weeks from the scenario's sampler block.
    SampleWeeks {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a scenario and write the result tables.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Solve the monolithic model with the bundled branch-and-bound.
        #[arg(long)]
        oracle: bool,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        #[arg(long = "gap-tol")]
        gap_tol: Option<f64>,
    },
    /// Write plot-ready tables next to a result directory's files.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the monolithic model in MPS format.
    ExportMps {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(arg: &ScenarioArg, err: &mut dyn Write) -> Option<crate::scenario::ScenarioConfig> {
    match load_scenario(&arg.scenario) {
        Ok(c) => Some(c),
        Err(e) => {
            report_scenario_error(&e, err);
            None
        }
    }
}

fn report_scenario_error(e: &ScenarioError, err: &mut dyn Write) {
    match e {
        ScenarioError::Invalid(issues) => {
            let _ = writeln!(err, "scenario is invalid ({} issue(s)):", issues.len());
            for i in issues {
                let _ = writeln!(err, "  {}: {}", i.path, i.message);
            }
        }
        other => {
            let _ = writeln!(err, "error: {other}");
        }
    }
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Validate(arg) => match load(&arg, err) {
            Some(cfg) => {
                let _ = writeln!(out, "scenario `{}` is valid", cfg.id);
                0
            }
            None => 1,
        },
        Command::SampleWeeks { scenario, out: path } => {
            let Some(cfg) = load(&scenario, err) else { return 1 };
            let Some(sc) = cfg.sampler.as_ref() else {
                let _ = writeln!(err, "error: scenario `{}` has no sampler block", cfg.id);
                return 1;
            };
            let backend = default_backend();
            match sample_config(sc, backend.as_ref()) {
                Ok((_, plan)) => {
                    let text = serde_json::to_string_pretty(&plan).expect("plan serializes") + "\n";
                    match path {
                        Some(p) => {
                            if let Err(e) = write_file(&p, &text) {
                                let _ = writeln!(err, "error: {}: {e}", p.display());
                                return 1;
                            }
                            let _ = writeln!(out, "{}", p.display());
                        }
                        None => {
                            let _ = write!(out, "{text}");
                        }
                    }
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    1
                }
            }
        }
        Command::Solve {
            scenario,
            out: dir,
            seed,
            oracle,
            max_iter,
            gap_tol,
        } => {
            let Some(cfg) = load(&scenario, err) else { return 1 };
            let req = SolveRequest {
                oracle,
                seed,
                max_iterations: max_iter,
                gap_tol,
            };
            let backend = default_backend();
            let dir = dir.unwrap_or_else(|| PathBuf::from("results").join(&cfg.id));
            match solve_scenario(&cfg, &req, backend.as_ref()) {
                Ok((rs, _)) => match write_results(&rs, &dir) {
                    Ok(_) => {
                        let _ = writeln!(
                            out,
                            "{} objective {} written to {}",
                            rs.summary.method,
                            rs.summary.objective,
                            dir.display()
                        );
                        0
                    }
                    Err(e) => {
                        let _ = writeln!(err, "error: {e}");
                        1
                    }
                },
                Err(PipelineError::Infeasible(report)) => {
                    let _ = writeln!(err, "{report}");
                    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
                    let _ = write_file(&dir.join("infeasibility.json"), &text);
                    1
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    1
                }
            }
        }
        Command::Report { out: dir } => {
            let rs = match read_results(&dir) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return 1;
                }
            };
            match write_report(&render_report(&rs), &dir) {
                Ok(files) => {
                    for f in files {
                        let _ = writeln!(out, "{}", f.display());
                    }
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    1
                }
            }
        }
        Command::ExportMps { scenario, out: path } => {
            let Some(cfg) = load(&scenario, err) else { return 1 };
            let pm = match build_planning_model(&cfg) {
                Ok(pm) => pm,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return 1;
                }
            };
            match write_file(&path, &emit_mps(&pm.model)) {
                Ok(()) => {
                    let _ = writeln!(out, "{}", path.display());
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {}: {e}", path.display());
                    1
                }
            }
        }
    }
}
