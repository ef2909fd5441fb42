//! Command-line driver: configure a run from JSON, sweep the grid, and emit
//! the fields CSV and JSON report.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ernstmx_core::run::{self, Mode, RunConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ernstmx", version, about = "Goursat-problem solver for the hyperbolic Ernst-Maxwell equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the grid and emit fields.csv plus report.json
    Solve(RunArgs),
    /// Solve with the full diagnostic suite (symmetry samples, curvature)
    Verify(RunArgs),
    /// Evaluate the exact solution family on the grid (oracle fields)
    Exact(ExactArgs),
    /// Corner-derivative and wavefront-functional checks
    BoundaryCheck(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: current directory)
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ExactArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also emit the generated vacuum-equation potential (1 + H)/(1 - H) to
    /// vacuum.csv; it solves a different equation and enters no checks.
    #[arg(long)]
    vacuum: bool,
}

fn out_paths(cfg: &RunConfig, out: &Path) -> (PathBuf, PathBuf) {
    let fields = cfg
        .outputs
        .as_ref()
        .and_then(|o| o.fields.clone())
        .unwrap_or_else(|| PathBuf::from("fields.csv"));
    let report = cfg
        .outputs
        .as_ref()
        .and_then(|o| o.report.clone())
        .unwrap_or_else(|| PathBuf::from("report.json"));
    (out.join(fields), out.join(report))
}

fn write_vacuum_csv(grid: &ernstmx_core::run::FieldGrid, path: &Path) -> Result<()> {
    let mut text = String::from("x,y,reW,imW\n");
    let one = ernstmx_core::linalg::ONE;
    for p in &grid.points {
        if let Some(r) = &p.result {
            let w = (one + r.h) / (one - r.h);
            text.push_str(&format!("{},{},{},{}\n", p.x, p.y, w.re, w.im));
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn run_grid_mode(args: &RunArgs, mode: Mode) -> Result<ExitCode> {
    let cfg = RunConfig::from_file(&args.config).context("loading config")?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let (fields_path, report_path) = out_paths(&cfg, &args.out);
    let (grid, report) = match mode {
        Mode::Solve => run::run_solve(&cfg)?,
        Mode::Verify => run::run_verify(&cfg)?,
        Mode::Exact => run::run_exact(&cfg)?,
        Mode::BoundaryCheck => unreachable!(),
    };
    run::write_fields_csv(&grid, &fields_path)?;
    run::write_report_json(&report, &report_path)?;
    let failed = grid.failed();
    println!(
        "{} points solved, {} failed; fields -> {}, report -> {}",
        report.grid.solved,
        failed,
        fields_path.display(),
        report_path.display()
    );
    if let Some(pde) = &report.pde {
        println!(
            "pde residuals: max |r1| = {:.3e}, max |r2| = {:.3e} over {} interior points",
            pde.r1.max, pde.r2.max, pde.r1.points
        );
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_boundary_check(args: &RunArgs) -> Result<ExitCode> {
    let cfg = RunConfig::from_file(&args.config).context("loading config")?;
    std::fs::create_dir_all(&args.out)?;
    let (_, report_path) = out_paths(&cfg, &args.out);
    let report = run::run_boundary_check(&cfg)?;
    run::write_report_json(&report, &report_path)?;
    println!(
        "admissibility: {} (values {:.6}, {:.6}); report -> {}",
        report.admissibility.admissible,
        report.admissibility.value_x,
        report.admissibility.value_y,
        report_path.display()
    );
    for e in &report.entries {
        let func = e
            .functional
            .map(|f| format!(", functional {:.6} +- {:.1e}", f.value, f.uncertainty))
            .unwrap_or_default();
        println!(
            "{}-limit at {:.3}: |defect_E| = {:.3e}, |defect_H| = {:.3e} (bands {:.1e}, {:.1e}){}",
            e.axis, e.position, e.defect_e, e.defect_h, e.lim_e.band, e.lim_h.band, func
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run_grid_mode(a, Mode::Solve),
        Command::Verify(a) => run_grid_mode(a, Mode::Verify),
        Command::Exact(a) => {
            let code = run_grid_mode(&a.run, Mode::Exact);
            if let (Ok(_), true) = (&code, a.vacuum) {
                let cfg = RunConfig::from_file(&a.run.config).expect("config re-read");
                if let Ok((grid, _)) = run::run_exact(&cfg) {
                    if let Err(e) = write_vacuum_csv(&grid, &a.run.out.join("vacuum.csv")) {
                        eprintln!("error writing vacuum.csv: {e}");
                    }
                }
            }
            code
        }
        Command::BoundaryCheck(a) => run_boundary_check(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
