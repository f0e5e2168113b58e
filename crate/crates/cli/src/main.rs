use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wulff_flow::run::simulate;
use wulff_flow::study::{compare_stabilization, converge_space, converge_time, StudyReport};
use wulff_flow::wulff::write_shapes;
use wulff_flow::{HarnessError, RunConfig};

#[derive(Parser)]
#[command(name = "wulff-flow", version, about = "Anisotropic mean curvature flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow and write energy.csv, diag.json and snapshots.
    Run {
        config: PathBuf,
        /// Also write the final mass and stiffness matrices (MatrixMarket).
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Spatial convergence against the shrinking ellipsoid.
    ConvergeSpace {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 1e-4)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Temporal convergence against the shrinking ellipsoid.
    ConvergeTime {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [4e-3, 2e-3, 1e-3])]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        level: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frank diagram and Wulff shape of a density.
    Wulff {
        #[arg(long)]
        density: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
    },
    /// Run a configuration with and without stabilization.
    CompareStabilization {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_study(report: &StudyReport, out: &Path) {
    print!("{}", report.csv());
    println!("headline column: {}; written to {}", report.kind.headline(), out.display());
}

fn study_status(report: &StudyReport) -> ExitCode {
    if report.rows.iter().all(|r| r.completed) {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: at least one run aborted");
        ExitCode::from(3)
    }
}

fn execute(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run { config, dump_matrices } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.dump_matrices |= dump_matrices;
            let outcome = simulate(&cfg, Some(&cfg.output))?;
            let s = &outcome.summary;
            println!("{} of {} steps, t = {}, energy {} -> {}", s.steps_completed, s.steps_requested, s.time_reached, s.initial_energy, s.final_energy);
            if let Some(e) = s.max_interp_h1.zip(s.max_exact_h1) {
                println!("max H1 error: nodal {} pointwise {}", e.0, e.1);
            }
            match &s.aborted {
                None => Ok(ExitCode::SUCCESS),
                Some(reason) => {
                    eprintln!("error: run aborted: {reason}");
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::ConvergeSpace { config, levels, tau, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.clone());
            let report = converge_space(&cfg, &levels, tau, &out)?;
            print_study(&report, &out);
            Ok(study_status(&report))
        }
        Command::ConvergeTime { config, taus, level, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.clone());
            let report = converge_time(&cfg, &taus, level, &out)?;
            print_study(&report, &out);
            Ok(study_status(&report))
        }
        Command::Wulff { density, out, resolution } => {
            let s = write_shapes(&density, resolution, &out)?;
            println!("{} vertices; Frank radius {:?}, Wulff radius {:?}", s.vertices, s.frank_radius, s.wulff_radius);
            Ok(ExitCode::SUCCESS)
        }
        Command::CompareStabilization { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.clone());
            let cmp = compare_stabilization(&cfg, &out)?;
            print!("{}", cmp.csv());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
