use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rimcomp_cli::{parse_scenario, run, Format, RunOptions};

/// Runs a comparison-geometry scenario and writes its check reports.
#[derive(Debug, Parser)]
#[command(name = "rimcomp", version)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,

    /// Directory for report files.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Report format; overrides the scenario.
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Worker threads (reported numbers do not depend on it).
    #[arg(long, env = "RIMCOMP_THREADS")]
    threads: Option<usize>,

    /// Uniform multiplier on every check tolerance.
    #[arg(long)]
    tol_scale: Option<f64>,

    /// Seed for random trial functions.
    #[arg(long)]
    seed: Option<u64>,

    /// Also write the fast-marching distance grid (chart surfaces).
    #[arg(long)]
    dump_distance_field: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let scenario = match parse_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let options = RunOptions {
        out_dir: args.out,
        format: args.format,
        tol_scale: args.tol_scale,
        seed: args.seed,
        dump_distance_field: args.dump_distance_field,
    };
    let outcome = run(&scenario, &options);
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    if let Some(report) = &outcome.report {
        for r in &report.suite.reports {
            println!("{:<8} {:<52} margin {:>12.4e}  tol {:.2e}", format!("{:?}", r.status).to_lowercase(), r.name, r.worst_margin, r.tolerance);
        }
        println!("rigidity: {:?}", report.verdict().kind);
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
