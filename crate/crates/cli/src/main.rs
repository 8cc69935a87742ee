use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mhd_core::sweep::{run_sweep, SweepConfig, Task};
use mhd_core::Error;

/// Sweep basic states and write stability diagrams.
#[derive(Parser, Debug)]
#[command(name = "mhd-sweep", version)]
struct Args {
    /// JSON sweep configuration
    #[arg(long)]
    config: PathBuf,
    /// output directory, overrides the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// comma-separated tasks, overrides the config
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<String>>,
    #[arg(long)]
    hemisphere_n: Option<usize>,
    /// root-scan tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

fn configure(args: &Args) -> Result<SweepConfig, Error> {
    let mut cfg = SweepConfig::load(&args.config)?;
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    if let Some(t) = &args.tasks {
        cfg.tasks = t
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Task>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(n) = args.hemisphere_n {
        cfg.hemisphere_n = n;
    }
    if let Some(t) = args.tol {
        cfg.tolerances.root = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match configure(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("mhd-sweep: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(j) = args.jobs {
        if j == 0 {
            eprintln!("mhd-sweep: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
        {
            eprintln!("mhd-sweep: {e}");
            return ExitCode::from(2);
        }
    }
    match run_sweep(&cfg) {
        Ok(out) => {
            let s = &out.summary;
            eprintln!(
                "{} rows, {} rejected, {} inconsistent -> {}",
                s.rows,
                s.rejected,
                s.inconsistent.len(),
                cfg.output_dir.display()
            );
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("mhd-sweep: {e}");
            ExitCode::from(2)
        }
    }
}
