use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glaeser_cli::{
    load_spec, run_decide, run_extend, run_finiteness, run_refine, selfcheck, write_atomic, CliError, ExtendOptions,
    Overrides,
};

/// Decides, refines and extends C^m selection problems on finite point sets.
///
/// Exit codes: 0 SOLVABLE (or success), 1 UNSOLVABLE (or a failed
/// selfcheck), 2 INCONCLUSIVE, 3 usage or input error, 4 extension refused,
/// 5 internal or I/O error.
#[derive(Parser)]
#[command(name = "glaeser", version)]
struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "GLAESER_THREADS", global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Stabilize the bundle and print a verdict report.
    Decide(Common),
    /// Write the refined bundle as an explicit-bundle spec.
    Refine {
        #[command(flatten)]
        common: Common,
        /// Number of rounds [default: until stabilization].
        #[arg(long)]
        rounds: Option<usize>,
        /// Also write the run report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sample the Whitney extension of a selected section as CSV.
    Extend {
        #[command(flatten)]
        common: Common,
        /// Samples per axis over the bounding box of the points.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        /// Extend even when the verdict is not SOLVABLE.
        #[arg(long)]
        force: bool,
        /// Append rows at the data points.
        #[arg(long)]
        include_data: bool,
    },
    /// Largest constrained least-squares value over small subsets.
    Finiteness(Common),
    /// Run a fixed battery of known answers.
    Selfcheck,
}

#[derive(Args)]
struct Common {
    /// Problem spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tuple size for refinement [default: config, else 2]; subset size for
    /// finiteness [default: config, else min(3·2^(n-1), |E|)].
    #[arg(long)]
    k_sharp: Option<usize>,
    /// Comma-separated decreasing radii [default: config, else dyadic from
    /// the data].
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
    /// Largest form minimum treated as zero [default: config, else 1e-6].
    #[arg(long)]
    tol: Option<f64>,
    /// Sampling seed [default: config, else 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            k_sharp: self.k_sharp,
            scales: self.scales.clone(),
            tol: self.tol,
            seed: self.seed,
            timing: self.timing,
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Decide(c) => {
            let spec = load_spec(&c.spec)?;
            let (report, v) = run_decide(&spec, &c.overrides())?;
            emit(c.out.as_deref(), &report.to_json())?;
            eprintln!("{} after {} rounds", v.status.as_str(), v.iterations);
            Ok(v.status.exit_code())
        }
        Cmd::Refine { common, rounds, report } => {
            let spec = load_spec(&common.spec)?;
            let (refined, r) = run_refine(&spec, &common.overrides(), rounds)?;
            emit(common.out.as_deref(), &glaeser_cli::spec::to_json(&refined))?;
            if let Some(p) = report {
                write_atomic(&p, &r.to_json())?;
            }
            let dims = r.dims_per_round.last().cloned().unwrap_or_default();
            eprintln!("{} rounds, final dims {dims:?}", r.iterations.unwrap_or(0));
            Ok(0)
        }
        Cmd::Extend {
            common,
            grid,
            force,
            include_data,
        } => {
            let spec = load_spec(&common.spec)?;
            let opts = ExtendOptions {
                grid,
                force,
                include_data,
            };
            let csv = run_extend(&spec, &common.overrides(), opts)?;
            emit(common.out.as_deref(), &csv)?;
            Ok(0)
        }
        Cmd::Finiteness(c) => {
            let spec = load_spec(&c.spec)?;
            let r = run_finiteness(&spec, &c.overrides())?;
            emit(c.out.as_deref(), &r.to_json())?;
            if let Some(f) = &r.finiteness {
                eprintln!("sup M_S = {} on subset {:?}", f.sup_m, f.subset);
            }
            Ok(0)
        }
        Cmd::Selfcheck => {
            let lines = selfcheck();
            for l in &lines {
                println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
            }
            Ok(if lines.iter().all(|l| l.passed) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(5);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
