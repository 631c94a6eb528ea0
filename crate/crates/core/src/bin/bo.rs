use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use bo_core::experiment::{self, OUT_DIR_ENV};
use bo_core::{Error, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "bo",
    version,
    about = "Benjamin-Ono simulations and virial diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one or more scenario configs; each writes into <out>/<config stem>.
    Run {
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, env = OUT_DIR_ENV, default_value = experiment::DEFAULT_OUT_DIR)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate the four weighted estimates over the seeded corpus.
    CheckLemmas {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        grid_n: usize,
        #[arg(long, default_value_t = 200.0)]
        grid_length: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,5,20,100")]
        lambdas: Vec<f64>,
        #[arg(long, env = OUT_DIR_ENV, default_value = experiment::DEFAULT_OUT_DIR)]
        out: PathBuf,
    },
    /// Summarize a records file: integrated decay, dyadic minima, L1 growth, drift.
    Analyze {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Directory for summary.json; defaults to the records' directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profile residuals of the classical and certified solitary waves.
    SolitonTest {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        validate_family: bool,
        #[arg(long, default_value_t = 4096)]
        grid_n: usize,
        #[arg(long, default_value_t = 400.0)]
        grid_length: f64,
    },
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    err.exit_code()
}

fn run_one(path: &Path, out: &Path) -> i32 {
    let cfg = match ScenarioConfig::load(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let stem = path.file_stem().unwrap_or_default();
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| out.to_path_buf())
        .join(stem);
    match experiment::run(&cfg, &dir) {
        Ok(m) => {
            println!(
                "{}: {} records, {} steps, status {:?} -> {}",
                path.display(),
                m.records,
                m.steps,
                m.status,
                dir.display()
            );
            if let Some(msg) = &m.message {
                eprintln!("{}: {msg}", path.display());
            }
            m.exit_code()
        }
        Err(e) => fail(&e),
    }
}

fn run(configs: &[PathBuf], out: &Path, jobs: usize) -> i32 {
    let stems: BTreeSet<_> = configs.iter().map(|p| p.file_stem()).collect();
    if stems.len() != configs.len() {
        eprintln!("error: config file stems must be distinct");
        return 2;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let codes: Vec<i32> = pool.install(|| configs.par_iter().map(|p| run_one(p, out)).collect());
    codes.into_iter().max().unwrap_or(0)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { configs, out, jobs } => run(&configs, &out, jobs),
        Command::CheckLemmas {
            seed,
            grid_n,
            grid_length,
            lambdas,
            out,
        } => match experiment::check_lemmas(seed, grid_n, grid_length, &lambdas, &out) {
            Ok(s) => {
                for (tag, t) in &s.tags {
                    println!(
                        "{tag}: constant {:e} over {} reports",
                        t.calibration.constant, t.calibration.evaluated
                    );
                }
                0
            }
            Err(e) => fail(&e),
        },
        Command::Analyze { records, a, c, out } => {
            match experiment::analyze(&records, a, c, out.as_deref()) {
                Ok(s) => {
                    print_json(&s);
                    0
                }
                Err(e) => fail(&e),
            }
        }
        Command::SolitonTest {
            c,
            validate_family,
            grid_n,
            grid_length,
        } => match experiment::soliton_test(c, validate_family, grid_n, grid_length) {
            Ok(r) => {
                print_json(&r);
                0
            }
            Err(e) => fail(&e),
        },
    };
    ExitCode::from(code as u8)
}
