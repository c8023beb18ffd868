//! `veil`: batch front end for the veiling library.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for data
//! errors (missing or short input, unreadable files).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{AnalyzeConfig, CfmmConfig, GameConfig, GenConfig, PoolSpec};
use failure::{Failure, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "veil", version, about = "Veiled randomness, ambiguity aggregators and CFMM experiments")]
struct Cli {
    /// JSON config for the command, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of `gen` and `oracle`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a generator stream as `n,z,u,bit` CSV.
    Gen(GenArgs),
    /// Lower/upper frequency bounds and a window-mean trace of a 0-1 stream.
    Analyze(AnalyzeArgs),
    /// Mixed and veiled equilibria of the coordination game.
    Game(GameArgs),
    /// Sure-loss search against a constant-product pool.
    Cfmm(CfmmArgs),
    /// Welfare of a type population under single-price and veiled resolution.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// 1 for the measurable machine, 2 for the non-ergodic one.
    #[arg(long)]
    machine: Option<u8>,
    #[arg(long)]
    n: Option<u64>,
    /// Measure of the set `[0, p]` (machine 1).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Window lengths, comma separated or repeated.
    #[arg(long = "window", value_delimiter = ',')]
    windows: Vec<usize>,
    #[arg(long)]
    min_window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trace_window: Option<usize>,
    #[arg(long)]
    trace_stride: Option<usize>,
}

#[derive(Args)]
struct GameArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    sweep_step: Option<f64>,
}

#[derive(Args)]
struct CfmmArgs {
    /// Pool JSON `{ "r1": .., "r2": .., "k": .. }`.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    pool_depth: Option<f64>,
    #[arg(long)]
    p_low: Option<f64>,
    #[arg(long)]
    p_high: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// A number or `-inf`.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    grid: Option<f64>,
    /// Evaluate acceptability set-valued.
    #[arg(long)]
    veiled: bool,
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario JSON; `--config` works as well.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg_path = cli.config.as_deref();
    match cli.command {
        Command::Gen(a) => {
            let mut c: GenConfig = config::load_or_default(cfg_path, "gen")?;
            set(&mut c.machine, a.machine);
            set(&mut c.n, a.n);
            set(&mut c.p, a.p);
            set(&mut c.phi, a.phi);
            set(&mut c.psi, a.psi);
            set(&mut c.x0, a.x0);
            set(&mut c.gamma, a.gamma);
            set(&mut c.threshold, a.threshold);
            set(&mut c.seed, cli.seed);
            commands::gen(&c, &cli.out)
        }
        Command::Analyze(a) => {
            let mut c: AnalyzeConfig = config::load_or_default(cfg_path, "analyze")?;
            if a.input.is_some() {
                c.input = a.input;
            }
            if !a.windows.is_empty() {
                c.windows = a.windows;
            }
            set(&mut c.min_window, a.min_window);
            set(&mut c.epsilon, a.epsilon);
            c.stride = a.stride.or(c.stride);
            c.trace_window = a.trace_window.or(c.trace_window);
            c.trace_stride = a.trace_stride.or(c.trace_stride);
            commands::analyze(&c, &cli.out)
        }
        Command::Game(a) => {
            let mut c: GameConfig = config::load_or_default(cfg_path, "game")?;
            set(&mut c.lambda, a.lambda);
            set(&mut c.grid_step, a.grid_step);
            set(&mut c.sweep_step, a.sweep_step);
            commands::game(&c, &cli.out)
        }
        Command::Cfmm(a) => {
            let mut c: CfmmConfig = config::load_or_default(cfg_path, "cfmm")?;
            if let Some(p) = &a.pool {
                let v = config::load_value(p, "cfmm")?;
                c.pool = Some(config::parse::<PoolSpec>(v, "pool")?);
            }
            set(&mut c.pool_depth, a.pool_depth);
            set(&mut c.p_low, a.p_low);
            set(&mut c.p_high, a.p_high);
            set(&mut c.alpha, a.alpha);
            set(&mut c.rho, a.rho);
            set(&mut c.depth, a.depth);
            set(&mut c.trade_grid, a.grid);
            set(&mut c.grid_points, a.grid_points);
            c.veiled |= a.veiled;
            commands::cfmm(&c, &cli.out)
        }
        Command::Oracle(a) => {
            let path = a
                .scenario
                .as_deref()
                .or(cfg_path)
                .ok_or_else(|| Failure::usage("oracle needs --scenario <file>"))?;
            let mut sc = config::parse_scenario(config::load_value(path, "oracle")?)?;
            set(&mut sc.seed, cli.seed);
            commands::oracle(&sc, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
