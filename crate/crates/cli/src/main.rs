//! `attrition solve|verify|simulate|curves|sweep --config <file> --out <dir> [--seed N]`
//!
//! Exit status: 0 on success, 1 for usage and internal errors, 2 when the
//! parameters admit no equilibrium of the requested kind, 3 when a profile
//! fails verification.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attrition::curves::{kinks, market_curves, write_curves_csv};
use attrition::equilibrium::GridSpec;
use attrition::simulate::{best_reply_sweep, estimate_payoffs, write_sim_csv, SimRow};
use attrition::sweep::{feasibility_sweep, write_sweep_csv};
use attrition::wire::{profile_from_json, profile_to_json, to_json};
use attrition::{
    pure_mpe, shoot_type2_equilibrium, singular_mpe_single_atom, stubborn_pure_mpe, symmetric_mixed_mpe,
    DiffusionModel, DuopolyParams, EquilibriumProfile, Player, ShootingOptions, SingularOptions,
};
use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "attrition", version)]
#[command(about = "Equilibria of a two-firm war of attrition driven by geometric Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an equilibrium profile and write profile.json
    Solve(Args),
    /// Re-verify a profile and write report.json
    Verify(Args),
    /// Monte Carlo payoffs and best-reply sweeps, written as CSV
    Simulate(Args),
    /// Market-value curves and kink locations
    Curves(Args),
    /// Feasibility of the one-atom singular equilibrium over a parameter grid
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the simulation block
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] attrition::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_infeasibility() => 2,
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    init_threads()?;
    let (Command::Solve(args)
    | Command::Verify(args)
    | Command::Simulate(args)
    | Command::Curves(args)
    | Command::Sweep(args)) = command;
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.as_path();
    std::fs::create_dir_all(out).map_err(io_at(out))?;
    match command {
        Command::Solve(_) => solve(&cfg, out),
        Command::Verify(_) => verify(&cfg, out),
        Command::Simulate(_) => simulate(&cfg, out, args.seed),
        Command::Curves(_) => curves(&cfg, out),
        Command::Sweep(_) => sweep(&cfg, out),
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ATTRITION_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("ATTRITION_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = create(path)?;
    writeln!(f, "{text}").and_then(|_| f.flush()).map_err(io_at(path))
}

pub(crate) fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_profile(path: &Path, grid: &GridSpec) -> Result<EquilibriumProfile, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    Ok(profile_from_json(&text, grid)?)
}

fn solve(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let block = RunConfig::block(&cfg.solve, "solve")?;
    let model = DiffusionModel::try_from(*RunConfig::block(&cfg.model, "model")?)?;
    let params = DuopolyParams::from_spec(model, *RunConfig::block(&cfg.duopoly, "duopoly")?)?;
    let refine = block.refine_trembling_hand;
    let profile = match block.kind.as_str() {
        "pure" => pure_mpe(&params)?,
        "stubborn" => stubborn_pure_mpe(&params)?,
        "symmetric" => symmetric_mixed_mpe(&params)?,
        "singular" => singular_mpe_single_atom(
            &params,
            SingularOptions {
                refine_trembling_hand: refine,
            },
        )?,
        kind => {
            let n = kind
                .strip_prefix("alternating:")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown kind {kind:?}; expected pure, stubborn, symmetric, singular or alternating:n"
                    ))
                })?;
            let opts = ShootingOptions {
                refine_trembling_hand: refine,
                ..block.shooting.unwrap_or_default()
            };
            shoot_type2_equilibrium(&params, n, opts)?
        }
    };
    write_text(&out.join("profile.json"), &profile_to_json(&profile)?)?;
    let status = if profile.certified() {
        "certified"
    } else {
        "uncertified"
    };
    println!(
        "{}: {status}, max residual {:.3e}",
        profile.kind.as_str(),
        profile.report.max_residual()
    );
    Ok(())
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let block = RunConfig::block(&cfg.verify, "verify")?;
    let profile = load_profile(&block.profile, &block.grid)?;
    let report = &profile.report;
    write_text(&out.join("report.json"), &to_json(report)?)?;
    let failed = report.failed_classes();
    if failed.is_empty() {
        println!("all residual classes pass, max {:.3e}", report.max_residual());
        return Ok(());
    }
    let lines: Vec<String> = report
        .residuals
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            format!(
                "{:?} (player {}): residual {:.3e} at {:?}",
                r.class, r.player, r.scaled, r.state
            )
        })
        .collect();
    for l in &lines {
        println!("{l}");
    }
    Err(CliError::Verification(lines.join("; ")))
}

fn simulate(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let block = RunConfig::block(&cfg.simulate, "simulate")?;
    let profile = load_profile(&block.profile, &GridSpec::default())?;
    let mut sim = block.sim.clone();
    if let Some(s) = seed {
        sim.seed = s;
    }
    sim.validate()?;
    let starts = if block.starts.is_empty() {
        vec![sim.x0]
    } else {
        block.starts.clone()
    };
    let strategies = [profile.strategy(Player::One), profile.strategy(Player::Two)];
    let top_atom = |p: Player| profile.strategy(p).atoms().first().map(|a| a.q);

    let mut estimates = Vec::new();
    let mut sweeps = Vec::new();
    for &x0 in &starts {
        let config = attrition::simulate::SimConfig { x0, ..sim.clone() };
        let est = estimate_payoffs(&profile.params, strategies, &config)?;
        for p in Player::BOTH {
            estimates.push(SimRow::from_estimate(&est[p.index()], top_atom(p)));
        }
        if !block.thresholds.is_empty() {
            for p in Player::BOTH {
                let s = best_reply_sweep(
                    &profile.params,
                    p,
                    profile.strategy(p.other()),
                    &block.thresholds,
                    &config,
                )?;
                sweeps.extend(SimRow::from_sweep(&s));
            }
        }
    }
    let path = out.join("estimates.csv");
    write_sim_csv(create(&path)?, &estimates).map_err(io_at(&path))?;
    if !sweeps.is_empty() {
        let path = out.join("best_reply.csv");
        write_sim_csv(create(&path)?, &sweeps).map_err(io_at(&path))?;
    }
    println!("{} estimates, {} deviation rows", estimates.len(), sweeps.len());
    Ok(())
}

fn curves(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let block = RunConfig::block(&cfg.curves, "curves")?;
    let profile = load_profile(&block.profile, &GridSpec::default())?;
    let rows = market_curves(&profile, &block.grid.states()?)?;
    let path = out.join("curves.csv");
    write_curves_csv(create(&path)?, &rows).map_err(io_at(&path))?;
    let k = kinks(&profile, block.kink_tolerance);
    write_text(&out.join("kinks.json"), &to_json(&k)?)?;
    println!("{} curve rows, {} kinks", rows.len(), k.len());
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let grid = RunConfig::block(&cfg.sweep, "sweep")?;
    let cells = feasibility_sweep(grid);
    let path = out.join("feasibility.csv");
    write_sweep_csv(create(&path)?, &cells).map_err(io_at(&path))?;
    let feasible = cells
        .iter()
        .filter(|c| c.status == attrition::sweep::CellStatus::Feasible)
        .count();
    println!("{feasible} of {} cells feasible", cells.len());
    Ok(())
}
