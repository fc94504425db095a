use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chargefock::config::RunConfig;
use chargefock::run::{dump_operators, emit_report, run_experiment, Mode};

/// Exact-diagonalization laboratory for a cutoff charged scalar field on a
/// truncated boson Fock space.
#[derive(Parser)]
#[command(name = "chargefock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state solve at the configured couplings.
    Solve(RunArgs),
    /// Ground state of every charge sector.
    Sectors(RunArgs),
    /// Mass sweep down to the massless model.
    Sweep(RunArgs),
    /// Run the check registry.
    Verify(RunArgs),
    /// Solve, sectors, sweep and verify in one run.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides config and CHARGEFOCK_OUT).
    #[arg(long, env = "CHARGEFOCK_OUT")]
    out: Option<PathBuf>,

    /// Solver seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Basis dimension guard override.
    #[arg(long)]
    mode_cap: Option<usize>,

    /// Output format: tabular or records (default: both from config).
    #[arg(long)]
    format: Option<String>,

    /// Also dump the assembled operators as triplet files into this directory.
    #[arg(long)]
    dump_operators: Option<PathBuf>,
}

fn load_config(args: &RunArgs) -> chargefock::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Some(cap) = args.mode_cap {
        cfg.solver.mode_cap = cap;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.display().to_string();
    }
    if let Some(format) = &args.format {
        cfg.output.formats = vec![format.clone()];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(mode: Mode, args: &RunArgs) -> ExitCode {
    let cfg = match load_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &args.dump_operators {
        match dump_operators(&cfg, dir) {
            Ok(paths) => {
                for p in paths {
                    println!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("error: operator dump: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let record = match run_experiment(&cfg, mode) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    for row in &record.solves {
        println!(
            "{}: E0 = {:.12e}  gap = {:.6e}  sector = {}  <N> = {:.6e}",
            row.label, row.energy, row.gap, row.sector, row.number_expect
        );
    }
    for row in &record.sweep {
        println!(
            "sweep m = {:<8}: E0 = {:.12e}  E0 - E0(0) = {:.6e}  <N> = {:.6e}  sector = {}",
            row.mass, row.energy, row.energy_minus_massless, row.number_expect, row.sector
        );
    }
    let mut failed = 0usize;
    for c in &record.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "check {:<22} {}  residual = {:.6e}  threshold = {:.6e}",
            c.check_id, status, c.residual, c.threshold
        );
        if !c.passed {
            failed += 1;
        }
    }

    let out_dir = PathBuf::from(&cfg.output.dir);
    match emit_report(&record, &out_dir, &cfg.output.formats) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: emit: {e}");
            return ExitCode::from(1);
        }
    }

    if failed > 0 {
        eprintln!("{failed} check(s) failed");
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => execute(Mode::Solve, &args),
        Command::Sectors(args) => execute(Mode::Sectors, &args),
        Command::Sweep(args) => execute(Mode::Sweep, &args),
        Command::Verify(args) => execute(Mode::Verify, &args),
        Command::All(args) => execute(Mode::All, &args),
    }
}
