use clap::{Parser, Subcommand};
use harmap_cli::{cmd_convergence, cmd_solve, cmd_sweep, cmd_verify, exit, RunOptions};
use harmap_core::Exec;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "harmap",
    version,
    about = "Energy/area inequality checks for harmonic maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the energy/area chain at every configured resolution.
    Verify(Args),
    /// Solve the Dirichlet problem and dump the discrete map.
    Solve(Args),
    /// Verify over a grid of family parameters.
    Sweep(Args),
    /// Compare integrals against registered oracles and fit the order.
    Convergence(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; without it the main result goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the pointwise field CSV.
    #[arg(long)]
    fields: bool,
    #[arg(long)]
    quiet: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let (run, args): (fn(&std::path::Path, &RunOptions) -> i32, Args) = match cli.command {
        Command::Verify(a) => (cmd_verify, a),
        Command::Solve(a) => (cmd_solve, a),
        Command::Sweep(a) => (cmd_sweep, a),
        Command::Convergence(a) => (cmd_convergence, a),
    };
    let opts = RunOptions {
        out: args.out,
        fields: args.fields,
        quiet: args.quiet,
        exec: Exec::from_env(),
    };
    std::process::exit(run(&args.config, &opts));
}
