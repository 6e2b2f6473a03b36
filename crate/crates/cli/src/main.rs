use std::path::PathBuf;
use std::process::ExitCode;

use aoi_mpr_cli::{run, Command, Format, Overrides};
use clap::Parser;

/// Age of information and secondary throughput for a shared-access
/// network with multipacket reception.
#[derive(Parser, Debug)]
#[command(name = "aoi-mpr", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (TOML, or a resolved `.json` scenario from an earlier output).
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; defaults to $AOI_MPR_OUT_DIR/<scenario>.<command>.<ext>, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides sim.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Measured slots per replication (horizon = warmup + slots).
    #[arg(long)]
    slots: Option<u64>,
    /// Overrides sim.replications.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        slots: args.slots,
        reps: args.reps,
    };
    match run(args.command, &args.scenario, args.out.as_deref(), &overrides, args.format) {
        Ok((outcome, written)) => {
            for path in &written {
                eprintln!("wrote {}", path.display());
            }
            eprintln!("{}: {}", args.command.name(), outcome.summary);
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
