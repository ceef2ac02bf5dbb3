use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fogchain_cli::{emit_trace, load_config, run_experiment, run_single, CliError, ExperimentSpec};

#[derive(Parser)]
#[command(name = "fogchain", version, about = "IoT-fog-blockchain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run of the base configuration.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the event trace.
        #[arg(long)]
        trace: bool,
    },
    /// Every sweep point for every seed.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
    },
    /// Re-run one `<point>-<seed>` and write its event trace.
    Trace {
        config: PathBuf,
        run_id: String,
        /// Trace file; defaults to `<output>/traces/<run-id>.tsv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Print every field with its default value.
    Defaults,
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ExperimentSpec, CliError> {
    let mut spec = load_config(path)?;
    if let Some(out) = out {
        spec.output = out;
    }
    Ok(spec)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            trace,
        } => {
            let spec = load(&config, out)?;
            let output = run_single(&spec, seed, trace)?;
            let run = &output.runs[0];
            let r = &run.report;
            println!(
                "run {}: nodes={} delay={}ms energy={:.3}kJ drops={} blocks={} chain_valid={}",
                run.run_id(),
                run.nodes,
                r.sigma,
                r.energy_kj(),
                r.drops,
                r.blocks_mined,
                r.chain_valid
            );
            println!("wrote {}", output.dir.display());
        }
        Command::Sweep { config, out, trace } => {
            let spec = load(&config, out)?;
            let output = run_experiment(&spec, trace)?;
            println!("{} runs, wrote {}", output.runs.len(), output.dir.display());
        }
        Command::Trace { config, run_id, out } => {
            let spec = load(&config, None)?;
            let path = emit_trace(&spec, &run_id, out.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::Validate { config } => {
            let spec = load(&config, None)?;
            let points = spec.points()?;
            println!("ok: {} points x {} seeds", points.len(), spec.seeds.len());
        }
        Command::Defaults => print!("{}", ExperimentSpec::defaults_reference()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
