use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavelab_cli::{load_config, run, CliError, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "wavelab",
    version,
    about = "Finite-difference wave experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; falls back to WAVELAB_THREADS.
        #[arg(long, env = "WAVELAB_THREADS")]
        threads: Option<usize>,
    },
    /// Parse a config file without running anything.
    Validate { config: PathBuf },
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            println!("{}: ok ({})", config.display(), cfg.experiment.name());
            Ok(EXIT_OK)
        }
        Command::Run {
            config,
            out,
            threads,
        } => {
            let cfg = load_config(&config)?;
            if let Some(n) = threads {
                if n == 0 {
                    return Err(CliError::config("--threads must be positive"));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
            }
            let (report, dir) = run(&cfg, out.as_deref())?;
            print!("{}", report.summary());
            if !report.passed() {
                let failed: Vec<_> = report
                    .criteria
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                eprintln!(
                    "wavelab: {} failed: {} (outputs in {})",
                    cfg.experiment.name(),
                    failed.join(", "),
                    dir.display()
                );
            }
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wavelab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
