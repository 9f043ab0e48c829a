use std::path::PathBuf;
use std::process::ExitCode;

use axilab::report::{cmd_report, ReportFormat};
use axilab::run::cmd_run;
use axilab::verify::cmd_verify;
use axilab::{resolve_config, CliError};
use axilab_core::verify::Verdict;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "axilab", version, about = "Axisymmetric swirl solvers and scale diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a config file or a preset name.
    Run {
        config: String,
        /// Output directory; defaults to `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero every timestamp so repeated runs are byte-identical.
        #[arg(long)]
        reproducible: bool,
    },
    /// Check the estimates on a finished run.
    Verify {
        dir: PathBuf,
        #[arg(long)]
        reproducible: bool,
    },
    /// Summarize a finished run.
    Report {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        #[arg(long)]
        reproducible: bool,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("AXILAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("AXILAB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::config)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run {
            config,
            out,
            reproducible,
        } => {
            let cfg = resolve_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.dir.clone());
            let outcome = cmd_run(&cfg, &out, reproducible)?;
            for d in &outcome.report.runs {
                let alpha = d.alpha.map_or_else(|| "undefined".to_string(), |a| format!("{a:.4}"));
                println!(
                    "{:<18} |b|_E = {:.4e}  alpha = {alpha}  max-principle excess = {:.2e}",
                    d.name, d.e_norm, d.gamma_range.max_principle_excess
                );
            }
            println!("wrote {} files to {}", outcome.manifest.files.len(), out.display());
            Ok(())
        }
        Command::Verify { dir, reproducible } => {
            let out = cmd_verify(&dir, reproducible)?;
            println!("{:<16} {:<26} {:>12} {:>12}  verdict", "member", "check", "lhs", "rhs");
            for (member, e) in out.entries() {
                println!(
                    "{member:<16} {:<26} {:>12.4e} {:>12.4e}  {:?}",
                    e.name, e.lhs, e.rhs, e.verdict
                );
            }
            let failed = out.entries().filter(|(_, e)| e.verdict == Verdict::Fail).count();
            if failed > 0 {
                return Err(CliError::Verifier(format!("{failed} check(s) failed")));
            }
            println!("all decided checks pass");
            Ok(())
        }
        Command::Report {
            dir,
            format,
            reproducible,
        } => {
            for f in cmd_report(&dir, format, reproducible)? {
                println!("{}", dir.join(f).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("axilab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
