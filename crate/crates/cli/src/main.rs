use std::process::ExitCode;

use canary_audit_cli::args::{Cli, Command};
use canary_audit_cli::{commands, CliError, CliResult};
use clap::Parser;

const THREADS_ENV: &str = "CANARY_AUDIT_THREADS";

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be an integer, got {v:?}")))?,
        ),
        Err(_) => flag,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.command.common().threads)?;
    match &cli.command {
        Command::GaussAudit(a) => commands::gauss_audit(a),
        Command::FlAudit(a) => commands::fl_audit(a),
        Command::Epsilon(a) => commands::epsilon(a),
        Command::LowerBound(a) => commands::lower_bound(a),
        Command::ValidateNormality(a) => commands::validate_normality(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
