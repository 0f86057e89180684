use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use subspace_cli::args::{Cli, Command};
use subspace_cli::{commands, CliError};

fn run(cli: Cli) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::TrainRecon(a) => commands::train_recon(&a, &mut out)
            .map(drop)
            .context("train-recon failed"),
        Command::TrainLinkpred(a) => commands::train_linkpred(&a, &mut out)
            .map(drop)
            .context("train-linkpred failed"),
        Command::Eval(a) => commands::eval(&a, &mut out).context("eval failed"),
        Command::Query(a) => commands::query(&a, &mut out).context("query failed"),
        Command::Export(a) => commands::export(&a, &mut out).context("export failed"),
        Command::Fixtures(a) => commands::fixtures(&a, &mut out).context("fixtures failed"),
    }?;
    out.flush().context("flushing stdout")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; this tool reserves 2 for runtime failures.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(2, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
