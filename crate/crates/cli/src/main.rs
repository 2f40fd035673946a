use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use fbm_stm::app::Cli;
use fbm_stm::error::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            // CliError messages already embed their causes
            match err.downcast_ref::<CliError>() {
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
                None => {
                    eprintln!("error: {err:#}");
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn real_main(cli: &Cli) -> anyhow::Result<u8> {
    let outcome = fbm_stm::run(cli)?;
    let mut out = std::io::stdout().lock();
    out.write_all(outcome.stdout.as_bytes()).context("writing to stdout")?;
    Ok(outcome.exit_code)
}
