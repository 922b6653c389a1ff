mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Status;

const EXIT_ERROR: u8 = 1;
const EXIT_CONDITION: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format(|buf, record| writeln!(buf, "{}: {}", record.level().as_str().to_lowercase(), record.args()))
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Chi2(a) => commands::chi2(a),
        Command::Twoprop(a) => commands::twoprop(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Embed(a) => commands::embed(a),
        Command::Validate(a) => commands::validate(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ConditionWarning) => ExitCode::from(EXIT_CONDITION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
