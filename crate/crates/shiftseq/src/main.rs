use clap::error::ErrorKind;
use clap::Parser;

use shiftseq::harness::{execute, validate_cli, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SHIFTSEQ_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                std::process::exit(0);
            }
            eprintln!("{err}");
            std::process::exit(1);
        }
    };
    let command = match validate_cli(cli) {
        Ok(command) => command,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    };
    if let Err(err) = execute(&command) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
