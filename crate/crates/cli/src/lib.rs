//! Command-line front end for training and comparing replay variants.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::CliError;

/// Runs the command line `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    let outcome = match &cli.command {
        Command::Train(a) => commands::cmd_train(a).map(|_| ()),
        Command::Compare(a) => commands::cmd_compare(a).map(|_| ()),
        Command::Plot(a) => commands::cmd_plot(a).map(|p| println!("wrote {}", p.display())),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("isac-lab: {e}");
            e.exit_code()
        }
    }
}
