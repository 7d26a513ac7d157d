mod args;
mod commands;
mod config;
mod error;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use crate::args::{Cli, Cmd};
use crate::error::CliError;

fn dispatch(cmd: &Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Gen(a) => commands::gen(a),
        Cmd::Mix(a) => commands::mix(a),
        Cmd::Score(a) => commands::score(a),
        Cmd::ScoreMulti(a) => commands::score_multi(a),
        Cmd::Bpe(c) => commands::bpe(c),
        Cmd::Train(a) => commands::train(a),
        Cmd::Translate(a) => commands::translate(a),
        Cmd::Bleu(a) => commands::bleu(a),
        Cmd::Augment(c) => commands::augment(c),
        Cmd::Probe(a) => commands::probe(a),
        Cmd::Sweep(a) => commands::sweep(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match config::merge(std::env::args_os().collect(), &Cli::command()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
