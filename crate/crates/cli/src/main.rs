mod args;
mod commands;
mod config;
mod methods;
mod oracles;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::oracles::OracleUnreachable;

/// 3 for anything the oracle did wrong, 2 for bad input or configuration.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<OracleUnreachable>().is_some() {
        return 3;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hipe_core::Error>() {
            return if e.is_oracle_failure() { 3 } else { 2 };
        }
    }
    2
}

/// The error chain joined with ": ", skipping causes whose text the
/// previous message already includes.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HIPE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Map(a) => commands::map::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Bench(a) => commands::bench::run(a),
        Command::Render(a) => commands::render::run(a),
        Command::Serve(a) => commands::serve::run(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
