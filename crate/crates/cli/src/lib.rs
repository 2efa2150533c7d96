//! Command-line front end for the block-sparse Bayesian learning toolkit:
//! problem synthesis, single recoveries, and the benchmark experiments,
//! with deterministic seeded output suitable for diffing across runs.

pub mod args;
pub mod bundle;
pub mod manifest;
pub mod matio;

mod commands {
    pub mod bench;
    pub mod recover;
    pub mod synth;
}

use args::{load_file_config, merged_bench, merged_recover, merged_synth, Cli, Command};
use clap::Parser;

/// Parse and execute; returns the process exit code.
///
/// Exit codes: 0 success/converged, 1 input or execution error, 2 the
/// solver hit its iteration budget without converging.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let command_line: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with code 0
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let file = match load_file_config(cli.config.as_ref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e:#}");
            return 1;
        }
    };
    let outcome = match &cli.command {
        Command::Synth(a) => {
            commands::synth::run(&merged_synth(a, &file.synth), command_line).map(|()| 0)
        }
        Command::Recover(a) => {
            commands::recover::run(&merged_recover(a, &file.recover), command_line)
        }
        Command::Bench(a) => {
            commands::bench::run(&merged_bench(a, &file.bench), command_line).map(|()| 0)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
