//! Batch command-line front end for the uavids toolkit.
//!
//! Each subcommand reads from and writes into one run directory (`--out`):
//!
//! | path | written by |
//! |---|---|
//! | `dataset.csv`, `dataset.json` | `synth`, `ingest` |
//! | `train.*`, `test.*`, `recipe.json` | `preprocess` |
//! | `models/<name>.json` | `train` |
//! | `reports/*.json`, `reports/*.csv` | `train`, `evaluate`, `crossval`, `compare`, `explain`, `ablate` |
//! | `figures/*.svg` | `report` |
//! | `manifest.json` | every subcommand |

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod reports;
pub mod svg;

pub use error::{CliError, CliResult};

/// Parse `argv`, run the subcommand and return the process exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let args = match cli::Cli::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}
