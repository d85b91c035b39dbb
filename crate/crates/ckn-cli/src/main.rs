use std::path::PathBuf;
use std::process::ExitCode;

use ckn_cli::config::OUT_DIR_ENV;
use ckn_cli::{commands, Cli, RunConfig};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let result = RunConfig::resolve(&cli, env_out).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ckn: {e}");
            e.exit_code()
        }
    }
}
