use std::process::ExitCode;

use attn_topo_cli::{run, Cli, ExitKind};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitKind::Usage.code()
            } else {
                0
            };
            // help and version go to stdout
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("attn-topo: error: {e}");
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
