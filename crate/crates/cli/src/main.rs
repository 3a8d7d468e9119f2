use std::process::ExitCode;

use checkpoint_cli::{execute, Args};
use clap::Parser;

fn main() -> ExitCode {
    let args = Args::parse();
    let result = execute(&args);
    match result {
        Ok(report) => {
            print!("{}", report.summary);
            for name in &report.manifest.outputs {
                println!("wrote {}", args.out.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
