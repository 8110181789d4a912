use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = mmv2x::Args::parse();
    match mmv2x::run(&args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
