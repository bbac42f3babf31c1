use clap::Parser;
use conformal_forms_cli::{run, Cli};

fn main() {
    if let Err(f) = run(Cli::parse()) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}
