use clap::Parser;

use tabver::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error[{}]: {e}", e.category().as_str());
        std::process::exit(e.category().exit_code());
    }
}
