use clap::Parser;
use kswave_lab::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("kslab: {e}");
        std::process::exit(e.exit_code());
    }
}
