use clap::Parser;

use lrdproc_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = lrdproc_cli::run(cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.code);
    }
}
