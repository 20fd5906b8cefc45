use clap::Parser;
use hermlab_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    std::process::exit(hermlab_cli::run(&cli));
}
