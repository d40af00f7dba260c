use clap::Parser;

fn main() {
    let cli = stochorder_cli::Cli::parse();
    std::process::exit(stochorder_cli::run(&cli));
}
