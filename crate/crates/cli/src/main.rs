use clap::Parser;

fn main() {
    std::process::exit(cvqkd_cli::run(cvqkd_cli::Cli::parse()));
}
