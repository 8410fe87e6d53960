use clap::Parser;

fn main() {
    let cli = fxlab::cli::Cli::parse();
    std::process::exit(fxlab::cli::run(cli));
}
