use clap::Parser;

fn main() {
    let cli = hopcap::cli::Cli::parse();
    std::process::exit(hopcap::cli::run(cli));
}
