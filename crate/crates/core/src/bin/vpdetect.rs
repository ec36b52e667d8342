use clap::Parser;

fn main() {
    let cli = vpdetect::cli::Cli::parse();
    std::process::exit(vpdetect::cli::run(cli));
}
