use clap::Parser;

fn main() {
    let cli = minent_cli::cli::Cli::parse();
    if let Err(e) = minent_cli::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
