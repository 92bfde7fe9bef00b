use clap::Parser;

fn main() {
    let cli = pairbet_cli::Cli::parse();
    if let Err(err) = pairbet_cli::run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(pairbet_cli::exit_code(&err));
    }
}
