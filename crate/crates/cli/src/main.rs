use clap::Parser;

fn main() {
    let cli = corank_cli::Cli::parse();
    if let Err(e) = corank_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
