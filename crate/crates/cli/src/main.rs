use clap::Parser;

fn main() {
    let cli = llns_cli::Cli::parse();
    if let Err(e) = llns_cli::run(cli) {
        eprintln!("llns: {}", e.message);
        std::process::exit(e.code);
    }
}
