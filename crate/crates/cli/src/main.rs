use clap::Parser;
use vorder_cli::cli::{dispatch, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        eprintln!("error{e}");
        std::process::exit(e.exit_code());
    }
}
