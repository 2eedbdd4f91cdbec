use clap::Parser;
use glmsel_cli::Cli;

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            std::process::exit(1);
        }
    }
    if let Err(e) = glmsel_cli::commands::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
