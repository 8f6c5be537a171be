use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = dimsel::cli::Cli::parse();
    if let Err(err) = dimsel::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(dimsel::cli::exit_code(&err));
    }
}
