use clap::Parser;
use dicke_otto_cli::{execute, exit_code, resolve, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let config = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dicke-otto: {e}");
            std::process::exit(1);
        }
    };
    if cli.print_config {
        print!("{}", config.to_toml());
        return;
    }
    let result = execute(&config);
    match &result {
        Ok(s) => {
            eprintln!(
                "dicke-otto: wrote {} rows to {} ({} failed points)",
                s.rows,
                s.output.display(),
                s.failed_points
            );
        }
        Err(e) => eprintln!("dicke-otto: {e}"),
    }
    std::process::exit(exit_code(&result));
}
