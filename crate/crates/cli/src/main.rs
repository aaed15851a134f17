use clap::Parser;
use lamstat_cli::{run, write_output, RunConfig, EXIT_INPUT};

fn main() {
    let config = RunConfig::parse();
    let outcome = run(&config);
    if let lamstat_cli::Payload::Error(e) = &outcome.report.payload {
        eprintln!("error: {}", e.message);
    }
    let body = outcome
        .csv
        .clone()
        .unwrap_or_else(|| outcome.report.to_json());
    if let Err(e) = write_output(&config, &body) {
        eprintln!("error: {e}");
        std::process::exit(EXIT_INPUT);
    }
    std::process::exit(outcome.exit_code);
}
