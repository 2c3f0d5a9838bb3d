use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use taubox::cli::{exit_code_for, preflight, run};
use taubox::config::{parse_config, Command as RunCommand, ConfigError};

/// Exact divisor-power sums over quadratic polynomial boxes and their
/// predicted main terms.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Run configuration file (key = value format; see the crate README).
    #[arg(long)]
    config: PathBuf,

    /// Where to write the CSV report (overrides the config).
    #[arg(long)]
    output: Option<PathBuf>,

    /// Worker threads (overrides the config; results are identical for any
    /// value).
    #[arg(long)]
    threads: Option<usize>,

    /// Seed for sampled quadrature (overrides the config).
    #[arg(long)]
    seed: Option<u64>,

    /// Command override: exact | estimate | compare | local-dump | verify.
    #[arg(long)]
    command: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "error: kind=config message=\"cannot read {}: {e}\"",
                args.config.display()
            );
            return ExitCode::from(2);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e @ ConfigError::Syntax { .. }) => {
            eprintln!("error: kind=config message=\"{e}\"");
            return ExitCode::from(2);
        }
        Err(ConfigError::Invalid(violations)) => {
            for v in &violations {
                eprintln!("error: kind=config message=\"{v}\"");
            }
            return ExitCode::from(2);
        }
    };
    if let Some(cmd) = &args.command {
        match RunCommand::parse(cmd) {
            Some(c) => config.command = c,
            None => {
                eprintln!("error: kind=config message=\"unknown command `{cmd}`\"");
                return ExitCode::from(2);
            }
        }
    }
    if let Some(out) = args.output {
        config.output = Some(out);
    }
    if let Some(t) = args.threads {
        if t < 1 {
            eprintln!("error: kind=config message=\"threads must be >= 1\"");
            return ExitCode::from(2);
        }
        config.threads = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
        config.quad.seed = s;
    }
    if let Err(e) = preflight(&config.poly, &config.x_schedule) {
        eprintln!("error: kind=computation message=\"{e}\"");
        return ExitCode::from(1);
    }
    match run(&config) {
        Ok(out) => {
            println!("wrote {} ({} rows)", out.path.display(), out.rows);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = match exit_code_for(&e) {
                3 => "budget",
                _ => "computation",
            };
            eprintln!("error: kind={kind} message=\"{e}\"");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
