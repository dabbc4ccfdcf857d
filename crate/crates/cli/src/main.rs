use std::path::PathBuf;
use std::process::ExitCode;

use twoscale_cli::{run_command, Command};

const USAGE: &str = "usage: twoscale <run|spectrum|sector|converge|steady> \
--config <path> [--out <dir>] [--threads N]

Environment:
  TWOSCALE_THREADS   worker threads when --threads is not given";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    }
    let Some(cmd) = Command::parse(&args[0]) else {
        eprintln!("unknown subcommand `{}`\n{USAGE}", args[0]);
        return ExitCode::from(2);
    };
    let mut config: Option<PathBuf> = None;
    let mut out = PathBuf::from("out");
    let mut threads: Option<usize> = None;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                match args.get(i) {
                    Some(p) => config = Some(PathBuf::from(p)),
                    None => {
                        eprintln!("--config needs a path\n{USAGE}");
                        return ExitCode::from(2);
                    }
                }
            }
            "--out" => {
                i += 1;
                match args.get(i) {
                    Some(p) => out = PathBuf::from(p),
                    None => {
                        eprintln!("--out needs a directory\n{USAGE}");
                        return ExitCode::from(2);
                    }
                }
            }
            "--threads" => {
                i += 1;
                match args.get(i).and_then(|s| s.parse::<usize>().ok()) {
                    Some(n) => threads = Some(n),
                    None => {
                        eprintln!("--threads needs a number\n{USAGE}");
                        return ExitCode::from(2);
                    }
                }
            }
            other => {
                eprintln!("unknown argument `{other}`\n{USAGE}");
                return ExitCode::from(2);
            }
        }
        i += 1;
    }
    let Some(config) = config else {
        eprintln!("missing --config\n{USAGE}");
        return ExitCode::from(2);
    };
    if threads.is_none() {
        if let Ok(env) = std::env::var("TWOSCALE_THREADS") {
            match env.parse::<usize>() {
                Ok(n) => threads = Some(n),
                Err(_) => {
                    eprintln!("TWOSCALE_THREADS must be a number, got `{env}`");
                    return ExitCode::from(2);
                }
            }
        }
    }
    match run_command(cmd, &config, &out, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
