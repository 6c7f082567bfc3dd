//! `pondera`: frequency sweeps of the ponderomotive output covariance,
//! entanglement markers and state-transfer fidelities, emitted as CSV.
//!
//! Exit codes: 0 success, 1 configuration error, 2 completed sweep with
//! errored grid points, 3 I/O failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pondera_cli::config::{parse_config_with_preset, Preset};
use pondera_cli::output::{emit_csv, write_csv};
use pondera_cli::sweep::run_sweep;

#[derive(Parser)]
#[command(name = "pondera", version, about = "Ponderomotive output-field sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a frequency/temperature sweep and emit CSV.
    Sweep {
        /// Flat key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Figure preset (fig2..fig6); overrides a preset in the config.
        #[arg(long)]
        preset: Option<String>,
        /// Worker threads (default: PONDERA_THREADS, then the number of
        /// available cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the built-in invariant suite and exit nonzero on failure.
    Check,
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("PONDERA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
    .max(1)
}

fn run_sweep_command(
    config_path: Option<PathBuf>,
    out: Option<PathBuf>,
    preset: Option<String>,
    threads: Option<usize>,
) -> u8 {
    let preset = match preset {
        Some(name) => match Preset::from_name(&name) {
            Some(p) => Some(p),
            None => {
                eprintln!("config error: unknown preset `{name}` (expected fig2..fig6)");
                return 1;
            }
        },
        None => None,
    };
    if config_path.is_none() && preset.is_none() {
        eprintln!("config error: provide --config FILE and/or --preset NAME");
        return 1;
    }

    let text = match &config_path {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return 3;
            }
        },
        None => String::new(),
    };

    let config = match parse_config_with_preset(&text, preset) {
        Ok(c) => c,
        Err(errors) => {
            for error in errors {
                eprintln!("config error: {error}");
            }
            return 1;
        }
    };

    if let Ok(warnings) = config.params.validate() {
        for w in warnings {
            eprintln!("warning: {w}");
        }
    }

    let result = match run_sweep(&config, resolve_threads(threads)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return 1;
        }
    };

    let io_result = match &out {
        Some(path) => emit_csv(&result, config.echo(), path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&result, config.echo(), &mut lock).and_then(|()| lock.flush())
        }
    };
    if let Err(e) = io_result {
        // A downstream reader closing the pipe early (e.g. `| head`) is a
        // normal way to consume partial output, not a failure.
        if out.is_none() && e.kind() == std::io::ErrorKind::BrokenPipe {
            return 0;
        }
        eprintln!("i/o error: {e}");
        return 3;
    }

    let errored = result.errored_rows();
    if errored > 0 {
        eprintln!("{errored} grid point(s) failed; see the error column");
        2
    } else {
        0
    }
}

fn run_check_command() -> u8 {
    let mut failed = false;
    for check in pondera_cli::check::run_all() {
        let status = if check.passed { "ok" } else { "FAILED" };
        println!("check {}: {} ({})", check.name, status, check.detail);
        failed |= !check.passed;
    }
    if failed {
        1
    } else {
        0
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Sweep {
            config,
            out,
            preset,
            threads,
        } => run_sweep_command(config, out, preset, threads),
        Command::Check => run_check_command(),
    };
    ExitCode::from(code)
}
