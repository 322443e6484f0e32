use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nmpc_harness::config::ScenarioConfig;
use nmpc_harness::sim::{emit_outputs, run_episode_with};

#[derive(Parser)]
#[command(
    name = "nmpc",
    about = "Cart-pendulum nonlinear MPC: closed-loop simulation harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop episode from a scenario config.
    Run {
        /// Scenario config file (flat `key = value` text).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `out_dir`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Simulate exactly this many control ticks instead of the
        /// configured episode length.
        #[arg(long)]
        ticks: Option<usize>,
        /// Per-tick progress on stdout plus CSV dumps of every
        /// linearization and QP subproblem under `<out>/debug`.
        #[arg(long)]
        verbose: bool,
    },
    /// Run one episode per value of a swept config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Config key to sweep, e.g. `horizon` or `q_diag`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; `q_diag`-style list keys use `;` between
        /// sweep points instead.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the built-in invariant suite.
    Check,
}

fn main() -> ExitCode {
    // die quietly when stdout is a closed pipe (e.g. `nmpc run ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().command {
        Command::Run {
            config,
            out_dir,
            ticks,
            verbose,
        } => run(config, out_dir, ticks, verbose),
        Command::Sweep {
            config,
            param,
            values,
            out_dir,
        } => sweep(config, param, values, out_dir),
        Command::Check => {
            if nmpc_harness::selfcheck::run_selfcheck() {
                println!("all checks passed");
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(
    config: PathBuf,
    out_dir: Option<PathBuf>,
    ticks: Option<usize>,
    verbose: bool,
) -> ExitCode {
    let mut cfg = match ScenarioConfig::from_file(&config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(dir) = out_dir {
        cfg.out_dir = dir;
    }
    if let Some(n) = ticks {
        cfg.episode_length = n as f64 * cfg.dt;
    }
    let out = cfg.out_dir.clone();
    let debug_dir = verbose.then(|| out.join("debug"));
    let log = match run_episode_with(&cfg, debug_dir.as_deref()) {
        Ok(log) => log,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if verbose {
        for row in &log.rows {
            println!(
                "t={:7.3}  p={:+8.4}  theta={:+8.4}  F={:+9.4}  V={:12.5e}  sqp={:2}  qp={:3}  {:6.2} ms  {}",
                row.time,
                row.cart_pos,
                row.pend_angle,
                row.force,
                row.cost,
                row.sqp_iters,
                row.qp_iters,
                row.solve_ms,
                row.status
            );
        }
    }
    if let Err(e) = emit_outputs(&log, &cfg, &out) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let summary = log.summary();
    println!(
        "{} ticks  terminal_error={}  avg_solve={:.3} ms  max_solve={:.3} ms  violations>{:.0e}: {}",
        log.rows.len(),
        summary
            .terminal_error
            .map(|e| format!("{e:.6}"))
            .unwrap_or_else(|| "n/a".into()),
        summary.avg_solve_ms.unwrap_or(f64::NAN),
        summary.max_solve_ms.unwrap_or(f64::NAN),
        nmpc_harness::sim::VIOLATION_SLACK,
        summary.constraint_violations_count,
    );
    if log.diverged {
        eprintln!("error: plant diverged; partial log written to {}", out.display());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn sweep(config: PathBuf, param: String, values: String, out_dir: Option<PathBuf>) -> ExitCode {
    let separator = if values.contains(';') { ';' } else { ',' };
    let base_out = out_dir.unwrap_or_else(|| PathBuf::from("out/sweep"));
    let mut results = Vec::new();
    let mut failed = false;
    for value in values.split(separator).map(str::trim).filter(|v| !v.is_empty()) {
        let overrides = vec![(param.clone(), value.to_string())];
        let cfg = match ScenarioConfig::from_file_with_overrides(&config, &overrides) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {param} = {value}: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        };
        let slug: String = value
            .chars()
            .map(|c| if c.is_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect();
        let point_dir = base_out.join(format!("{param}_{slug}"));
        let log = match run_episode_with(&cfg, None) {
            Ok(log) => log,
            Err(e) => {
                eprintln!("error: {param} = {value}: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        };
        if let Err(e) = emit_outputs(&log, &cfg, &point_dir) {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
        let summary = log.summary();
        println!(
            "{param} = {value}: terminal_error={:?} diverged={}",
            summary.terminal_error, log.diverged
        );
        failed |= log.diverged;
        results.push(serde_json::json!({
            "value": value,
            "terminal_error": summary.terminal_error,
            "avg_solve_ms": summary.avg_solve_ms,
            "constraint_violations_count": summary.constraint_violations_count,
            "diverged": log.diverged,
        }));
    }
    let index = serde_json::json!({ "param": param, "points": results });
    let path = base_out.join("sweep.json");
    if let Err(e) = std::fs::create_dir_all(&base_out)
        .and_then(|()| std::fs::write(&path, serde_json::to_string_pretty(&index).unwrap()))
    {
        eprintln!("error: {}: {e}", path.display());
        return ExitCode::from(2);
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
