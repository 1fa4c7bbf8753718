//! Batch front-end: parse an experiment config, dispatch to the library,
//! and write reproducible artifacts (CSV series, JSON summary, run manifest).
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure
//! (non-invertible map, contour pole), 4 internal invariant violation
//! (a solver produced an invalid state).

mod config;
mod output;
mod runner;

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "oqdyn", version, about = "Open quantum system dynamics runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory for all artifacts.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the config's solver seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; when absent, RAYON_NUM_THREADS (or the core
        /// count) applies. Results do not depend on this value.
        #[arg(long)]
        threads: Option<usize>,
        /// Validate the config and exit without computing.
        #[arg(long)]
        validate_only: bool,
    },
    /// Schema and model-invariant diagnostics (no computation).
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            seed,
            threads,
            validate_only,
        } => run(&config, &out, seed, threads, validate_only),
        Command::Validate { config } => validate(&config),
    }
}

fn load(path: &Path) -> Result<(config::ExperimentConfig, Vec<u8>), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg = config::parse_config(&bytes)?;
    Ok((cfg, bytes))
}

fn validate(path: &Path) -> ExitCode {
    let (cfg, _) = match load(path) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let diags = config::diagnostics(&cfg);
    if diags.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        for d in &diags {
            println!("{d}");
        }
        ExitCode::from(2)
    }
}

fn run(
    path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    validate_only: bool,
) -> ExitCode {
    if validate_only {
        return validate(path);
    }
    let (mut cfg, bytes) = match load(path) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let diags = config::diagnostics(&cfg);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("config error: {d}");
        }
        return ExitCode::from(2);
    }
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    if let Some(n) = threads {
        // ignore failure when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let artifacts = match runner::execute(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };

    let mut outputs = Vec::new();
    if let Some(series) = &artifacts.series {
        let path = out_dir.join(&cfg.output.series);
        if let Err(e) = output::atomic_write(&path, series.render().as_bytes()) {
            eprintln!("cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
        outputs.push(cfg.output.series.clone());
    }
    let summary_path = out_dir.join(&cfg.output.summary);
    let summary_text = serde_json::to_string_pretty(&artifacts.summary).expect("summary is valid JSON");
    if let Err(e) = output::atomic_write(&summary_path, summary_text.as_bytes()) {
        eprintln!("cannot write {}: {e}", summary_path.display());
        return ExitCode::from(2);
    }
    outputs.push(cfg.output.summary.clone());

    let manifest = json!({
        "config_sha256": output::sha256_hex(&bytes),
        "kind": artifacts.summary.get("kind"),
        "seed": cfg.solver.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "outputs": outputs,
    });
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest is valid JSON");
    if let Err(e) = output::atomic_write(&out_dir.join("run_manifest.json"), manifest_text.as_bytes()) {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
