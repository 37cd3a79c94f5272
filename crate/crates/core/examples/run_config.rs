//! Run an experiment described by a TOML file, as the command line does.
//!
//! `cargo run --example run_config -- configs/spectrum.toml`

use std::path::PathBuf;

use pvlab::config::ExperimentConfig;
use pvlab::runner::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/spectrum.toml"));
    let cfg = ExperimentConfig::load(&path)?;
    let kind = cfg.kind.ok_or("config does not declare `kind`")?;
    let outcome = run(&cfg, kind)?;
    for table in &outcome.tables {
        println!("{}", table.header.join(","));
        for row in &table.rows {
            println!("{}", row.join(","));
        }
    }
    for check in &outcome.checks {
        println!("[{}] {} ({}): {}", if check.passed { "ok" } else { "FAILED" }, check.invariant, check.module, check.detail);
    }
    Ok(())
}
