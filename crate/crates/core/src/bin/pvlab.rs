use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use pvlab::config::{ConfigError, ExperimentConfig, ExperimentKind};
use pvlab::runner::{run, RunError, Table, SCHEMA_VERSION};
use pvlab::suite::{run_suite, suite_table};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "pvlab", version, about = "Spectral experiments for perturbed lattice walks")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `out` or `out/<command>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; for `suite` also the number of criteria run at once.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the kernel and potential for consistency.
    Validate,
    /// Evaluate the scaled Green function.
    Green,
    /// Birman–Schwinger scan and certificates.
    Bs,
    /// Truncated spectra over a sequence of boxes.
    Spectrum,
    /// Essential spectrum prediction and accumulation.
    Essential,
    /// Exponential decay certificate and eigenfunction fits.
    Decay,
    /// Finite-horizon Gibbs marginals and partition growth.
    Gibbs,
    /// Doob-transformed Markov chain.
    Doob,
    /// Feynman–Kac semigroup against Monte Carlo.
    Fk,
    /// Run a named acceptance suite.
    Suite {
        #[arg(default_value = pvlab::suite::SUITE_NAME)]
        name: String,
    },
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Validate => ExperimentKind::Validate,
            Command::Green => ExperimentKind::Green,
            Command::Bs => ExperimentKind::Bs,
            Command::Spectrum => ExperimentKind::Spectrum,
            Command::Essential => ExperimentKind::Essential,
            Command::Decay => ExperimentKind::Decay,
            Command::Gibbs => ExperimentKind::Gibbs,
            Command::Doob => ExperimentKind::Doob,
            Command::Fk => ExperimentKind::Fk,
            Command::Suite { .. } => return None,
        })
    }
}

/// Writes through a temporary sibling so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

fn csv_bytes(table: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn write_tables(dir: &Path, tables: &[Table]) -> Result<(), String> {
    for t in tables {
        let bytes = csv_bytes(t).map_err(|e| e.to_string())?;
        write_atomic(&dir.join(format!("{}.csv", t.name)), &bytes).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(|e| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_toml_str("[kernel]\npreset = \"simple1d\"\n")?,
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = Some(seed);
    }
    Ok(cfg)
}

fn prepare_dir(dir: &Path) -> Result<(), ExitCode> {
    fs::create_dir_all(dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", dir.display());
        ExitCode::from(EXIT_IO)
    })
}

fn run_experiment(cli: &Cli, kind: ExperimentKind) -> ExitCode {
    let cfg = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config invalid: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(kind.as_str()));
    let outcome = match run(&cfg, kind) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("config invalid: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(RunError::Module { module, message }) => {
            eprintln!("experiment failed in module {module}: {message}");
            return ExitCode::from(EXIT_FAILED);
        }
    };
    if let Err(code) = prepare_dir(&dir) {
        return code;
    }
    let mut written = write_tables(&dir, &outcome.tables)
        .and_then(|_| write_json(&dir.join("summary.json"), &outcome.summary_document()));
    if let (Ok(()), Some((stem, lines))) = (&written, &outcome.jsonl) {
        let mut text = lines.join("\n");
        text.push('\n');
        written = write_atomic(&dir.join(format!("{stem}.jsonl")), text.as_bytes())
            .map_err(|e| e.to_string());
    }
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    for t in &outcome.tables {
        println!("wrote {}", dir.join(format!("{}.csv", t.name)).display());
    }
    match outcome.first_failure() {
        Some(check) => {
            eprintln!(
                "experiment failed: invariant `{}` in module {}: {}",
                check.invariant, check.module, check.detail
            );
            ExitCode::from(EXIT_FAILED)
        }
        None => ExitCode::SUCCESS,
    }
}

fn run_named_suite(cli: &Cli, name: &str) -> ExitCode {
    let workers = cli.threads.unwrap_or(1);
    let results = match run_suite(name, workers) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config invalid: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name));
    if let Err(code) = prepare_dir(&dir) {
        return code;
    }
    let mut written = Ok(());
    for r in &results {
        println!("{}", r.line());
        let doc = json!({ "schema_version": SCHEMA_VERSION, "criterion": r });
        written = written.and_then(|_| write_json(&dir.join(format!("criterion_{:02}.json", r.id)), &doc));
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "suite": name,
        "passed": failed.is_empty(),
        "failed": failed,
        "criteria": results,
    });
    written = written
        .and_then(|_| write_tables(&dir, &[suite_table(&results)]))
        .and_then(|_| write_json(&dir.join("summary.json"), &summary));
    if let Err(e) = written {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(EXIT_IO);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("suite {name}: criteria {failed:?} failed");
        ExitCode::from(EXIT_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match (&cli.command, cli.command.kind()) {
        (Command::Suite { name }, _) => run_named_suite(&cli, name),
        (_, Some(kind)) => run_experiment(&cli, kind),
        (_, None) => unreachable!("every experiment command has a kind"),
    }
}
