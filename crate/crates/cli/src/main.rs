//! `loqc`: run named experiments and write JSON or CSV reports.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use loqc_core::elements::ElementDescriptor;
use loqc_core::experiment::{run, ExperimentConfig, ExperimentName, OutputFormat, RunMode};
use loqc_core::fock::PureState;
use loqc_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "loqc", version, about = "Linear-optical gadget experiments")]
struct Args {
    /// b2g, g2a, a2c, cz, pipeline, pid-chain, verify or run-circuit.
    #[arg(long)]
    experiment: String,

    /// enumerate or sample.
    #[arg(long, default_value = "enumerate")]
    mode: String,

    /// Number of draws in sample mode.
    #[arg(long)]
    samples: Option<u64>,

    /// Generator seed in sample mode.
    #[arg(long)]
    seed: Option<u64>,

    /// Input state as JSON.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Element list as JSON, for run-circuit.
    #[arg(long, value_name = "FILE")]
    circuit: Option<PathBuf>,

    /// Chain length for pid-chain.
    #[arg(long)]
    depth: Option<usize>,

    /// Report path; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// json or csv.
    #[arg(long, default_value = "json")]
    format: String,

    /// Include the successful output states in the report.
    #[arg(long)]
    emit_states: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn config(args: &Args) -> Result<(ExperimentConfig, OutputFormat), Error> {
    let mut cfg = ExperimentConfig::new(args.experiment.parse()?);
    cfg.mode = args.mode.parse::<RunMode>()?;
    cfg.samples = args.samples;
    cfg.seed = args.seed;
    cfg.depth = args.depth;
    cfg.emit_states = args.emit_states;
    if let Some(p) = &args.input {
        cfg.input = Some(read_json::<PureState>(p)?);
    }
    if let Some(p) = &args.circuit {
        cfg.circuit = Some(read_json::<Vec<ElementDescriptor>>(p)?);
    }
    Ok((cfg, args.format.parse()?))
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Io(_) => ExitCode::from(EXIT_IO),
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (cfg, format) = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let start = Instant::now();
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    let text = match report.render(format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_IO);
            }
        }
        None => print!("{text}"),
    }
    for t in report.tables.iter().flatten() {
        let verdict = if t.passed() { "PASS" } else { "FAIL" };
        eprintln!(
            "table {}: {verdict} (max deviation {:.3e})",
            t.table_id,
            t.max_deviation()
        );
        for r in t.rows.iter().filter(|r| !r.matched) {
            eprintln!("  mismatch {}: deviation {:.3e}", r.name, r.deviation);
        }
    }
    if cfg.experiment == ExperimentName::Verify && !report.verified() {
        return ExitCode::from(EXIT_MISMATCH);
    }
    ExitCode::SUCCESS
}
