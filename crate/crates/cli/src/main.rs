//! Command-line front end: sweeps, ablations, bound reports,
//! counterexamples and randomized verification suites.
//!
//! Exit status is 0 on success, 1 when a verification assertion fails and 2
//! for invalid configuration or any other error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rank_collapse::bounds::BoundConstants;
use rank_collapse::exec::Execution;
use rank_collapse::harness::config::{parse_lambda_list, Init, RunConfig};
use rank_collapse::harness::report::{run_bound_report, run_counterexample, write_report};
use rank_collapse::harness::sweep::{final_rows, run_ablation, run_lambda_sweep, write_csv, SweepRow};
use rank_collapse::harness::verify::{run_verify, Suite, VerifyOptions};
use rank_collapse::mixing::BlockKind;
use rank_collapse::oracles::{CounterexampleSpec, System};

#[derive(Parser)]
#[command(name = "rank-collapse", version, about = "Rank collapse simulator and bound checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-layer metrics for each skip strength in the list.
    Sweep(RunArgs),
    /// The gating x LayerNorm grid for a selective stack.
    Ablate(RunArgs),
    /// Feasibility margins, threshold, input floor and envelope.
    Bounds(BoundsArgs),
    /// Closed form vs simulation for the two-token counterexamples.
    Counterexample(CounterexampleArgs),
    /// Randomized property suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with run settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    seq_len: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated skip strengths, e.g. `-5,0,0.5`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    block: Option<String>,
    #[arg(long, value_enum)]
    layernorm: Option<Switch>,
    #[arg(long, value_enum)]
    gating: Option<Switch>,
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    init_scale: Option<f64>,
    /// Constant added to every input entry.
    #[arg(long, allow_hyphen_values = true)]
    input_mean: Option<f64>,
    /// Draw independent `W_B` and `W_C` for selective blocks.
    #[arg(long)]
    untied: bool,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run cells one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// Lower bound on the value-map singular values.
    #[arg(long, default_value_t = 1.0)]
    sigma_min: f64,
    /// Upper bound on the value-map singular values.
    #[arg(long, default_value_t = 1.0)]
    sigma_max: f64,
    /// Upper bound on the mixing-matrix Frobenius norm.
    #[arg(long, default_value_t = 2.0)]
    c_m: f64,
    #[arg(long, default_value_t = 16)]
    seq_len: usize,
    /// Per-layer collapse rate `a`.
    #[arg(long, default_value_t = 0.25)]
    collapse_rate: f64,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, default_value_t = 64)]
    layers: usize,
    /// Text report path; the JSON twin goes next to it. Stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// `sys1` or `sys2`.
    #[arg(long, default_value = "sys1")]
    system: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    lambda: f64,
    /// First row of the system 2 input is `(alpha0, beta0)`.
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 50)]
    layers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Force the skip strength of the end-to-end lower-bound trials.
    #[arg(long, allow_hyphen_values = true)]
    inject_lambda: Option<f64>,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Assertion,
    Config(String),
}

impl From<rank_collapse::Error> for Failure {
    fn from(e: rank_collapse::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn exec_mode(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn run_config(args: &RunArgs, default_lambdas: Option<Vec<f64>>) -> Result<RunConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_json_file(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?,
        None => RunConfig {
            lambda_list: default_lambdas.unwrap_or_else(|| RunConfig::default().lambda_list),
            ..RunConfig::default()
        },
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.layers {
        cfg.k_layers = v;
    }
    if let Some(v) = args.seq_len {
        cfg.n = v;
    }
    if let Some(v) = args.dim {
        cfg.d = v;
    }
    if let Some(v) = &args.lambda {
        cfg.lambda_list = parse_lambda_list(v)?;
    }
    if let Some(v) = &args.block {
        cfg.block = v.parse::<BlockKind>()?;
    }
    if let Some(v) = args.layernorm {
        cfg.layernorm = v.into();
    }
    if let Some(v) = args.gating {
        cfg.gating = v.into();
    }
    if let Some(v) = &args.init {
        cfg.init = v.parse::<Init>()?;
    }
    if let Some(v) = args.init_scale {
        cfg.init_scale = v;
    }
    if let Some(v) = args.input_mean {
        cfg.input_mean = v;
    }
    if args.untied {
        cfg.tied_bc = false;
    }
    if let Some(v) = &args.out {
        cfg.output_path = Some(v.clone());
    }
    cfg.validate_for_sweep()?;
    Ok(cfg)
}

fn emit_csv(rows: &[SweepRow], out: Option<&Path>) -> CliResult {
    match out {
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            write_csv(rows, std::io::BufWriter::new(file))?;
        }
        None => write_csv(rows, std::io::stdout().lock())?,
    }
    Ok(())
}

/// Sibling path with `suffix` appended to the file stem.
fn with_stem_suffix(p: &Path, suffix: &str) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    p.with_file_name(format!("{stem}{suffix}{ext}"))
}

fn overflow_notes(rows: &[SweepRow]) {
    let mut seen: Vec<&str> = Vec::new();
    for r in rows.iter().filter(|r| r.overflowed()) {
        if !seen.contains(&r.run_id.as_str()) {
            seen.push(&r.run_id);
            eprintln!("{}: overflow from layer {}", r.run_id, r.layer);
        }
    }
}

fn sweep(args: RunArgs) -> CliResult {
    let cfg = run_config(&args, None)?;
    let rows = run_lambda_sweep(&cfg, exec_mode(args.sequential))?;
    emit_csv(&rows, cfg.output_path.as_deref())?;
    if let Some(p) = &cfg.output_path {
        let finals: Vec<SweepRow> = final_rows(&rows).into_iter().cloned().collect();
        emit_csv(&finals, Some(&with_stem_suffix(p, "_final")))?;
    }
    overflow_notes(&rows);
    Ok(())
}

fn ablate(args: RunArgs) -> CliResult {
    let cfg = run_config(&args, Some(vec![1.0]))?;
    let rows = run_ablation(&cfg, exec_mode(args.sequential))?;
    emit_csv(&rows, cfg.output_path.as_deref())?;
    overflow_notes(&rows);
    Ok(())
}

fn emit_report<T: serde::Serialize>(out: Option<&Path>, text: &str, value: &T) -> CliResult {
    match out {
        Some(p) => {
            write_report(p, text, value)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn bounds(args: BoundsArgs) -> CliResult {
    let constants = BoundConstants::new(args.sigma_min, args.sigma_max, args.c_m, args.seq_len, args.collapse_rate)?;
    let lambdas = match &args.lambda {
        Some(s) => parse_lambda_list(s)?,
        None => Vec::new(),
    };
    let report = run_bound_report(constants, &lambdas, args.layers)?;
    emit_report(args.out.as_deref(), &report.to_text(), &report)
}

fn counterexample(args: CounterexampleArgs) -> CliResult {
    let spec = match args.system.parse::<System>()? {
        System::Sys1 => CounterexampleSpec::sys1(args.lambda),
        System::Sys2 => CounterexampleSpec::sys2(args.lambda, args.alpha0, args.beta0),
    };
    let report = run_counterexample(&spec, args.layers)?;
    emit_report(args.out.as_deref(), &report.to_text(), &report)
}

fn verify(args: VerifyArgs) -> CliResult {
    let suite = args.suite.parse::<Suite>()?;
    let opts = VerifyOptions {
        seed: args.seed,
        trials: args.trials,
        exec: exec_mode(args.sequential),
        inject_lambda: args.inject_lambda,
    };
    let report = run_verify(suite, &opts)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(p) = &args.out {
        write_report(p, &text, &report)?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Ablate(a) => ablate(a),
        Command::Bounds(a) => bounds(a),
        Command::Counterexample(a) => counterexample(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
