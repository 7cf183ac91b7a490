//! Skip-strength sweeps and the gating/LayerNorm ablation, emitted as CSV.

use std::fmt;
use std::io::{Read, Write};

use crate::dynamics::{model_forward_partial, RankTrace, OVERFLOW_LIMIT};
use crate::error::{Error, Result};
use crate::exec::{par_map, Execution};
use crate::harness::config::RunConfig;
use crate::harness::generate::{assemble, config_input, random_gates, random_mixings};
use crate::mixing::BlockKind;

pub const CSV_HEADER: [&str; 9] = ["run_id", "seed", "block", "layer", "lambda", "mu", "normalized_mu", "phi", "y_frob"];

/// Token written in place of a metric once the run has overflowed.
pub const OVERFLOW_TOKEN: &str = "overflow";

/// A metric value, or the overflow marker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Value(f64),
    Overflow,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Overflow => None,
        }
    }

    /// A metric that left the representable range (for example `phi` of
    /// rows with huge norms) is flagged even when the state itself is finite.
    pub fn metric(v: f64) -> Self {
        if v.is_finite() && v.abs() <= OVERFLOW_LIMIT {
            Cell::Value(v)
        } else {
            Cell::Overflow
        }
    }

    pub fn is_overflow(self) -> bool {
        matches!(self, Cell::Overflow)
    }

    fn parse(s: &str) -> Result<Self> {
        if s == OVERFLOW_TOKEN {
            return Ok(Cell::Overflow);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Cell::Value)
            .ok_or_else(|| Error::Parse(format!("'{s}' is neither a finite number nor '{OVERFLOW_TOKEN}'")))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // shortest exact round-trip; switches to exponent form for tiny or huge values
            Cell::Value(v) => write!(f, "{v:?}"),
            Cell::Overflow => f.write_str(OVERFLOW_TOKEN),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub run_id: String,
    pub seed: u64,
    pub block: BlockKind,
    pub layer: usize,
    pub lambda: f64,
    pub mu: Cell,
    pub normalized_mu: Cell,
    pub phi: Cell,
    pub y_frob: Cell,
}

impl SweepRow {
    pub fn overflowed(&self) -> bool {
        [self.mu, self.normalized_mu, self.phi, self.y_frob].iter().any(|c| c.is_overflow())
    }
}

/// One run of the model; its rows are contiguous in the output.
#[derive(Clone, Debug, PartialEq)]
struct RunCell {
    run_id: String,
    lambda: f64,
    layernorm: bool,
    gating: bool,
}

/// Expands a (possibly truncated) trace to `K + 1` rows, filling the layers
/// after an overflow with the overflow token.
pub fn trace_rows(run_id: &str, seed: u64, block: BlockKind, lambda: f64, trace: &RankTrace, k_layers: usize) -> Vec<SweepRow> {
    (0..=k_layers)
        .map(|k| {
            let (mu, nmu, phi, fro) = match trace.entries.get(k) {
                Some(e) => {
                    let m = e.metrics;
                    (
                        Cell::metric(m.mu),
                        Cell::metric(m.normalized_mu),
                        Cell::metric(m.phi),
                        Cell::metric(m.y_frob),
                    )
                }
                None => (Cell::Overflow, Cell::Overflow, Cell::Overflow, Cell::Overflow),
            };
            SweepRow {
                run_id: run_id.to_string(),
                seed,
                block,
                layer: k,
                lambda,
                mu,
                normalized_mu: nmu,
                phi,
                y_frob: fro,
            }
        })
        .collect()
}

fn run_cells(cfg: &RunConfig, cells: &[RunCell], exec: Execution) -> Result<Vec<SweepRow>> {
    let mixings = random_mixings(cfg)?;
    let gates = if cells.iter().any(|c| c.gating) {
        Some(random_gates(cfg)?)
    } else {
        None
    };
    let input = config_input(cfg);
    let per_cell = par_map(exec, cells, |cell| -> Result<Vec<SweepRow>> {
        let model = assemble(
            &mixings,
            if cell.gating { gates.as_deref() } else { None },
            cell.lambda,
            cell.layernorm,
            cfg.n,
            cfg.d,
        );
        let run = model_forward_partial(&input, &model, false);
        match run.error {
            Some(e) if !e.is_overflow() => Err(e),
            _ => Ok(trace_rows(&cell.run_id, cfg.seed, cfg.block, cell.lambda, &run.trace, cfg.k_layers)),
        }
    });
    let mut rows = Vec::new();
    for r in per_cell {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn lambda_run_id(lambda: f64) -> String {
    format!("lambda={lambda}")
}

/// One run per skip strength, all sharing the same weights and input.
pub fn run_lambda_sweep(cfg: &RunConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    cfg.validate_for_sweep()?;
    let cells: Vec<RunCell> = cfg
        .lambda_list
        .iter()
        .map(|&lambda| RunCell {
            run_id: lambda_run_id(lambda),
            lambda,
            layernorm: cfg.layernorm,
            gating: cfg.gating,
        })
        .collect();
    run_cells(cfg, &cells, exec)
}

pub fn ablation_run_id(gating: bool, layernorm: bool) -> String {
    let on = |b: bool| if b { "on" } else { "off" };
    format!("gating-{}_ln-{}", on(gating), on(layernorm))
}

/// The four gating x LayerNorm cells for every skip strength in the config.
pub fn run_ablation(cfg: &RunConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    cfg.validate_for_sweep()?;
    if cfg.block != BlockKind::Selective {
        return Err(Error::InvalidParameter(format!(
            "the ablation needs the selective block, got {}",
            cfg.block
        )));
    }
    let mut cells = Vec::new();
    for &lambda in &cfg.lambda_list {
        for gating in [false, true] {
            for layernorm in [true, false] {
                cells.push(RunCell {
                    run_id: ablation_run_id(gating, layernorm),
                    lambda,
                    layernorm,
                    gating,
                });
            }
        }
    }
    run_cells(cfg, &cells, exec)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.run_id.clone(),
            r.seed.to_string(),
            r.block.to_string(),
            r.layer.to_string(),
            r.lambda.to_string(),
            r.mu.to_string(),
            r.normalized_mu.to_string(),
            r.phi.to_string(),
            r.y_frob.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, what: &str| Error::Parse(format!("bad {what} '{s}'"));
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = |i: usize| rec.get(i).unwrap_or_default();
            Ok(SweepRow {
                run_id: f(0).to_string(),
                seed: f(1).parse().map_err(|_| num(f(1), "seed"))?,
                block: f(2).parse()?,
                layer: f(3).parse().map_err(|_| num(f(3), "layer"))?,
                lambda: f(4).parse().map_err(|_| num(f(4), "lambda"))?,
                mu: Cell::parse(f(5))?,
                normalized_mu: Cell::parse(f(6))?,
                phi: Cell::parse(f(7))?,
                y_frob: Cell::parse(f(8))?,
            })
        })
        .collect()
}

/// Final-layer row of each run, in output order.
pub fn final_rows(rows: &[SweepRow]) -> Vec<&SweepRow> {
    let mut out: Vec<&SweepRow> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last) if last.run_id == r.run_id && last.lambda == r.lambda => *last = r,
            _ => out.push(r),
        }
    }
    out
}
