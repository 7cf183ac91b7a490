//! One layer is `Y = D (M(Y_prev) + lambda I) Y_prev C_V`, optionally with a
//! SiLU gate on the mixing output and with `D` either the identity or the
//! row normalizer. A model is a stack of such layers.

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, row_normalize, row_normalize_with_scales, Matrix};
use crate::metrics::MetricSample;
use crate::mixing::{apply_gating, mixing_matrix, MixingSpec};

/// Entries larger than this in magnitude are treated as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e308;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub mixing: MixingSpec,
    pub lambda: f64,
    pub use_layernorm: bool,
    /// `d x d` weight for the SiLU gate; `None` disables gating.
    pub gate_weight: Option<Matrix>,
}

impl LayerSpec {
    pub fn new(mixing: MixingSpec, lambda: f64, use_layernorm: bool) -> Self {
        Self {
            mixing,
            lambda,
            use_layernorm,
            gate_weight: None,
        }
    }

    pub fn with_gate(mut self, w: Matrix) -> Self {
        self.gate_weight = Some(w);
        self
    }

    pub fn uses_gating(&self) -> bool {
        self.gate_weight.is_some()
    }

    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {}", self.lambda)));
        }
        self.mixing.validate(n, d)?;
        match &self.gate_weight {
            Some(w) if w.shape() != (d, d) => Err(Error::shape(
                "gate weight",
                format!("{d}x{d}"),
                format!("{}x{}", w.rows(), w.cols()),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub seq_len: usize,
    pub embed_dim: usize,
    /// Row-normalize the input when any layer uses LayerNorm.
    pub normalize_input: bool,
}

impl ModelSpec {
    pub fn new(layers: Vec<LayerSpec>, seq_len: usize, embed_dim: usize) -> Self {
        Self {
            layers,
            seq_len,
            embed_dim,
            normalize_input: true,
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn uses_layernorm(&self) -> bool {
        self.layers.iter().any(|l| l.use_layernorm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.embed_dim == 0 {
            return Err(Error::InvalidParameter("seq_len and embed_dim must be positive".into()));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            layer.validate(self.seq_len, self.embed_dim).map_err(|e| Error::Layer {
                layer: k + 1,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }
}

/// Everything a single layer computed on the way to its output.
#[derive(Clone, Debug)]
pub struct LayerOutput {
    pub y: Matrix,
    pub mixing: Matrix,
    /// LayerNorm scales `D_ii`, when LayerNorm is on.
    pub scales: Option<Vec<f64>>,
}

fn check_overflow(m: &Matrix) -> Result<()> {
    if m.max_abs() > OVERFLOW_LIMIT {
        Err(Error::NonFinite { op: "layer_forward" })
    } else {
        Ok(())
    }
}

pub fn layer_forward_detailed(y_prev: &Matrix, layer: &LayerSpec) -> Result<LayerOutput> {
    let (n, d) = y_prev.shape();
    layer.validate(n, d)?;
    let mixing = mixing_matrix(y_prev, &layer.mixing)?;
    let mut o = mixing.matmul(y_prev)?;
    if let Some(c_v) = layer.mixing.value_weight() {
        o = o.matmul(c_v)?;
    }
    if let Some(w) = &layer.gate_weight {
        o = apply_gating(&o, y_prev, w)?;
    }
    let skip = y_prev.scale(layer.lambda)?.add(&o)?;
    let (y, scales) = if layer.use_layernorm {
        let (y, s) = row_normalize_with_scales(&skip)?;
        (y, Some(s))
    } else {
        (skip, None)
    };
    check_overflow(&y)?;
    Ok(LayerOutput { y, mixing, scales })
}

pub fn layer_forward(y_prev: &Matrix, layer: &LayerSpec) -> Result<Matrix> {
    layer_forward_detailed(y_prev, layer).map(|out| out.y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub metrics: MetricSample,
    pub snapshot: Option<Matrix>,
    /// `||M||_F` of the layer that produced this entry (absent for the input).
    pub mixing_frob: Option<f64>,
    /// Smallest row sum of that layer's `M`.
    pub min_row_sum: Option<f64>,
    /// Smallest LayerNorm scale of that layer, when LayerNorm is on.
    pub min_scale: Option<f64>,
}

/// Metrics for `Y^(0), ..., Y^(K)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RankTrace {
    pub entries: Vec<TraceEntry>,
}

impl RankTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mu(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.metrics.mu).collect()
    }

    pub fn normalized_mu(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.metrics.normalized_mu).collect()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    pub fn snapshots(&self) -> impl Iterator<Item = Option<&Matrix>> + '_ {
        self.entries.iter().map(|e| e.snapshot.as_ref())
    }

    /// Largest `||M^(k)||_F` over the recorded layers.
    pub fn max_mixing_frob(&self) -> f64 {
        self.entries.iter().filter_map(|e| e.mixing_frob).fold(0.0, f64::max)
    }
}

/// Result of a run that may stop early: the trace up to the last good layer
/// and the error that stopped it, if any.
#[derive(Debug)]
pub struct PartialRun {
    pub trace: RankTrace,
    pub error: Option<Error>,
}

fn entry(y: &Matrix, out: Option<&LayerOutput>, snapshot: bool) -> TraceEntry {
    TraceEntry {
        metrics: MetricSample::of(y),
        snapshot: snapshot.then(|| y.clone()),
        mixing_frob: out.map(|o| frobenius_norm(&o.mixing)),
        min_row_sum: out.map(|o| o.mixing.row_sums().into_iter().fold(f64::INFINITY, f64::min)),
        min_scale: out
            .and_then(|o| o.scales.as_ref())
            .map(|s| s.iter().copied().fold(f64::INFINITY, f64::min)),
    }
}

/// Runs the stack, keeping whatever was computed before a failure.
pub fn model_forward_partial(y0: &Matrix, model: &ModelSpec, record_snapshots: bool) -> PartialRun {
    let mut trace = RankTrace::default();
    let wrap = |layer: usize, e: Error| Error::Layer {
        layer,
        source: Box::new(e),
    };
    if y0.shape() != (model.seq_len, model.embed_dim) {
        let e = Error::shape(
            "model_forward",
            format!("{}x{}", model.seq_len, model.embed_dim),
            format!("{}x{}", y0.rows(), y0.cols()),
        );
        return PartialRun { trace, error: Some(e) };
    }
    if let Err(e) = model.validate() {
        return PartialRun { trace, error: Some(e) };
    }
    let mut y = if model.normalize_input && model.uses_layernorm() {
        match row_normalize(y0) {
            Ok(y) => y,
            Err(e) => {
                return PartialRun {
                    trace,
                    error: Some(wrap(0, e)),
                }
            }
        }
    } else {
        y0.clone()
    };
    trace.entries.push(entry(&y, None, record_snapshots));
    for (k, layer) in model.layers.iter().enumerate() {
        match layer_forward_detailed(&y, layer) {
            Ok(out) => {
                trace.entries.push(entry(&out.y, Some(&out), record_snapshots));
                y = out.y;
            }
            Err(e) => {
                return PartialRun {
                    trace,
                    error: Some(wrap(k + 1, e)),
                }
            }
        }
    }
    PartialRun { trace, error: None }
}

pub fn model_forward(y0: &Matrix, model: &ModelSpec, record_snapshots: bool) -> Result<RankTrace> {
    let run = model_forward_partial(y0, model, record_snapshots);
    match run.error {
        Some(e) => Err(e),
        None => Ok(run.trace),
    }
}
