//! Randomized conformance suites.
//!
//! Trial `t` of a run with base seed `s` uses seed `s + t` (wrapping), so any
//! failing trial can be replayed alone with `--seed <s + t> --trials 1`.
//! Each property draws from its own ChaCha stream, so properties sharing a
//! seed still see independent configurations.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_layernorm_scales, check_lti, check_recursion, check_selective, check_thm3, input_floor_b, lambda_threshold, thm1_margin,
    BoundConstants, Thm3Hypotheses, Thm3Outcome, BOUND_SLACK,
};
use crate::dynamics::{model_forward, model_forward_partial, LayerSpec, ModelSpec};
use crate::error::{Error, Result};
use crate::exec::{par_map, Execution};
use crate::harness::config::Init;
use crate::harness::generate::{gaussian_matrix, random_input, random_mixing, random_unit_input, rng_for, MixingParams};
use crate::linalg::{frobenius_norm, row_normalize, singular_extremes, spectral_norm, symmetric_eigen_extremes, Matrix};
use crate::metrics::{mu, phi};
use crate::mixing::{c_m_upper, selective_mixing, structured_lti_mixing, BlockKind, Decay, MixingSpec};
use crate::oracles::{oracle_vs_simulator, CounterexampleSpec};

/// Depth used by the random recursion-floor trials.
pub const RECURSION_DEPTH: usize = 8;
/// Depth used by the end-to-end lower-bound trials.
pub const END_TO_END_DEPTH: usize = 6;
/// Depth of the selective LayerNorm upper-bound trials.
pub const THM3_DEPTH: usize = 20;
/// Depth of the structured LTI trials.
pub const LTI_DEPTH: usize = 20;
/// Depth of the structured LTI trials with contracting layers.
pub const LTI_CONTRACTION_DEPTH: usize = 10;
/// Depth of the raw selective trials.
pub const SELECTIVE_DEPTH: usize = 12;
/// Depth for the closed-form comparisons.
pub const ORACLE_DEPTH: usize = 30;
/// Tolerance for simulator vs closed form.
pub const ORACLE_TOL: f64 = 1e-10;

// One stream per property.
const S_RECURSION: u64 = 10;
const S_END_TO_END: u64 = 11;
const S_THRESHOLD: u64 = 12;
const S_THM3: u64 = 13;
const S_LTI: u64 = 14;
const S_LTI_CONTRACT: u64 = 15;
const S_SELECTIVE: u64 = 16;
const S_SELECTIVE_DECAY: u64 = 17;
const S_LEMMA1: u64 = 18;
const S_LEMMA2: u64 = 19;
const S_METRICS: u64 = 20;
const S_ORACLE: u64 = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Thm1,
    Thm3,
    Lti,
    Selective,
    Lemmas,
    Oracles,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Oracles,
        Suite::Thm1,
        Suite::Thm3,
        Suite::Lti,
        Suite::Selective,
        Suite::Lemmas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Thm3 => "thm3",
            Suite::Lti => "lti",
            Suite::Selective => "selective",
            Suite::Lemmas => "lemmas",
            Suite::Oracles => "oracles",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown suite '{s}' (expected thm1, thm3, lti, selective, lemmas, oracles or all)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    pub exec: Execution,
    /// Forces the skip strength of the end-to-end lower-bound trials.
    pub inject_lambda: Option<f64>,
}

impl VerifyOptions {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self {
            seed,
            trials,
            exec: Execution::default(),
            inject_lambda: None,
        }
    }
}

/// Result of one randomized trial. `Pass` carries a property-specific
/// statistic (deviation, slack or ratio) for the summary.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass(f64),
    Skip(String),
    Fail(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub suite: Suite,
    pub name: String,
    pub checked: usize,
    pub skipped: usize,
    pub failures: Vec<Failure>,
    /// Largest statistic over passing trials, with its meaning.
    pub max_stat: Option<f64>,
    pub stat_label: String,
    pub notes: Vec<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.properties {
            let status = if p.passed() { "ok  " } else { "FAIL" };
            let _ = write!(
                out,
                "{status} {}/{}: {} checked, {} skipped, {} failed",
                p.suite,
                p.name,
                p.checked,
                p.skipped,
                p.failures.len()
            );
            if let Some(v) = p.max_stat {
                let _ = write!(out, ", {} {}", p.stat_label, fmt_stat(v));
            }
            out.push('\n');
            for n in &p.notes {
                let _ = writeln!(out, "     note: {n}");
            }
            for f in &p.failures {
                let _ = writeln!(out, "     seed {}: {} (replay: --seed {} --trials 1)", f.seed, f.detail, f.seed);
            }
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

fn fmt_stat(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e6 {
        format!("{v}")
    } else if (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn collect(
    suite: Suite,
    name: &str,
    stat_label: &str,
    opts: &VerifyOptions,
    trial: impl Fn(u64) -> Outcome + Sync + Send,
) -> PropertyResult {
    let seeds: Vec<u64> = (0..opts.trials as u64).map(|t| opts.seed.wrapping_add(t)).collect();
    let outcomes = par_map(opts.exec, &seeds, |&s| trial(s));
    let mut res = PropertyResult {
        suite,
        name: name.to_string(),
        checked: 0,
        skipped: 0,
        failures: Vec::new(),
        max_stat: None,
        stat_label: stat_label.to_string(),
        notes: Vec::new(),
    };
    for (seed, o) in seeds.into_iter().zip(outcomes) {
        match o {
            Outcome::Pass(v) => {
                res.checked += 1;
                res.max_stat = Some(res.max_stat.map_or(v, |m: f64| m.max(v)));
            }
            Outcome::Skip(_) => res.skipped += 1,
            Outcome::Fail(detail) => {
                res.checked += 1;
                res.failures.push(Failure { seed, detail });
            }
        }
    }
    res
}

fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(2..=8), rng.random_range(2..=6))
}

fn value_constants(mixings: &[MixingSpec]) -> Result<(f64, f64)> {
    let mut c = f64::INFINITY;
    let mut s = 0.0_f64;
    let mut any = false;
    for m in mixings {
        if let Some(w) = m.value_weight() {
            let (lo, hi) = singular_extremes(w)?;
            c = c.min(lo);
            s = s.max(hi);
            any = true;
        }
    }
    Ok(if any { (c, s) } else { (1.0, 1.0) })
}

fn ln_model(mixings: Vec<MixingSpec>, lambda: f64, n: usize, d: usize) -> ModelSpec {
    ModelSpec::new(mixings.into_iter().map(|m| LayerSpec::new(m, lambda, true)).collect(), n, d)
}

fn fail_on<T>(r: Result<T>) -> std::result::Result<T, Outcome> {
    r.map_err(|e| Outcome::Fail(format!("unexpected error: {e}")))
}

/// One random LayerNorm model, no gating: every layer must respect the
/// one-step recursion floor. `kind` overrides the random block choice.
pub fn recursion_trial(seed: u64, kind: Option<BlockKind>) -> Outcome {
    let mut rng = rng_for(seed, S_RECURSION);
    let kind = kind.unwrap_or_else(|| BlockKind::ALL[rng.random_range(0..4)]);
    let (n, d) = dims(&mut rng);
    let lambda = rng.random_range(-8.0..8.0);
    let params = MixingParams {
        init: Init::Gaussian,
        init_scale: rng.random_range(0.5..2.0),
        tied_bc: false,
    };
    let mut run = || -> std::result::Result<Outcome, Outcome> {
        let mixings: Vec<MixingSpec> = (0..RECURSION_DEPTH)
            .map(|_| random_mixing(&mut rng, kind, n, d, params))
            .collect::<Result<_>>()
            .map_err(|e| Outcome::Fail(e.to_string()))?;
        let (c, s) = fail_on(value_constants(&mixings))?;
        let mean = rng.random_range(0.0..2.0);
        let y0 = random_input(&mut rng, n, d, mean);
        let trace = match model_forward(&y0, &ln_model(mixings, lambda, n, d), false) {
            Ok(t) => t,
            Err(e) => return Ok(Outcome::Skip(format!("degenerate run: {e}"))),
        };
        let k = fail_on(BoundConstants::new(c, s, trace.max_mixing_frob(), n, 0.5))?;
        let check = check_recursion(&trace, lambda, &k);
        Ok(match check.violations.first() {
            None => Outcome::Pass(check.checked as f64),
            Some(&(layer, got, floor)) => Outcome::Fail(format!(
                "{kind} N={n} d={d} lambda={lambda:.4}: mu^2 at layer {} is {got:.6e} < floor {floor:.6e}",
                layer + 1
            )),
        })
    };
    run().unwrap_or_else(|o| o)
}

/// Full lower-bound guarantee: constants fixed a priori, the skip strength
/// chosen so the input clears the floor, then `mu(Y^(k))^2 >= a^k mu(Y^(0))^2`
/// is checked at every layer. `inject` forces the skip strength instead.
pub fn end_to_end_trial(seed: u64, inject: Option<f64>) -> Outcome {
    let mut rng = rng_for(seed, S_END_TO_END);
    let kind = BlockKind::ALL[rng.random_range(0..4)];
    let (n, d) = dims(&mut rng);
    let params = MixingParams {
        init: Init::Orthogonal,
        init_scale: 1.0,
        tied_bc: false,
    };
    let mut run = || -> std::result::Result<Outcome, Outcome> {
        let mixings: Vec<MixingSpec> = (0..END_TO_END_DEPTH)
            .map(|_| random_mixing(&mut rng, kind, n, d, params))
            .collect::<Result<_>>()
            .map_err(|e| Outcome::Fail(e.to_string()))?;
        let (c, s) = fail_on(value_constants(&mixings))?;
        let mut c_m = 0.0_f64;
        for m in &mixings {
            c_m = c_m.max(fail_on(c_m_upper(m, n))?);
        }
        let a = 0.5 * c * c / (s * s);
        let k = fail_on(BoundConstants::new(c, s, c_m, n, a))?;
        let mean = rng.random_range(0.0..1.0);
        let y0 = random_unit_input(&mut rng, n, d, mean);
        let mu0_sq = mu(&y0).powi(2);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };

        let lambda = match inject {
            Some(l) => {
                let margin = thm1_margin(l, &k);
                if !(margin > 0.0) {
                    return Ok(Outcome::Fail(format!(
                        "lambda {l} gives margin {margin:.4e} <= 0, the guarantee does not apply"
                    )));
                }
                let b = fail_on(input_floor_b(l.abs(), &k, END_TO_END_DEPTH))?;
                if b > mu0_sq {
                    return Ok(Outcome::Fail(format!(
                        "lambda {l}: input mu^2 = {mu0_sq:.4e} is below the floor {b:.4e}"
                    )));
                }
                l
            }
            None => {
                let t = fail_on(lambda_threshold(&k))?;
                let mut l = (t * 1.01).max(1.0);
                let mut tries = 0;
                while fail_on(input_floor_b(l, &k, END_TO_END_DEPTH))? > mu0_sq {
                    l *= 2.0;
                    tries += 1;
                    if tries > 200 {
                        return Ok(Outcome::Skip("no lambda clears the input floor".into()));
                    }
                }
                sign * l
            }
        };
        let trace = match model_forward(&y0, &ln_model(mixings, lambda, n, d), false) {
            Ok(t) => t,
            Err(e) => return Ok(Outcome::Skip(format!("degenerate run: {e}"))),
        };
        let mut worst = f64::INFINITY;
        for (j, e) in trace.entries.iter().enumerate() {
            let floor = a.powi(j as i32) * mu0_sq;
            let got = e.metrics.mu.powi(2);
            if got < floor - BOUND_SLACK {
                return Ok(Outcome::Fail(format!(
                    "{kind} N={n} d={d} lambda={lambda:.4}: mu^2 at layer {j} is {got:.6e} < {floor:.6e}"
                )));
            }
            if j > 0 && floor > 0.0 {
                worst = worst.min(got / floor);
            }
        }
        Ok(Outcome::Pass(1.0 / worst))
    };
    run().unwrap_or_else(|o| o)
}

/// The lambda threshold is where the margin changes sign.
pub fn threshold_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_THRESHOLD);
    let c = rng.random_range(0.1..2.0);
    let k = BoundConstants {
        c,
        s: c * rng.random_range(1.0..2.0),
        c_m: rng.random_range(0.01..5.0),
        n: rng.random_range(1..64),
        a: rng.random_range(0.01..0.99),
    };
    let Ok(t) = lambda_threshold(&k) else {
        return Outcome::Skip("infeasible constants".into());
    };
    let delta = 1e-6 * t;
    let below = thm1_margin(t - delta, &k);
    let above = thm1_margin(t + delta, &k);
    if below < 0.0 && above > 0.0 && thm1_margin(-(t + delta), &k) > 0.0 {
        Outcome::Pass(thm1_margin(t, &k).abs())
    } else {
        Outcome::Fail(format!("{k:?}: margin {below:e} below and {above:e} above the threshold {t}"))
    }
}

/// A same-weights selective LayerNorm model with `lambda = 0`, its decay and
/// the extreme eigenvalues of the symmetric part of `W_B W_C^T`.
#[derive(Clone, Debug)]
pub struct SelectiveFamily {
    pub model: ModelSpec,
    pub input: Matrix,
    pub alpha: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Tied weights `W_B = W_C` (std `U(1,3)/sqrt(d)`), decay `U(0.5, 1)`, input
/// Gaussian with mean 2, rows normalized.
pub fn selective_family(rng: &mut ChaCha8Rng, depth: usize) -> Result<SelectiveFamily> {
    let (n, d) = dims(rng);
    let alpha = rng.random_range(0.5..1.0);
    let scale = rng.random_range(1.0..3.0);
    let g = gaussian_matrix(rng, d, d, scale / (d as f64).sqrt());
    let sym = g.matmul(&g.transpose())?;
    let (lambda_min, lambda_max) = symmetric_eigen_extremes(&sym)?;
    let layer = LayerSpec::new(
        MixingSpec::Selective {
            decay: Decay::Uniform(alpha),
            w_b: g.clone(),
            w_c: g,
        },
        0.0,
        true,
    );
    let input = random_unit_input(rng, n, d, 2.0);
    Ok(SelectiveFamily {
        model: ModelSpec::new(vec![layer; depth], n, d),
        input,
        alpha,
        lambda_min,
        lambda_max,
    })
}

/// Outcome of one selective LayerNorm upper-bound trial, with the
/// hypotheses it was evaluated under.
#[derive(Clone, Debug)]
pub struct Thm3Trial {
    pub outcome: Outcome,
    pub hypotheses: Option<Thm3Hypotheses>,
    pub n: usize,
}

pub fn thm3_trial(seed: u64) -> Thm3Trial {
    let mut rng = rng_for(seed, S_THM3);
    let fam = match selective_family(&mut rng, THM3_DEPTH) {
        Ok(f) => f,
        Err(e) => {
            return Thm3Trial {
                outcome: Outcome::Fail(e.to_string()),
                hypotheses: None,
                n: 0,
            }
        }
    };
    let n = fam.model.seq_len;
    let trace = match model_forward(&fam.input, &fam.model, false) {
        Ok(t) => t,
        Err(e) => {
            return Thm3Trial {
                outcome: Outcome::Skip(format!("degenerate run: {e}")),
                hypotheses: None,
                n,
            }
        }
    };
    let phi0 = trace.entries[0].metrics.phi;
    let hyp = Thm3Hypotheses::from_trace(&trace, phi0, fam.lambda_min, fam.lambda_max, fam.alpha, n);
    let outcome = match check_thm3(&trace, &hyp, n) {
        Thm3Outcome::Skipped { unmet } => Outcome::Skip(unmet.join(", ")),
        Thm3Outcome::Checked { violations } => match violations.first() {
            None => Outcome::Pass(
                trace
                    .entries
                    .iter()
                    .enumerate()
                    .map(|(k, e)| e.metrics.mu / ((n as f64).sqrt() * hyp.base.powi(k as i32)))
                    .fold(0.0, f64::max),
            ),
            Some(&(k, got, bound)) => Outcome::Fail(format!(
                "N={n} alpha={:.4} lambda_min={:.4} c={:.4}: mu at layer {k} is {got:.6e} > bound {bound:.6e}",
                hyp.alpha, hyp.lambda_min, hyp.c
            )),
        },
    };
    Thm3Trial {
        outcome,
        hypotheses: Some(hyp),
        n,
    }
}

/// LayerNorm scales in the same family stay above `1/(N lambda_max)`.
pub fn layernorm_scale_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_THM3);
    let fam = match selective_family(&mut rng, THM3_DEPTH) {
        Ok(f) => f,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let n = fam.model.seq_len;
    let trace = match model_forward(&fam.input, &fam.model, false) {
        Ok(t) => t,
        Err(e) => return Outcome::Skip(format!("degenerate run: {e}")),
    };
    let floor = 1.0 / (n as f64 * fam.lambda_max);
    match check_layernorm_scales(&trace, n, fam.lambda_max).first() {
        None => {
            let least = trace.entries.iter().filter_map(|e| e.min_scale).fold(f64::INFINITY, f64::min);
            Outcome::Pass(floor / least)
        }
        Some(&(k, s)) => Outcome::Fail(format!("layer {k}: scale {s:.6e} < 1/(N lambda_max) = {floor:.6e}")),
    }
}

fn structured_stack(rng: &mut ChaCha8Rng, n: usize, d: usize, depth: usize, cap: Option<f64>) -> Result<(Vec<MixingSpec>, Vec<f64>)> {
    let scale = rng.random_range(0.5..2.0);
    let params = MixingParams {
        init: Init::Gaussian,
        init_scale: scale,
        tied_bc: false,
    };
    let mut specs = Vec::with_capacity(depth);
    let mut norms = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut spec = random_mixing(rng, BlockKind::Structured, n, d, params)?;
        let mut norm = spectral_norm(&structured_lti_mixing(&spec, n)?)?;
        if let (Some(cap), MixingSpec::StructuredLti { w_c, .. }) = (cap, &mut spec) {
            if norm > cap {
                *w_c = w_c.scale(cap / norm)?;
                norm = spectral_norm(&structured_lti_mixing(&spec, n)?)?;
            }
        }
        specs.push(spec);
        norms.push(norm);
    }
    Ok((specs, norms))
}

fn plain_model(mixings: Vec<MixingSpec>, n: usize, d: usize) -> ModelSpec {
    ModelSpec::new(mixings.into_iter().map(|m| LayerSpec::new(m, 0.0, false)).collect(), n, d)
}

/// Structured LTI stack without skip or LayerNorm stays under the
/// product-of-norms bound.
pub fn lti_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_LTI);
    let (n, d) = dims(&mut rng);
    let (specs, norms) = match structured_stack(&mut rng, n, d, LTI_DEPTH, None) {
        Ok(x) => x,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mean = rng.random_range(-1.0..1.0);
    let y0 = random_input(&mut rng, n, d, mean);
    let run = model_forward_partial(&y0, &plain_model(specs, n, d), false);
    if let Some(e) = run.error.as_ref().filter(|e| !e.is_overflow()) {
        return Outcome::Fail(format!("unexpected error: {e}"));
    }
    match check_lti(&run.trace, &norms).first() {
        None => Outcome::Pass(run.trace.len() as f64 - 1.0),
        Some(&(k, got, bound)) => Outcome::Fail(format!("N={n} d={d}: mu at layer {k} is {got:.6e} > {bound:.6e}")),
    }
}

/// With every layer norm at most 0.5 the depth-10 bound is below
/// `9.8e-4 ||Y^(0)||_F`, and the simulation respects it.
pub fn lti_contraction_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_LTI_CONTRACT);
    let (n, d) = dims(&mut rng);
    let (specs, norms) = match structured_stack(&mut rng, n, d, LTI_CONTRACTION_DEPTH, Some(0.5)) {
        Ok(x) => x,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mean = rng.random_range(-1.0..1.0);
    let y0 = random_input(&mut rng, n, d, mean);
    let y0_frob = frobenius_norm(&y0);
    let bound = crate::bounds::lti_upper(&norms, y0_frob);
    if norms.iter().any(|&w| w > 0.5 + 1e-12) || bound > y0_frob * 9.8e-4 {
        return Outcome::Fail(format!("bound {bound:.6e} exceeds 9.8e-4 * {y0_frob:.6e}"));
    }
    let trace = match model_forward(&y0, &plain_model(specs, n, d), false) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(format!("unexpected error: {e}")),
    };
    match check_lti(&trace, &norms).first() {
        None => Outcome::Pass(bound / y0_frob),
        Some(&(k, got, b)) => Outcome::Fail(format!("mu at layer {k} is {got:.6e} > {b:.6e}")),
    }
}

fn selective_layer(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> (MixingSpec, f64) {
    let alpha = rng.random_range(0.5..1.0);
    let std = scale / (d as f64).sqrt();
    let w_b = gaussian_matrix(rng, d, d, std);
    let w_c = gaussian_matrix(rng, d, d, std);
    let wbc = frobenius_norm(&w_c.matmul(&w_b.transpose()).expect("square"));
    (
        MixingSpec::Selective {
            decay: Decay::Uniform(alpha),
            w_b,
            w_c,
        },
        wbc,
    )
}

/// Raw selective stack (same weights every layer, no skip, no LayerNorm)
/// against the norm and `mu` bounds, up to overflow.
pub fn selective_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_SELECTIVE);
    let (n, d) = dims(&mut rng);
    let scale = rng.random_range(0.2..2.0);
    let (spec, wbc) = selective_layer(&mut rng, d, scale);
    let x = random_input(&mut rng, n, d, 0.0);
    let target = rng.random_range(0.5..2.0);
    let y0 = x.scale(target / frobenius_norm(&x)).expect("finite");
    let model = ModelSpec::new(vec![LayerSpec::new(spec, 0.0, false); SELECTIVE_DEPTH], n, d);
    let run = model_forward_partial(&y0, &model, false);
    if let Some(e) = run.error.as_ref().filter(|e| !e.is_overflow()) {
        return Outcome::Fail(format!("unexpected error: {e}"));
    }
    let check = check_selective(&run.trace, n, wbc);
    match check.violations.first() {
        None => Outcome::Pass(check.checked as f64),
        Some((k, which)) => Outcome::Fail(format!("N={n} d={d} scale={scale:.3}: {which} bound broken at layer {k}")),
    }
}

/// With `sqrt(N) ||W_C W_B^T||_F <= 0.8` and `||Y^(0)||_F <= 0.9`,
/// `ln ||Y^(k+1)|| <= 3 ln ||Y^(k)||` while the norm stays above 1e-90.
pub fn selective_decay_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_SELECTIVE_DECAY);
    let (n, d) = dims(&mut rng);
    let (spec, wbc) = selective_layer(&mut rng, d, 1.0);
    let s_target = rng.random_range(0.3..0.8);
    let factor = (s_target / ((n as f64).sqrt() * wbc)).sqrt();
    let MixingSpec::Selective { decay, w_b, w_c } = spec else {
        unreachable!()
    };
    let spec = MixingSpec::Selective {
        decay,
        w_b: w_b.scale(factor).expect("finite"),
        w_c: w_c.scale(factor).expect("finite"),
    };
    let x = random_input(&mut rng, n, d, 0.0);
    let y0 = x.scale(rng.random_range(0.3..0.9) / frobenius_norm(&x)).expect("finite");
    let model = ModelSpec::new(vec![LayerSpec::new(spec, 0.0, false); SELECTIVE_DEPTH], n, d);
    let trace = match model_forward(&y0, &model, false) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(format!("unexpected error: {e}")),
    };
    let norms: Vec<f64> = trace.entries.iter().map(|e| e.metrics.y_frob).collect();
    let mut steps = 0;
    let mut worst = f64::NEG_INFINITY;
    for (k, w) in norms.windows(2).enumerate() {
        if !(w[0] > 1e-90) || w[1] == 0.0 {
            break;
        }
        let (now, next) = (w[0].ln(), w[1].ln());
        if next > 3.0 * now + 1e-9 {
            return Outcome::Fail(format!("layer {}: ln norm {next:.6} > 3 * {now:.6}", k + 1));
        }
        worst = worst.max(next - 3.0 * now);
        steps += 1;
    }
    if steps < 2 {
        return Outcome::Fail(format!("only {steps} layers above 1e-90"));
    }
    Outcome::Pass(worst)
}

/// `sigma_min(B) ||A||_F <= ||AB||_F <= sigma_max(B) ||A||_F` for square `B`.
pub fn product_bound_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_LEMMA1);
    let (r, m) = dims(&mut rng);
    let (sa, sb) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
    let a = gaussian_matrix(&mut rng, r, m, sa);
    let b = gaussian_matrix(&mut rng, m, m, sb);
    let (lo, hi) = match singular_extremes(&b) {
        Ok(x) => x,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let ab = frobenius_norm(&a.matmul(&b).expect("conforming"));
    let fa = frobenius_norm(&a);
    let slack = 1e-9 * ab.max(1e-300);
    if ab < lo * fa - slack || ab > hi * fa + slack {
        Outcome::Fail(format!("||AB|| = {ab:e} outside [{:e}, {:e}]", lo * fa, hi * fa))
    } else {
        Outcome::Pass((ab - lo * fa).min(hi * fa - ab))
    }
}

/// Entry floor `M_ij >= lambda_min phi alpha^N` on nonnegative weights and
/// nonnegative unit-row inputs.
pub fn entry_floor_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_LEMMA2);
    let (n, d) = dims(&mut rng);
    let alpha = rng.random_range(0.5..1.0);
    let g = Matrix::from_fn(d, d, |_, _| rng.random_range(0.0..1.0)).expect("finite");
    let raw = Matrix::from_fn(n, d, |_, _| rng.random_range(0.01..1.0)).expect("finite");
    let y = row_normalize(&raw).expect("positive rows");
    let sym = g.matmul(&g.transpose()).expect("square");
    let (lambda_min, _) = match symmetric_eigen_extremes(&sym) {
        Ok(x) => x,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    if !(lambda_min > 0.0) {
        return Outcome::Skip("lambda_min is not positive".into());
    }
    let spec = MixingSpec::Selective {
        decay: Decay::Uniform(alpha),
        w_b: g.clone(),
        w_c: g,
    };
    let m = selective_mixing(&y, &spec).expect("conforming");
    let floor = lambda_min * phi(&y) * alpha.powi(n as i32);
    for j in 0..n {
        for i in 0..=j {
            if m.get(j, i) < floor - 1e-12 {
                return Outcome::Fail(format!("M[{j},{i}] = {:e} < {floor:e}", m.get(j, i)));
            }
        }
    }
    Outcome::Pass(floor)
}

/// Pairwise-distance identities for `mu` and `phi` on unit rows.
pub fn metric_identity_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_METRICS);
    let (n, d) = dims(&mut rng);
    let mean = rng.random_range(-1.0..1.0);
    let y = random_unit_input(&mut rng, n, d, mean);
    let dist = |i: usize, j: usize| -> f64 { y.row(i).iter().zip(y.row(j)).map(|(a, b)| (a - b).powi(2)).sum() };
    let mut total = 0.0;
    let mut widest = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            total += dist(i, j);
            widest = widest.max(dist(i, j) / 2.0);
        }
    }
    let gap = (mu(&y).powi(2) - total / (2.0 * n as f64)).abs();
    if gap > 1e-9 {
        return Outcome::Fail(format!("mu^2 differs from the pairwise form by {gap:e}"));
    }
    if 1.0 - phi(&y) < widest - 1e-12 {
        return Outcome::Fail(format!("1 - phi = {} < {widest}", 1.0 - phi(&y)));
    }
    Outcome::Pass(gap)
}

/// The closed forms used as fixed reference points.
pub fn fixed_oracle_cases() -> Vec<CounterexampleSpec> {
    vec![
        CounterexampleSpec::sys1(1.0),
        CounterexampleSpec::sys1(0.0),
        CounterexampleSpec::sys1(-3.0),
        CounterexampleSpec::sys2(0.0, 1.0, 1.0),
        CounterexampleSpec::sys2(-3.0, 1.0, 1.0),
    ]
}

fn oracle_outcome(spec: &CounterexampleSpec) -> Outcome {
    match oracle_vs_simulator(spec, ORACLE_DEPTH) {
        Ok(dev) if dev < ORACLE_TOL => Outcome::Pass(dev),
        Ok(dev) => Outcome::Fail(format!("{spec:?}: deviation {dev:e}")),
        Err(e) => Outcome::Fail(format!("{spec:?}: {e}")),
    }
}

/// Random system, skip strength and (for system 2) initial row.
pub fn oracle_trial(seed: u64) -> Outcome {
    let mut rng = rng_for(seed, S_ORACLE);
    let lambda = loop {
        let l: f64 = rng.random_range(-6.0..4.0);
        if (1.0 + l).abs() > 0.05 {
            break l;
        }
    };
    let spec = if rng.random_bool(0.5) {
        CounterexampleSpec::sys1(lambda)
    } else {
        CounterexampleSpec::sys2(lambda, rng.random_range(0.1..3.0), rng.random_range(-3.0..3.0))
    };
    oracle_outcome(&spec)
}

fn fixed(suite: Suite, name: &str, stat_label: &str, outcomes: Vec<(u64, Outcome)>) -> PropertyResult {
    let mut res = PropertyResult {
        suite,
        name: name.into(),
        checked: 0,
        skipped: 0,
        failures: Vec::new(),
        max_stat: None,
        stat_label: stat_label.into(),
        notes: Vec::new(),
    };
    for (seed, o) in outcomes {
        match o {
            Outcome::Pass(v) => {
                res.checked += 1;
                res.max_stat = Some(res.max_stat.map_or(v, |m: f64| m.max(v)));
            }
            Outcome::Skip(_) => res.skipped += 1,
            Outcome::Fail(detail) => {
                res.checked += 1;
                res.failures.push(Failure { seed, detail });
            }
        }
    }
    res
}

fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<PropertyResult> {
    match suite {
        Suite::Oracles => {
            let cases = fixed_oracle_cases();
            let outcomes = par_map(opts.exec, &cases, oracle_outcome);
            vec![
                fixed(
                    suite,
                    "closed forms at reference points",
                    "max deviation",
                    outcomes.into_iter().map(|o| (opts.seed, o)).collect(),
                ),
                collect(suite, "closed forms at random points", "max deviation", opts, oracle_trial),
            ]
        }
        Suite::Thm1 => {
            let inject = opts.inject_lambda;
            vec![
                collect(suite, "recursion floor", "max layers checked", opts, |s| recursion_trial(s, None)),
                collect(suite, "end-to-end lower bound", "max floor/actual", opts, move |s| {
                    end_to_end_trial(s, inject)
                }),
                collect(suite, "threshold sign change", "|margin at threshold|", opts, threshold_trial),
            ]
        }
        Suite::Thm3 => {
            let seeds: Vec<u64> = (0..opts.trials as u64).map(|t| opts.seed.wrapping_add(t)).collect();
            let trials = par_map(opts.exec, &seeds, |&s| thm3_trial(s));
            let inverse_n = trials
                .iter()
                .filter_map(|t| t.hypotheses.as_ref().map(|h| h.lambda_max_within_inverse_n(t.n)))
                .filter(|&b| b)
                .count();
            let mut res = fixed(
                suite,
                "selective layernorm upper bound",
                "max mu/bound",
                seeds.into_iter().zip(trials.into_iter().map(|t| t.outcome)).collect(),
            );
            res.notes
                .push(format!("{inverse_n} of {} models also had lambda_max <= 1/N", opts.trials));
            vec![res]
        }
        Suite::Lti => vec![
            collect(suite, "product-of-norms bound", "max layers checked", opts, lti_trial),
            collect(suite, "contracting layers", "max bound/||Y0||", opts, lti_contraction_trial),
        ],
        Suite::Selective => vec![
            collect(suite, "norm and mu bounds", "max layers checked", opts, selective_trial),
            collect(suite, "doubly exponential decay", "max ln-gap", opts, selective_decay_trial),
        ],
        Suite::Lemmas => vec![
            collect(suite, "product norm bounds", "max slack", opts, product_bound_trial),
            collect(suite, "mixing entry floor", "max floor", opts, entry_floor_trial),
            collect(suite, "layernorm scale floor", "max floor/scale", opts, layernorm_scale_trial),
            collect(suite, "metric identities", "max gap", opts, metric_identity_trial),
        ],
        Suite::All => Suite::EACH.iter().flat_map(|&s| run_suite(s, opts)).collect(),
    }
}

pub fn run_verify(suite: Suite, opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if let Some(l) = opts.inject_lambda.filter(|l| !l.is_finite()) {
        return Err(Error::InvalidParameter(format!("injected lambda must be finite, got {l}")));
    }
    Ok(VerifyReport {
        properties: run_suite(suite, opts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("thm2".parse::<Suite>().is_err());
    }

    #[test]
    fn zero_trials_is_rejected() {
        assert!(run_verify(Suite::Lti, &VerifyOptions::new(0, 0)).is_err());
    }

    #[test]
    fn injected_infeasible_lambda_fails_with_seed() {
        let opts = VerifyOptions {
            inject_lambda: Some(0.01),
            ..VerifyOptions::new(40, 3)
        };
        let report = run_verify(Suite::Thm1, &opts).unwrap();
        assert!(!report.passed());
        let p = report.property("end-to-end lower bound").unwrap();
        assert_eq!(p.failures.iter().map(|f| f.seed).collect::<Vec<_>>(), vec![40, 41, 42]);
        assert!(report.to_text().contains("replay: --seed 41 --trials 1"));
    }

    #[test]
    fn replay_reproduces_a_trial() {
        let all = run_verify(Suite::Lemmas, &VerifyOptions::new(100, 4)).unwrap();
        let one = run_verify(Suite::Lemmas, &VerifyOptions::new(103, 1)).unwrap();
        assert!(all.passed() && one.passed());
        assert_eq!(metric_identity_trial(103), metric_identity_trial(103));
    }

    #[test]
    fn modes_give_identical_reports() {
        let mut opts = VerifyOptions::new(5, 6);
        opts.exec = Execution::Sequential;
        let a = run_verify(Suite::Oracles, &opts).unwrap();
        opts.exec = Execution::Parallel;
        let b = run_verify(Suite::Oracles, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
    }
}
