//! Closed-form rank-collapse bounds and checkers that hold simulated traces
//! against them.
//!
//! Lower bounds (skip strength large enough keeps `mu` away from zero):
//! [`thm1_margin`], [`lambda_threshold`], [`input_floor_b`],
//! [`recursion_floor`]. Upper bounds (collapse happens): [`thm3_upper`],
//! [`lti_upper`], [`selective_upper`].

use serde::{Deserialize, Serialize};

use crate::dynamics::RankTrace;
use crate::error::{Error, Result};

/// Slack allowed when comparing a simulated quantity against a bound.
pub const BOUND_SLACK: f64 = 1e-9;

/// Constants entering the lower bound: `c = inf sigma_min(C_V)`,
/// `s = sup sigma_max(C_V)`, `c_m = sup ||M||_F`, sequence length `n` and
/// collapse rate `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c: f64,
    pub s: f64,
    pub c_m: f64,
    pub n: usize,
    pub a: f64,
}

impl BoundConstants {
    pub fn new(c: f64, s: f64, c_m: f64, n: usize, a: f64) -> Result<Self> {
        let k = Self { c, s, c_m, n, a };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.c >= 0.0 && self.c <= self.s && self.s.is_finite()) {
            return bad(format!("need 0 <= c <= s, got c = {}, s = {}", self.c, self.s));
        }
        if !(self.c_m >= 0.0 && self.c_m.is_finite()) {
            return bad(format!("c_m must be finite and nonnegative, got {}", self.c_m));
        }
        if !(self.a > 0.0 && self.a <= 1.0) {
            return bad(format!("collapse rate must lie in (0, 1], got {}", self.a));
        }
        Ok(())
    }

    /// `c^2 - a s^2`; no lambda can satisfy the condition unless it is positive.
    pub fn feasibility_gap(&self) -> f64 {
        self.c * self.c - self.a * self.s * self.s
    }
}

/// `lambda^2 c^2 - a s^2 (c_m + |lambda|)^2`. The guarantee needs this to be
/// strictly positive.
pub fn thm1_margin(lambda: f64, k: &BoundConstants) -> f64 {
    let l = lambda.abs();
    l * l * k.c * k.c - k.a * k.s * k.s * (k.c_m + l).powi(2)
}

/// Smallest `|lambda|` for which [`thm1_margin`] turns positive.
pub fn lambda_threshold(k: &BoundConstants) -> Result<f64> {
    let gap = k.feasibility_gap();
    if !(gap > 0.0) {
        return Err(Error::Infeasible { gap });
    }
    let s2 = k.s * k.s;
    let root = (k.a * k.c * k.c * k.c_m * k.c_m * s2).sqrt();
    Ok((k.a * k.c_m * s2 + root) / gap)
}

/// The smallest `mu(Y^(0))^2` for which the `K`-layer guarantee applies.
///
/// The numerator keeps the sign of `lambda`, so a negative skip strength
/// returns a negative value.
pub fn input_floor_b(lambda: f64, k: &BoundConstants, big_k: usize) -> Result<f64> {
    let margin = thm1_margin(lambda, k);
    if !(margin > 0.0) {
        return Err(Error::MarginNotPositive { margin });
    }
    let n = k.n as f64;
    let per_layer = 2.0 * lambda * n * k.s * k.s * k.c_m / margin;
    Ok(per_layer / k.a.powi(big_k as i32))
}

/// One-layer lower bound on `mu(Y^(k+1))^2` given `mu(Y^(k))^2`, for a
/// LayerNorm layer without gating.
///
/// The cross term uses `|lambda|`: with the signed value the bound fails for
/// negative `lambda` (see [`recursion_floor_signed`]).
pub fn recursion_floor(mu_sq_prev: f64, lambda: f64, k: &BoundConstants) -> f64 {
    let l = lambda.abs();
    let n = k.n as f64;
    let s2 = k.s * k.s;
    let den = s2 * (k.c_m + l).powi(2);
    if den == 0.0 {
        return 0.0;
    }
    (l * l * k.c * k.c * mu_sq_prev - 2.0 * l * n * s2 * k.c_m) / den
}

/// [`recursion_floor`] with the cross term taken at signed `lambda`.
/// Identical for `lambda >= 0`; not a valid bound for `lambda < 0`.
pub fn recursion_floor_signed(mu_sq_prev: f64, lambda: f64, k: &BoundConstants) -> f64 {
    let n = k.n as f64;
    let s2 = k.s * k.s;
    let den = s2 * (k.c_m + lambda.abs()).powi(2);
    if den == 0.0 {
        return 0.0;
    }
    (lambda * lambda * k.c * k.c * mu_sq_prev - 2.0 * lambda * n * s2 * k.c_m) / den
}

/// Base of the selective LayerNorm decay, `1 - c^2 lambda_min^2 alpha^(2N)`.
pub fn thm3_base(n: usize, c: f64, lambda_min: f64, alpha: f64) -> f64 {
    1.0 - c * c * lambda_min * lambda_min * alpha.powi(2 * n as i32)
}

/// `sqrt(N) (1 - c^2 lambda_min^2 alpha^(2N))^K`.
pub fn thm3_upper(n: usize, c: f64, lambda_min: f64, alpha: f64, big_k: usize) -> Result<f64> {
    let base = thm3_base(n, c, lambda_min, alpha);
    if !(base > 0.0 && base < 1.0) {
        return Err(Error::BaseOutOfRange { base });
    }
    Ok((n as f64).sqrt() * base.powi(big_k as i32))
}

/// `prod_k ||W^(k)|| * ||Y^(0)||_F`.
pub fn lti_upper(layer_norms: &[f64], y0_frob: f64) -> f64 {
    layer_norms.iter().product::<f64>() * y0_frob
}

/// Natural logs of the two selective bounds. With `s = sqrt(N) wbc_frob`:
/// `||Y^(k)||_F <= s^((3^k - 1)/2) y0^(3^k)` and
/// `mu(Y^(k)) <= s^((3^(k-1) + 1)/2) y0^(3^k)`.
///
/// Logs keep the comparison meaningful long after the bounds themselves
/// leave the `f64` range.
pub fn selective_upper_ln(n: usize, wbc_frob: f64, y0_frob: f64, k: usize) -> (f64, f64) {
    let ln_s = ((n as f64).sqrt() * wbc_frob).ln();
    let ln_y = y0_frob.ln();
    let p = 3f64.powi(k as i32);
    let norm_exp = (p - 1.0) / 2.0;
    let mu_exp = (p / 3.0 + 1.0) / 2.0;
    (term(norm_exp, ln_s) + p * ln_y, term(mu_exp, ln_s) + p * ln_y)
}

// 0 * ln(0) is taken as 0 so that s = 0 with a zero exponent gives s^0 = 1.
fn term(exp: f64, ln_base: f64) -> f64 {
    if exp == 0.0 {
        0.0
    } else {
        exp * ln_base
    }
}

/// `(norm_bound, mu_bound)`; either may be `+inf` once it leaves the `f64`
/// range. `mu_bound` is only meaningful for `k >= 1`.
pub fn selective_upper(n: usize, wbc_frob: f64, y0_frob: f64, k: usize) -> (f64, f64) {
    let (a, b) = selective_upper_ln(n, wbc_frob, y0_frob, k);
    (a.exp(), b.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaLine {
    pub lambda: f64,
    pub margin: f64,
    pub condition_holds: bool,
    /// Absent when the margin is not positive.
    pub input_floor_b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub constants: BoundConstants,
    pub layers: usize,
    pub feasibility_gap: f64,
    /// Absent iff `c^2 - a s^2 <= 0`.
    pub lambda_threshold: Option<f64>,
    pub lambdas: Vec<LambdaLine>,
    /// `a^k` for `k = 0..=K`; the guarantee is `mu(Y^(k))^2 >= a^k mu(Y^(0))^2`.
    pub envelope: Vec<f64>,
}

impl BoundReport {
    pub fn new(constants: BoundConstants, lambdas: &[f64], big_k: usize) -> Self {
        let lines = lambdas
            .iter()
            .map(|&lambda| {
                let margin = thm1_margin(lambda, &constants);
                LambdaLine {
                    lambda,
                    margin,
                    condition_holds: margin > 0.0,
                    input_floor_b: input_floor_b(lambda, &constants, big_k).ok(),
                }
            })
            .collect();
        Self {
            constants,
            layers: big_k,
            feasibility_gap: constants.feasibility_gap(),
            lambda_threshold: lambda_threshold(&constants).ok(),
            lambdas: lines,
            envelope: (0..=big_k).map(|k| constants.a.powi(k as i32)).collect(),
        }
    }

    pub fn envelope_end(&self) -> f64 {
        *self.envelope.last().expect("envelope has K + 1 entries")
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let k = &self.constants;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "constants: c = {}, s = {}, c_m = {}, n = {}, a = {}",
            k.c, k.s, k.c_m, k.n, k.a
        );
        let _ = writeln!(out, "layers: {}", self.layers);
        match self.lambda_threshold {
            Some(t) => {
                let _ = writeln!(out, "lambda_threshold: {t:.9}");
            }
            None => {
                let _ = writeln!(out, "lambda_threshold: Infeasible (c^2 - a*s^2 = {})", self.feasibility_gap);
            }
        }
        for line in &self.lambdas {
            let floor = line.input_floor_b.map_or_else(|| "n/a".to_string(), |b| format!("{b:.6}"));
            let _ = writeln!(
                out,
                "lambda = {}: margin = {:.6}, condition {}, input_floor_b = {}",
                line.lambda,
                line.margin,
                if line.condition_holds { "holds" } else { "fails" },
                floor
            );
        }
        let _ = writeln!(out, "envelope a^K = {:.6}", self.envelope_end());
        out
    }
}

/// Outcome of comparing a trace against the one-layer recursion floor.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub checked: usize,
    /// `(k, mu(Y^(k+1))^2, floor)` for each layer that broke the bound.
    pub violations: Vec<(usize, f64, f64)>,
}

impl RecursionCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_recursion(trace: &RankTrace, lambda: f64, k: &BoundConstants) -> RecursionCheck {
    check_recursion_with(trace, lambda, k, recursion_floor)
}

pub fn check_recursion_with(
    trace: &RankTrace,
    lambda: f64,
    k: &BoundConstants,
    floor: impl Fn(f64, f64, &BoundConstants) -> f64,
) -> RecursionCheck {
    let mut out = RecursionCheck::default();
    for (i, w) in trace.entries.windows(2).enumerate() {
        let prev = w[0].metrics.mu.powi(2);
        let next = w[1].metrics.mu.powi(2);
        let f = floor(prev, lambda, k);
        out.checked += 1;
        if next < f - BOUND_SLACK {
            out.violations.push((i, next, f));
        }
    }
    out
}

/// Trace-level hypotheses of the selective LayerNorm upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm3Hypotheses {
    pub phi0: f64,
    pub c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub alpha: f64,
    pub min_row_sum: f64,
    pub base: f64,
}

impl Thm3Hypotheses {
    pub fn from_trace(trace: &RankTrace, c: f64, lambda_min: f64, lambda_max: f64, alpha: f64, n: usize) -> Self {
        let min_row_sum = trace.entries.iter().filter_map(|e| e.min_row_sum).fold(f64::INFINITY, f64::min);
        Self {
            phi0: trace.entries.first().map_or(f64::NAN, |e| e.metrics.phi),
            c,
            lambda_min,
            lambda_max,
            alpha,
            min_row_sum,
            base: thm3_base(n, c, lambda_min, alpha),
        }
    }

    /// Failed hypotheses, by name. Empty means the bound applies.
    pub fn unmet(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !(self.c > 0.0 && self.c <= self.phi0 && self.phi0 < 1.0) {
            out.push("c <= phi0 < 1");
        }
        if !(self.lambda_min > 0.0) {
            out.push("lambda_min > 0");
        }
        if !(self.alpha <= 1.0) {
            out.push("alpha <= 1");
        }
        if !(self.min_row_sum >= 1.0) {
            out.push("row sums >= 1");
        }
        if !(self.base > 0.0 && self.base < 1.0) {
            out.push("base in (0, 1)");
        }
        out
    }

    /// The derivation additionally relies on `lambda_max <= 1/N`, which cannot
    /// hold together with unit row sums when `N >= 2`. Reported only.
    pub fn lambda_max_within_inverse_n(&self, n: usize) -> bool {
        self.lambda_max <= 1.0 / n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Thm3Outcome {
    Skipped { unmet: Vec<String> },
    Checked { violations: Vec<(usize, f64, f64)> },
}

pub fn check_thm3(trace: &RankTrace, hyp: &Thm3Hypotheses, n: usize) -> Thm3Outcome {
    let unmet = hyp.unmet();
    if !unmet.is_empty() {
        return Thm3Outcome::Skipped {
            unmet: unmet.into_iter().map(String::from).collect(),
        };
    }
    let violations = trace
        .entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| {
            let bound = (n as f64).sqrt() * hyp.base.powi(k as i32);
            (e.metrics.mu > bound + BOUND_SLACK).then_some((k, e.metrics.mu, bound))
        })
        .collect();
    Thm3Outcome::Checked { violations }
}

/// Layers whose LayerNorm scales fall below `1/(N lambda_max)`.
pub fn check_layernorm_scales(trace: &RankTrace, n: usize, lambda_max: f64) -> Vec<(usize, f64)> {
    let floor = 1.0 / (n as f64 * lambda_max);
    trace
        .entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| e.min_scale.filter(|&s| s < floor - 1e-12).map(|s| (k, s)))
        .collect()
}

/// Layers where `mu(Y^(k))` exceeds the product-of-norms bound.
pub fn check_lti(trace: &RankTrace, layer_norms: &[f64]) -> Vec<(usize, f64, f64)> {
    let y0 = trace.entries.first().map_or(0.0, |e| e.metrics.y_frob);
    trace
        .entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| {
            let bound = lti_upper(&layer_norms[..k], y0);
            (e.metrics.mu > bound + BOUND_SLACK).then_some((k, e.metrics.mu, bound))
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectiveCheck {
    pub checked: usize,
    /// `(k, which)` with `which` either "norm" or "mu".
    pub violations: Vec<(usize, String)>,
}

/// Compares a no-skip, no-LayerNorm selective trace against both bounds in
/// log space, skipping layers where the simulated value is exactly zero.
pub fn check_selective(trace: &RankTrace, n: usize, wbc_frob: f64) -> SelectiveCheck {
    let mut out = SelectiveCheck::default();
    let Some(first) = trace.entries.first() else { return out };
    let y0 = first.metrics.y_frob;
    let tol = |ln_bound: f64| ln_bound.abs() * 1e-12 + 1e-9;
    for (k, e) in trace.entries.iter().enumerate() {
        let (ln_norm, ln_mu) = selective_upper_ln(n, wbc_frob, y0, k);
        out.checked += 1;
        if e.metrics.y_frob > 0.0 {
            let got = e.metrics.y_frob.ln();
            if got > ln_norm + tol(ln_norm) && e.metrics.y_frob > ln_norm.exp() + BOUND_SLACK {
                out.violations.push((k, "norm".into()));
            }
        }
        if k >= 1 && e.metrics.mu > 0.0 {
            let got = e.metrics.mu.ln();
            if got > ln_mu + tol(ln_mu) && e.metrics.mu > ln_mu.exp() + BOUND_SLACK {
                out.violations.push((k, "mu".into()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(c: f64, s: f64, c_m: f64, n: usize, a: f64) -> BoundConstants {
        BoundConstants::new(c, s, c_m, n, a).unwrap()
    }

    #[test]
    fn margin_examples() {
        let base = k(1.0, 1.0, 2.0, 4, 0.25);
        assert!((thm1_margin(3.0, &base) - 2.75).abs() < 1e-12);
        assert!(thm1_margin(2.0, &base).abs() < 1e-12);
        let tight = k(1.0, 1.0, 0.5, 4, 1.0);
        for l in [-100.0, -1.0, 0.0, 0.3, 7.0, 1e6] {
            assert!(thm1_margin(l, &tight) < 0.0);
        }
    }

    #[test]
    fn threshold_examples() {
        let t = lambda_threshold(&k(1.0, 1.0, 2.0, 4, 0.25)).unwrap();
        assert!((t - 2.0).abs() < 1e-12);

        let kk = k(2.0, 2.0, 1.0, 4, 0.5);
        let kk = BoundConstants { s: 1.0, ..kk };
        let t = lambda_threshold(&kk).unwrap();
        let oracle = (0.5 + 2.0 * 0.5f64.sqrt()) / 3.5;
        assert!((t - oracle).abs() < 1e-12);
        assert!((t - 0.54692).abs() < 1e-5);
        assert!(thm1_margin(t, &kk).abs() < 1e-5);

        assert!(matches!(lambda_threshold(&k(1.0, 1.0, 2.0, 4, 1.0)), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn floor_examples() {
        let base = k(1.0, 1.0, 2.0, 4, 0.25);
        assert!((input_floor_b(3.0, &base, 1).unwrap() - 69.81818).abs() < 1e-5);
        assert!((input_floor_b(3.0, &base, 0).unwrap() - 17.45455).abs() < 1e-5);
        assert!((input_floor_b(-3.0, &base, 1).unwrap() + 69.81818).abs() < 1e-5);
        assert!(matches!(input_floor_b(2.0, &base, 1), Err(Error::MarginNotPositive { .. })));
    }

    #[test]
    fn recursion_examples() {
        let base = k(1.0, 1.0, 2.0, 4, 0.25);
        assert_eq!(recursion_floor(5.0, 0.0, &base), 0.0);
        let b = 4.0 * 48.0 / 2.75;
        let next = recursion_floor(b, 3.0, &base);
        assert!((next - 23.21455).abs() < 1e-5);
        assert!(next >= 0.25 * b);
        assert!((recursion_floor(4.0, 3.0, &base) + 0.48).abs() < 1e-12);
    }

    #[test]
    fn signed_floor_differs_only_below_zero() {
        let base = k(0.8, 1.3, 2.0, 5, 0.5);
        assert_eq!(recursion_floor(3.0, 2.5, &base), recursion_floor_signed(3.0, 2.5, &base));
        assert!(recursion_floor_signed(3.0, -2.5, &base) > recursion_floor(3.0, -2.5, &base));
    }

    #[test]
    fn thm3_examples() {
        assert!((thm3_upper(4, 0.5, 1.0, 0.9, 0).unwrap() - 2.0).abs() < 1e-12);
        let got = thm3_upper(2, 0.5, 1.0, 0.9, 10).unwrap();
        let oracle = 2f64.sqrt() * (1.0 - 0.25 * 0.6561f64).powi(10);
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 0.23571).abs() < 1e-4);
        assert!(matches!(thm3_upper(2, 1.0, 1.0, 1.0, 3), Err(Error::BaseOutOfRange { .. })));
        assert!(matches!(thm3_upper(2, 0.5, 0.0, 1.0, 3), Err(Error::BaseOutOfRange { .. })));
    }

    // Two tokens at 60 degrees, A = 1.9 I, no decay. Every listed hypothesis
    // holds yet one layer leaves mu far above the bound: the bound is not
    // invariant under rescaling A while LayerNorm makes the dynamics so.
    #[test]
    fn selective_layernorm_bound_fails_for_large_lambda_min() {
        use crate::dynamics::{model_forward, LayerSpec, ModelSpec};
        use crate::linalg::Matrix;
        use crate::mixing::{Decay, MixingSpec};

        let g = Matrix::identity(2).scale(1.9f64.sqrt()).unwrap();
        let layer = LayerSpec::new(
            MixingSpec::Selective {
                decay: Decay::Uniform(1.0),
                w_b: g.clone(),
                w_c: g,
            },
            0.0,
            true,
        );
        let y0 = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let trace = model_forward(&y0, &ModelSpec::new(vec![layer], 2, 2), false).unwrap();
        let hyp = Thm3Hypotheses::from_trace(&trace, 0.5, 1.9, 1.9, 1.0, 2);
        assert!(hyp.unmet().is_empty(), "{:?}", hyp.unmet());

        let bound = thm3_upper(2, 0.5, 1.9, 1.0, 1).unwrap();
        let got = trace.entries[1].metrics.mu;
        assert!((got - 0.49).abs() < 0.01, "{got}");
        assert!(got > 3.0 * bound, "{got} vs {bound}");
        assert!(matches!(check_thm3(&trace, &hyp, 2), Thm3Outcome::Checked { violations } if violations.len() == 1));
    }

    #[test]
    fn lti_examples() {
        assert!((lti_upper(&[0.5, 0.5, 0.5], 1.0) - 0.125).abs() < 1e-15);
        assert_eq!(lti_upper(&[], 2.5), 2.5);
        assert_eq!(lti_upper(&[2.0], 3.0), 6.0);
    }

    #[test]
    fn selective_examples() {
        let (norm, _) = selective_upper(2, 0.5, 0.8, 0);
        assert!((norm - 0.8).abs() < 1e-12);

        let s = 2f64.sqrt() * 0.5;
        let (norm, mu) = selective_upper(2, 0.5, 0.8, 1);
        assert!((norm - s * 0.8f64.powi(3)).abs() < 1e-12);
        assert!((mu - s * 0.8f64.powi(3)).abs() < 1e-12);
        assert!((norm - 0.36203).abs() < 1e-4);

        let (norm, mu) = selective_upper(2, 0.5, 0.8, 2);
        assert!((norm - s.powi(4) * 0.8f64.powi(9)).abs() < 1e-12);
        assert!((mu - s.powi(2) * 0.8f64.powi(9)).abs() < 1e-12);
        assert!((norm - 0.03355).abs() < 1e-4 && (mu - 0.06710).abs() < 1e-4);

        let (norm, _) = selective_upper(16, 10.0, 5.0, 12);
        assert_eq!(norm, f64::INFINITY);
    }

    #[test]
    fn report_examples() {
        let r = BoundReport::new(k(1.0, 1.0, 2.0, 4, 0.25), &[3.0, 2.0, -3.0], 1);
        assert!((r.lambda_threshold.unwrap() - 2.0).abs() < 1e-12);
        assert!(r.lambdas[0].condition_holds && !r.lambdas[1].condition_holds);
        assert!(r.lambdas[1].input_floor_b.is_none());

        let r = BoundReport::new(k(1.0, 1.0, 2.0, 4, 0.9999), &[], 64);
        assert_eq!(r.envelope.len(), 65);
        assert!((r.envelope_end() - 0.993620).abs() < 1e-6);

        let r = BoundReport::new(k(1.0, 1.0, 2.0, 4, 1.0), &[1.0], 3);
        assert!(r.lambda_threshold.is_none());
        assert!(r.to_text().contains("Infeasible"));
    }

    #[test]
    fn constants_are_validated() {
        assert!(BoundConstants::new(2.0, 1.0, 1.0, 2, 0.5).is_err());
        assert!(BoundConstants::new(1.0, 1.0, 1.0, 2, 0.0).is_err());
        assert!(BoundConstants::new(1.0, 1.0, -1.0, 2, 0.5).is_err());
    }

    fn consts() -> impl Strategy<Value = BoundConstants> {
        (0.1f64..2.0, 1.0f64..2.0, 0.0f64..5.0, 1usize..32, 0.01f64..0.99).prop_map(|(c, ratio, c_m, n, a)| BoundConstants {
            c,
            s: c * ratio,
            c_m,
            n,
            a,
        })
    }

    proptest! {
        #[test]
        fn margin_changes_sign_at_threshold(kk in consts()) {
            let Ok(t) = lambda_threshold(&kk) else { return Ok(()) };
            prop_assume!(t > 1e-6);
            let d = 1e-6 * t;
            prop_assert!(thm1_margin(t - d, &kk) < 0.0);
            prop_assert!(thm1_margin(t + d, &kk) > 0.0);
            prop_assert!(thm1_margin(-(t + d), &kk) > 0.0);
        }

        #[test]
        fn floor_closes_the_induction(kk in consts(), extra in 0.0f64..10.0, big_k in 0usize..4) {
            // at mu^2 = b the next floor is at least a * b
            let Ok(t) = lambda_threshold(&kk) else { return Ok(()) };
            let lambda = t * (1.0 + 1e-3) + extra;
            let b = input_floor_b(lambda, &kk, big_k).unwrap();
            let next = recursion_floor(b, lambda, &kk);
            prop_assert!(next >= kk.a * b * (1.0 - 1e-9));
        }
    }
}
