//! Text and JSON reports for the bound calculus and the counterexamples.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundConstants, BoundReport};
use crate::dynamics::model_forward;
use crate::error::Result;
use crate::metrics::mu;
use crate::oracles::{sys1_state, sys2_state, CounterexampleSpec, System};

/// `mu(Y^(K))` below this counts as collapse.
pub const COLLAPSE_THRESHOLD: f64 = 1e-6;

pub fn run_bound_report(constants: BoundConstants, lambdas: &[f64], big_k: usize) -> Result<BoundReport> {
    constants.validate()?;
    Ok(BoundReport::new(constants, lambdas, big_k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Collapse,
    NoCollapse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub spec: CounterexampleSpec,
    pub layers: usize,
    /// `mu` of the exact closed form, `k = 0..=K`.
    pub closed_form_mu: Vec<f64>,
    /// `mu` of the sign-free textbook closed form.
    pub textbook_mu: Vec<f64>,
    pub simulated_mu: Vec<f64>,
    pub max_deviation: f64,
    pub final_mu: f64,
    pub verdict: Verdict,
}

impl CounterexampleReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.spec;
        let _ = write!(out, "system: {}, lambda = {}", s.system, s.lambda);
        if s.system == System::Sys2 {
            let _ = write!(out, ", alpha0 = {}, beta0 = {}", s.alpha0, s.beta0);
        }
        let _ = writeln!(out, ", layers: {}", self.layers);
        let _ = writeln!(out, "k,closed_form_mu,textbook_mu,simulated_mu");
        for k in 0..self.simulated_mu.len() {
            let _ = writeln!(
                out,
                "{k},{:.12e},{:.12e},{:.12e}",
                self.closed_form_mu[k], self.textbook_mu[k], self.simulated_mu[k]
            );
        }
        let _ = writeln!(out, "max_deviation: {:.3e}", self.max_deviation);
        let _ = writeln!(out, "final_mu: {:.9}", self.final_mu);
        let verdict = match self.verdict {
            Verdict::Collapse => "collapse",
            Verdict::NoCollapse => "no-collapse",
        };
        let _ = writeln!(out, "verdict: {verdict}");
        out
    }
}

pub fn run_counterexample(spec: &CounterexampleSpec, big_k: usize) -> Result<CounterexampleReport> {
    spec.validate()?;
    let trace = model_forward(&spec.initial_state()?, &spec.model(big_k), true)?;
    let mut closed = Vec::with_capacity(big_k + 1);
    let mut textbook = Vec::with_capacity(big_k + 1);
    let mut max_dev = 0.0_f64;
    for (k, snap) in trace.snapshots().enumerate() {
        let exact = spec.state(k)?;
        max_dev = max_dev.max(snap.expect("snapshots recorded").max_abs_diff(&exact)?);
        closed.push(mu(&exact));
        let plain = match spec.system {
            System::Sys1 => sys1_state(k, spec.lambda)?,
            System::Sys2 => sys2_state(k, spec.lambda, spec.alpha0, spec.beta0)?,
        };
        textbook.push(mu(&plain));
    }
    let simulated = trace.mu();
    let final_mu = *simulated.last().expect("trace has K + 1 entries");
    Ok(CounterexampleReport {
        spec: *spec,
        layers: big_k,
        closed_form_mu: closed,
        textbook_mu: textbook,
        simulated_mu: simulated,
        max_deviation: max_dev,
        final_mu,
        verdict: if final_mu < COLLAPSE_THRESHOLD {
            Verdict::Collapse
        } else {
            Verdict::NoCollapse
        },
    })
}

/// Where the JSON twin of a text artifact goes: same stem, `.json` extension.
pub fn json_path(text_path: &Path) -> PathBuf {
    text_path.with_extension("json")
}

/// Writes `text` to `path` and `json` next to it.
pub fn write_report<T: Serialize>(path: &Path, text: &str, value: &T) -> Result<PathBuf> {
    std::fs::write(path, text)?;
    let json = json_path(path);
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(&json, body)?;
    Ok(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_examples() {
        let r = run_counterexample(&CounterexampleSpec::sys1(0.0), 50).unwrap();
        assert_eq!(r.verdict, Verdict::Collapse);
        assert!(r.max_deviation < 1e-10);

        let r = run_counterexample(&CounterexampleSpec::sys2(-3.0, 1.0, 1.0), 50).unwrap();
        assert_eq!(r.verdict, Verdict::NoCollapse);
        assert!(r.text_ok());

        assert!(run_counterexample(&CounterexampleSpec::sys1(-1.0), 5).is_err());
    }

    #[test]
    fn bound_report_examples() {
        let r = run_bound_report(BoundConstants::new(1.0, 1.0, 2.0, 4, 0.25).unwrap(), &[3.0], 2).unwrap();
        assert!((r.lambda_threshold.unwrap() - 2.0).abs() < 1e-12);
        let r = run_bound_report(BoundConstants::new(1.0, 1.0, 2.0, 4, 0.9999).unwrap(), &[], 64).unwrap();
        assert!((r.envelope_end() - 0.99362).abs() < 1e-5);
    }

    impl CounterexampleReport {
        fn text_ok(&self) -> bool {
            let t = self.to_text();
            t.contains("verdict: no-collapse") && t.lines().count() == self.layers + 6
        }
    }
}
