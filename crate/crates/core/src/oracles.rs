//! Closed forms for two 2x2 counterexample systems, used as ground truth for
//! the simulator.
//!
//! * System 1: structured LTI mixing `M = [[1, 0], [2, 1]]` with LayerNorm,
//!   started from `Y^(0) = I`.
//! * System 2: selective mixing with unit decay and `W_B = W_C = I` with
//!   LayerNorm, started from rows `(1, 0)` and `(alpha0, beta0)` normalized.
//!
//! For `1 + lambda < 0` LayerNorm flips the sign of the first row at every
//! layer. The textbook closed forms ([`sys1_state`], [`sys2_state`]) ignore
//! that flip; the `*_signed_state` variants track it and are what the
//! simulator reproduces exactly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{model_forward, LayerSpec, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixing::{Decay, MixingSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum System {
    Sys1,
    Sys2,
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Sys1 => "sys1",
            System::Sys2 => "sys2",
        })
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sys1" | "sys-1" | "1" => Ok(System::Sys1),
            "sys2" | "sys-2" | "2" => Ok(System::Sys2),
            other => Err(Error::InvalidParameter(format!("unknown system '{other}' (expected sys1 or sys2)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub system: System,
    pub lambda: f64,
    /// System 2 only; must be positive.
    pub alpha0: f64,
    /// System 2 only.
    pub beta0: f64,
}

impl CounterexampleSpec {
    pub fn sys1(lambda: f64) -> Self {
        Self {
            system: System::Sys1,
            lambda,
            alpha0: 1.0,
            beta0: 0.0,
        }
    }

    pub fn sys2(lambda: f64, alpha0: f64, beta0: f64) -> Self {
        Self {
            system: System::Sys2,
            lambda,
            alpha0,
            beta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {}", self.lambda)));
        }
        match self.system {
            System::Sys1 if self.lambda == -1.0 => Err(Error::LambdaSingular),
            System::Sys2 if !(self.alpha0 > 0.0) || !self.beta0.is_finite() => {
                Err(Error::InvalidParameter(format!("system 2 needs alpha0 > 0, got {}", self.alpha0)))
            }
            _ => Ok(()),
        }
    }

    /// Closed-form `Y^(k)`, sign-aware.
    pub fn state(&self, k: usize) -> Result<Matrix> {
        self.validate()?;
        match self.system {
            System::Sys1 => sys1_signed_state(k, self.lambda),
            System::Sys2 => sys2_signed_state(k, self.lambda, self.alpha0, self.beta0),
        }
    }

    pub fn initial_state(&self) -> Result<Matrix> {
        self.state(0)
    }

    pub fn model(&self, big_k: usize) -> ModelSpec {
        let layer = match self.system {
            System::Sys1 => sys1_layer(self.lambda),
            System::Sys2 => sys2_layer(self.lambda),
        };
        ModelSpec::new(vec![layer; big_k], 2, 2)
    }
}

pub fn sys1_layer(lambda: f64) -> LayerSpec {
    LayerSpec::new(
        MixingSpec::StructuredLti {
            alpha: vec![2.0],
            w_c: Matrix::filled(2, 1, 1.0),
            w_b: Matrix::filled(2, 1, 1.0),
        },
        lambda,
        true,
    )
}

pub fn sys2_layer(lambda: f64) -> LayerSpec {
    LayerSpec::new(
        MixingSpec::Selective {
            decay: Decay::Uniform(1.0),
            w_b: Matrix::identity(2),
            w_c: Matrix::identity(2),
        },
        lambda,
        true,
    )
}

/// `alpha' = alpha (1 + 4/(1+lambda)^2) + (4/(1+lambda)) sqrt(alpha - 1) sqrt(alpha)`.
pub fn sys1_alpha_step(alpha: f64, lambda: f64) -> Result<f64> {
    if lambda == -1.0 {
        return Err(Error::LambdaSingular);
    }
    if !(alpha >= 1.0) {
        return Err(Error::DomainError {
            op: "sys1_alpha_step",
            value: alpha,
        });
    }
    let r = 1.0 + lambda;
    let next = alpha * (1.0 + 4.0 / (r * r)) + (4.0 / r) * (alpha - 1.0).sqrt() * alpha.sqrt();
    if !next.is_finite() {
        return Err(Error::NonFinite { op: "sys1_alpha_step" });
    }
    // The exact value is >= 1 by AM-GM; only rounding can push it below.
    Ok(next.max(1.0))
}

/// `alpha_0 = 1, ..., alpha_k`.
pub fn sys1_alphas(k: usize, lambda: f64) -> Result<Vec<f64>> {
    if lambda == -1.0 {
        return Err(Error::LambdaSingular);
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut a = 1.0;
    out.push(a);
    for _ in 0..k {
        a = sys1_alpha_step(a, lambda)?;
        out.push(a);
    }
    Ok(out)
}

fn sys1_rows(first: f64, lower_left: f64, lower_right: f64) -> Result<Matrix> {
    Matrix::from_rows(&[[first, 0.0], [lower_left, lower_right]])
}

/// `[[1, 0], [sqrt((alpha_k - 1)/alpha_k), 1/sqrt(alpha_k)]]`.
pub fn sys1_state(k: usize, lambda: f64) -> Result<Matrix> {
    let alpha = *sys1_alphas(k, lambda)?.last().expect("k + 1 entries");
    sys1_rows(1.0, ((alpha - 1.0) / alpha).sqrt(), 1.0 / alpha.sqrt())
}

/// Exact `Y^(k)` for any `lambda != -1`.
///
/// With `s = sign(1 + lambda)` the first row is `s^k (1, 0)` and the second is
/// `(s^(k+1) sqrt((alpha-1)/alpha), s^k / sqrt(alpha))`, where `alpha` follows
/// the same recurrence at the reflected strength `-2 - lambda` when `s < 0`.
pub fn sys1_signed_state(k: usize, lambda: f64) -> Result<Matrix> {
    if lambda == -1.0 {
        return Err(Error::LambdaSingular);
    }
    let flip = 1.0 + lambda < 0.0;
    let effective = if flip { -2.0 - lambda } else { lambda };
    let alpha = *sys1_alphas(k, effective)?.last().expect("k + 1 entries");
    let s: f64 = if flip { -1.0 } else { 1.0 };
    let sk = s.powi(k as i32);
    sys1_rows(sk, sk * s * ((alpha - 1.0) / alpha).sqrt(), sk / alpha.sqrt())
}

/// Second row `((2+lambda)^k alpha0, (1+lambda)^k beta0)`, normalized.
fn sys2_second_row(k: usize, lambda: f64, alpha0: f64, beta0: f64) -> Result<[f64; 2]> {
    if !(alpha0 > 0.0) {
        return Err(Error::InvalidParameter(format!("system 2 needs alpha0 > 0, got {alpha0}")));
    }
    let (p, q) = (2.0 + lambda, 1.0 + lambda);
    // divide both growth factors by the larger one so large k cannot overflow
    let m = p.abs().max(q.abs());
    let (x, y) = if k == 0 {
        (alpha0, beta0)
    } else if m == 0.0 {
        (0.0, 0.0)
    } else {
        ((p / m).powi(k as i32) * alpha0, (q / m).powi(k as i32) * beta0)
    };
    let norm = x.hypot(y);
    if !(norm > 0.0) {
        return Err(Error::DegenerateNorm { step: k });
    }
    Ok([x / norm, y / norm])
}

/// `[[1, 0], ((2+lambda)^k alpha0, (1+lambda)^k beta0) / norm]`.
pub fn sys2_state(k: usize, lambda: f64, alpha0: f64, beta0: f64) -> Result<Matrix> {
    let row = sys2_second_row(k, lambda, alpha0, beta0)?;
    Matrix::from_rows(&[[1.0, 0.0], row])
}

/// [`sys2_state`] with the first row carrying the sign `sign(1+lambda)^k`.
pub fn sys2_signed_state(k: usize, lambda: f64, alpha0: f64, beta0: f64) -> Result<Matrix> {
    let r = 1.0 + lambda;
    if k >= 1 && r == 0.0 {
        return Err(Error::DegenerateNorm { step: 1 });
    }
    let row = sys2_second_row(k, lambda, alpha0, beta0)?;
    let sk = if r < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    Matrix::from_rows(&[[sk, 0.0], row])
}

/// Largest entrywise gap between the simulated and closed-form `Y^(k)`
/// over `k = 0..=K`.
pub fn oracle_vs_simulator(spec: &CounterexampleSpec, big_k: usize) -> Result<f64> {
    spec.validate()?;
    let y0 = spec.initial_state()?;
    let trace = model_forward(&y0, &spec.model(big_k), true)?;
    let mut worst = 0.0_f64;
    for (k, snap) in trace.snapshots().enumerate() {
        let sim = snap.expect("snapshots recorded");
        worst = worst.max(sim.max_abs_diff(&spec.state(k)?)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mu;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn alpha_step_examples() {
        assert_eq!(sys1_alpha_step(1.0, 1.0).unwrap(), 2.0);
        assert!((sys1_alpha_step(2.0, 1.0).unwrap() - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(sys1_alpha_step(1.0, -3.0).unwrap(), 2.0);
        assert!(matches!(sys1_alpha_step(1.0, -1.0), Err(Error::LambdaSingular)));
        assert!(matches!(sys1_alpha_step(0.5, 0.0), Err(Error::DomainError { .. })));
    }

    #[test]
    fn sys1_examples() {
        assert_eq!(sys1_state(0, 0.3).unwrap(), Matrix::identity(2));
        let one = sys1_state(1, 1.0).unwrap();
        assert!(one.max_abs_diff(&Matrix::from_rows(&[[1.0, 0.0], [H, H]]).unwrap()).unwrap() < 1e-12);
        let far = sys1_state(20, 0.0).unwrap();
        assert!((far.get(1, 0) - 1.0).abs() < 1e-8 && far.get(1, 1).abs() < 1e-8);
        assert!(mu(&far) < 1e-8);
        assert!(matches!(sys1_state(3, -1.0), Err(Error::LambdaSingular)));
    }

    #[test]
    fn sys2_examples() {
        let z = sys2_state(0, 0.7, 3.0, 4.0).unwrap();
        assert!(z.max_abs_diff(&Matrix::from_rows(&[[1.0, 0.0], [0.6, 0.8]]).unwrap()).unwrap() < 1e-15);
        let two = sys2_state(2, 0.0, 1.0, 1.0).unwrap();
        assert!((two.get(1, 0) - 0.97014250).abs() < 1e-8 && (two.get(1, 1) - 0.24253563).abs() < 1e-8);
        let far = sys2_state(30, -3.0, 1.0, 1.0).unwrap();
        assert!(far.get(1, 0).abs() < 1e-8 && (far.get(1, 1).abs() - 1.0).abs() < 1e-8);
        assert!(matches!(sys2_state(1, -2.0, 1.0, 0.0), Err(Error::DegenerateNorm { .. })));
        assert!(sys2_state(1, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn flipped_first_row_leaves_unit_distance() {
        // for lambda < -1 the rows end up orthogonal, not antipodal
        let far = sys2_state(60, -3.0, 1.0, 1.0).unwrap();
        assert!((mu(&far) - 1.0).abs() < 1e-9);
        let signed = sys2_signed_state(60, -3.0, 1.0, 1.0).unwrap();
        assert!((mu(&signed) - 1.0).abs() < 1e-9);
        let gap: f64 = (0..2).map(|j| (far.get(0, j) - far.get(1, j)).powi(2)).sum::<f64>().sqrt();
        assert!((gap - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn signed_forms_match_textbook_for_positive_branch() {
        for k in 0..12 {
            for l in [0.0, 0.5, 1.0, -0.5] {
                assert_eq!(sys1_signed_state(k, l).unwrap(), sys1_state(k, l).unwrap());
                assert_eq!(sys2_signed_state(k, l, 1.0, 2.0).unwrap(), sys2_state(k, l, 1.0, 2.0).unwrap());
            }
        }
    }

    #[test]
    fn textbook_form_departs_from_simulation_below_minus_one() {
        let spec = CounterexampleSpec::sys1(-3.0);
        let trace = model_forward(&Matrix::identity(2), &spec.model(1), true).unwrap();
        let sim = trace.entries[1].snapshot.as_ref().unwrap();
        assert!(sim.max_abs_diff(&sys1_state(1, -3.0).unwrap()).unwrap() > 0.5);
        assert!(sim.max_abs_diff(&sys1_signed_state(1, -3.0).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn simulator_matches_closed_forms() {
        for l in [1.0, 0.0, -3.0, -1.5, -5.0, 2.5] {
            assert!(
                oracle_vs_simulator(&CounterexampleSpec::sys1(l), 30).unwrap() < 1e-10,
                "sys1 lambda {l}"
            );
        }
        for l in [0.0, -3.0, 1.0, -1.2, -4.0] {
            assert!(
                oracle_vs_simulator(&CounterexampleSpec::sys2(l, 1.0, 1.0), 30).unwrap() < 1e-10,
                "sys2 lambda {l}"
            );
            assert!(oracle_vs_simulator(&CounterexampleSpec::sys2(l, 0.3, -2.0), 30).unwrap() < 1e-10);
        }
        assert!(matches!(
            oracle_vs_simulator(&CounterexampleSpec::sys1(-1.0), 5),
            Err(Error::LambdaSingular)
        ));
    }

    #[test]
    fn collapse_branch_of_system_one() {
        for l in [0.0, 1.0, -1.5] {
            let mus: Vec<f64> = (0..=200).map(|k| mu(&sys1_state(k, l).unwrap())).collect();
            let hit = mus.iter().position(|&m| m < 1e-8).expect("falls below 1e-8");
            assert!(mus[hit..].iter().all(|&m| m < 1e-8));
            assert!(mus[1..=hit].windows(2).all(|w| w[1] <= w[0]), "lambda {l}");
        }
    }

    #[test]
    fn bounded_branch_of_system_one() {
        for l in [-3.0, -5.0] {
            let alphas = sys1_alphas(1000, l).unwrap();
            assert!(alphas.iter().all(|&a| (1.0..=10.0).contains(&a)));
            let worst = (0..=1000).map(|k| mu(&sys1_state(k, l).unwrap())).fold(f64::INFINITY, f64::min);
            assert!(worst > 0.05, "lambda {l}: {worst}");
        }
    }

    #[test]
    fn alpha_growth_bound() {
        for l in [-0.9, -0.5, 0.0, 1.0, 3.0] {
            let mut a = 1.0;
            for _ in 0..15 {
                let next = sys1_alpha_step(a, l).unwrap();
                assert!(next >= a * (1.0 + 4.0 / (1.0 + l) / (1.0 + l)));
                a = next;
            }
        }
    }

    #[test]
    fn collapse_branch_of_system_two() {
        for l in [0.0f64, 1.0] {
            let ratio = (1.0 + l).abs() / (2.0 + l).abs();
            let scaled: Vec<f64> = (0..=60)
                .map(|k| mu(&sys2_state(k, l, 1.0, 1.0).unwrap()) / ratio.powi(k as i32))
                .collect();
            let c = scaled[..=10].iter().copied().fold(0.0, f64::max) * 1.01;
            assert!(scaled.iter().all(|&s| s <= c), "lambda {l}");
            assert!(mu(&sys2_state(60, l, 1.0, 1.0).unwrap()) < 1e-8);
        }
        let a = mu(&sys2_state(59, 0.0, 1.0, 1.0).unwrap());
        let b = mu(&sys2_state(60, 0.0, 1.0, 1.0).unwrap());
        assert!((b / a - 0.5).abs() < 0.01);
    }
}
