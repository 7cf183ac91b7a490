//! Token-mixing matrices for attention and the three SSM families, the
//! optional SiLU gate, and the `C_M` constants used by the lower bounds.
//!
//! Every SSM mixing uses the scalar-channel convention: `M` is `N x N` and is
//! applied identically across the `d` feature channels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, row_softmax, singular_extremes, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Attention,
    Lti,
    Structured,
    Selective,
}

impl BlockKind {
    pub const ALL: [BlockKind; 4] = [BlockKind::Attention, BlockKind::Lti, BlockKind::Structured, BlockKind::Selective];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Attention => "attention",
            BlockKind::Lti => "lti",
            BlockKind::Structured => "structured",
            BlockKind::Selective => "selective",
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "attention" => Ok(BlockKind::Attention),
            "lti" => Ok(BlockKind::Lti),
            "structured" => Ok(BlockKind::Structured),
            "selective" => Ok(BlockKind::Selective),
            other => Err(Error::InvalidParameter(format!(
                "unknown block '{other}' (expected attention, lti, structured or selective)"
            ))),
        }
    }
}

/// Decay of a selective block: one scalar for every step, or an explicit
/// per-step vector of length `N - 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Decay {
    Uniform(f64),
    PerStep(Vec<f64>),
}

impl Decay {
    pub fn steps(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Decay::Uniform(a) => Ok(vec![*a; n.saturating_sub(1)]),
            Decay::PerStep(v) if v.len() + 1 == n => Ok(v.clone()),
            Decay::PerStep(v) => Err(Error::shape("decay", format!("{} steps", n.saturating_sub(1)), v.len().to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MixingSpec {
    Attention {
        w_q: Matrix,
        w_k: Matrix,
        w_v: Matrix,
        d_qk: f64,
    },
    LtiScalar {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `alpha` has length `N - 1`; `w_c` and `w_b` are `N x H`.
    StructuredLti {
        alpha: Vec<f64>,
        w_c: Matrix,
        w_b: Matrix,
    },
    /// `w_b` and `w_c` are `d x d`.
    Selective {
        decay: Decay,
        w_b: Matrix,
        w_c: Matrix,
    },
}

impl MixingSpec {
    pub fn kind(&self) -> BlockKind {
        match self {
            MixingSpec::Attention { .. } => BlockKind::Attention,
            MixingSpec::LtiScalar { .. } => BlockKind::Lti,
            MixingSpec::StructuredLti { .. } => BlockKind::Structured,
            MixingSpec::Selective { .. } => BlockKind::Selective,
        }
    }

    /// Whether `M` depends on the layer input.
    pub fn is_input_dependent(&self) -> bool {
        matches!(self, MixingSpec::Attention { .. } | MixingSpec::Selective { .. })
    }

    /// `C_V`: the value projection for attention, identity (`None`) otherwise.
    pub fn value_weight(&self) -> Option<&Matrix> {
        match self {
            MixingSpec::Attention { w_v, .. } => Some(w_v),
            _ => None,
        }
    }

    /// Checks shapes against a `(N, d)` input.
    pub fn validate(&self, n: usize, d: usize) -> Result<()> {
        let square = |name: &'static str, m: &Matrix| {
            if m.shape() == (d, d) {
                Ok(())
            } else {
                Err(Error::shape(name, format!("{d}x{d}"), format!("{}x{}", m.rows(), m.cols())))
            }
        };
        match self {
            MixingSpec::Attention { w_q, w_k, w_v, d_qk } => {
                if !(*d_qk > 0.0) {
                    return Err(Error::InvalidParameter(format!("d_qk must be positive, got {d_qk}")));
                }
                square("attention W_Q", w_q)?;
                square("attention W_K", w_k)?;
                square("attention W_V", w_v)
            }
            MixingSpec::LtiScalar { a, b, c } => {
                if [a, b, c].iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("LTI scalars must be finite".into()))
                }
            }
            MixingSpec::StructuredLti { alpha, w_c, w_b } => {
                if alpha.len() + 1 != n {
                    return Err(Error::shape(
                        "structured decay",
                        format!("{} steps", n - 1),
                        alpha.len().to_string(),
                    ));
                }
                if w_c.rows() != n || w_b.rows() != n || w_c.cols() != w_b.cols() {
                    return Err(Error::shape(
                        "structured factors",
                        format!("{n}xH pair"),
                        format!("{}x{} and {}x{}", w_c.rows(), w_c.cols(), w_b.rows(), w_b.cols()),
                    ));
                }
                Ok(())
            }
            MixingSpec::Selective { decay, w_b, w_c } => {
                decay.steps(n)?;
                square("selective W_B", w_b)?;
                square("selective W_C", w_c)
            }
        }
    }
}

fn wrong_kind(op: &'static str, spec: &MixingSpec) -> Error {
    Error::InvalidParameter(format!("{op} called with a {} spec", spec.kind()))
}

/// `softmax(X W_Q (X W_K)^T / sqrt(d_qk))`, row-wise.
pub fn attention_mixing(x: &Matrix, spec: &MixingSpec) -> Result<Matrix> {
    let MixingSpec::Attention { w_q, w_k, d_qk, .. } = spec else {
        return Err(wrong_kind("attention_mixing", spec));
    };
    spec.validate(x.rows(), x.cols())?;
    let q = x.matmul(w_q)?;
    let k = x.matmul(w_k)?;
    let scores = q.matmul(&k.transpose())?.scale(1.0 / d_qk.sqrt())?;
    Ok(row_softmax(&scores))
}

/// `M_ji = C A^(j-i) B` below and on the diagonal.
pub fn lti_mixing(spec: &MixingSpec, n: usize) -> Result<Matrix> {
    let MixingSpec::LtiScalar { a, b, c } = *spec else {
        return Err(wrong_kind("lti_mixing", spec));
    };
    let mut powers = Vec::with_capacity(n);
    let mut p = 1.0;
    for _ in 0..n {
        powers.push(p);
        p *= a;
    }
    Matrix::from_fn(n, n, |j, i| if j >= i { c * powers[j - i] * b } else { 0.0 })
}

/// Lower-triangular 1-semiseparable matrix with entry `(j, i)` equal to
/// `alpha[i] * ... * alpha[j-1]`.
pub fn one_ss(alpha: &[f64]) -> Result<Matrix> {
    let n = alpha.len() + 1;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let mut p = 1.0;
        data[i * n + i] = 1.0;
        for j in (i + 1)..n {
            p *= alpha[j - 1];
            data[j * n + i] = p;
        }
    }
    Matrix::new(n, n, data)
}

/// `one_ss(alpha) * (W_C W_B^T)`, entrywise.
pub fn structured_lti_mixing(spec: &MixingSpec, n: usize) -> Result<Matrix> {
    let MixingSpec::StructuredLti { alpha, w_c, w_b } = spec else {
        return Err(wrong_kind("structured_lti_mixing", spec));
    };
    if w_c.rows() != n || alpha.len() + 1 != n {
        return Err(Error::shape(
            "structured_lti_mixing",
            format!("N = {n}"),
            format!("W_C has {} rows, {} decays", w_c.rows(), alpha.len()),
        ));
    }
    let gram = w_c.matmul(&w_b.transpose())?;
    one_ss(alpha)?.hadamard(&gram)
}

/// `one_ss(alpha) * (Y W_C W_B^T Y^T)`, entrywise.
pub fn selective_mixing(y: &Matrix, spec: &MixingSpec) -> Result<Matrix> {
    let MixingSpec::Selective { decay, w_b, w_c } = spec else {
        return Err(wrong_kind("selective_mixing", spec));
    };
    spec.validate(y.rows(), y.cols())?;
    let left = y.matmul(w_c)?;
    let right = y.matmul(w_b)?;
    let inner = left.matmul(&right.transpose())?;
    one_ss(&decay.steps(y.rows())?)?.hadamard(&inner)
}

/// Builds `M` for the given input, dispatching on the block kind.
pub fn mixing_matrix(y: &Matrix, spec: &MixingSpec) -> Result<Matrix> {
    match spec {
        MixingSpec::Attention { .. } => attention_mixing(y, spec),
        MixingSpec::LtiScalar { .. } => lti_mixing(spec, y.rows()),
        MixingSpec::StructuredLti { .. } => structured_lti_mixing(spec, y.rows()),
        MixingSpec::Selective { .. } => selective_mixing(y, spec),
    }
}

pub fn silu(z: f64) -> f64 {
    z / (1.0 + (-z).exp())
}

/// `O * silu(X W)`, entrywise.
pub fn apply_gating(o: &Matrix, x: &Matrix, w: &Matrix) -> Result<Matrix> {
    let gate = x.matmul(w)?.map("silu", silu)?;
    o.hadamard(&gate)
}

/// The `C_M` expression used as the operative constant: `sqrt(N)` for
/// attention, `||A|| ||B|| ||C||_F` for LTI and `sigma_max(W_B) ||W_C||_F`
/// for selective blocks.
///
/// For selective blocks this is not an upper bound on `||M||_F`; see
/// [`c_m_upper`] for one that is.
pub fn c_m_constant(spec: &MixingSpec, n: usize) -> Result<f64> {
    match spec {
        MixingSpec::Attention { .. } => Ok((n as f64).sqrt()),
        MixingSpec::LtiScalar { a, b, c } => Ok(a.abs() * b.abs() * c.abs()),
        MixingSpec::StructuredLti { alpha, w_c, w_b } => {
            let a = alpha
                .iter()
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x.abs(), |m| m.max(x.abs()))));
            let (_, b) = singular_extremes(w_b)?;
            Ok(a.unwrap_or(1.0) * b * frobenius_norm(w_c))
        }
        MixingSpec::Selective { w_b, w_c, .. } => {
            let (_, b) = singular_extremes(w_b)?;
            Ok(b * frobenius_norm(w_c))
        }
    }
}

/// A bound on `||M||_F` that holds for every input with unit rows.
///
/// Attention is row-stochastic, so `||M||_F <= sqrt(N)`; the LTI kinds do not
/// depend on the input and return the exact norm; the selective bound uses
/// `|y_j^T W_C W_B^T y_i| <= sigma_max(W_C W_B^T)` for unit rows.
pub fn c_m_upper(spec: &MixingSpec, n: usize) -> Result<f64> {
    match spec {
        MixingSpec::Attention { .. } => Ok((n as f64).sqrt()),
        MixingSpec::LtiScalar { .. } => Ok(frobenius_norm(&lti_mixing(spec, n)?)),
        MixingSpec::StructuredLti { .. } => Ok(frobenius_norm(&structured_lti_mixing(spec, n)?)),
        MixingSpec::Selective { decay, w_b, w_c } => {
            let abs: Vec<f64> = decay.steps(n)?.iter().map(|a| a.abs()).collect();
            let envelope = frobenius_norm(&one_ss(&abs)?);
            let (_, top) = singular_extremes(&w_c.matmul(&w_b.transpose())?)?;
            Ok(envelope * top)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::row_normalize;
    use crate::testutil::{matrix_strategy, unit_rows_strategy};
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn attention(d: usize, w: Matrix) -> MixingSpec {
        MixingSpec::Attention {
            w_q: w.clone(),
            w_k: w,
            w_v: Matrix::identity(d),
            d_qk: 1.0,
        }
    }

    #[test]
    fn attention_examples() {
        let spec = attention(3, Matrix::identity(3));
        let u = attention_mixing(&Matrix::zeros(4, 3), &spec).unwrap();
        assert!(u.as_slice().iter().all(|&x| (x - 0.25).abs() < 1e-15));

        let spec = attention(2, Matrix::identity(2));
        let a = attention_mixing(&Matrix::identity(2), &spec).unwrap();
        let expect = m(&[&[0.73105858, 0.26894142], &[0.26894142, 0.73105858]]);
        assert!(a.max_abs_diff(&expect).unwrap() < 1e-8);

        let one = attention_mixing(&m(&[&[0.3, -2.0]]), &spec).unwrap();
        assert_eq!(one.as_slice(), &[1.0]);
    }

    #[test]
    fn attention_rejects_bad_shapes() {
        let spec = attention(3, Matrix::identity(3));
        assert!(matches!(
            attention_mixing(&Matrix::zeros(2, 2), &spec),
            Err(Error::ShapeMismatch { .. })
        ));
        let bad = MixingSpec::Attention {
            w_q: Matrix::identity(2),
            w_k: Matrix::identity(2),
            w_v: Matrix::identity(2),
            d_qk: 0.0,
        };
        assert!(attention_mixing(&Matrix::identity(2), &bad).is_err());
    }

    #[test]
    fn lti_examples() {
        let spec = MixingSpec::LtiScalar { a: 0.5, b: 1.0, c: 1.0 };
        let l = lti_mixing(&spec, 3).unwrap();
        assert_eq!(l, m(&[&[1.0, 0.0, 0.0], &[0.5, 1.0, 0.0], &[0.25, 0.5, 1.0]]));

        let zero = lti_mixing(&MixingSpec::LtiScalar { a: 0.5, b: 0.0, c: 1.0 }, 3).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let diag = lti_mixing(&MixingSpec::LtiScalar { a: 0.0, b: 2.0, c: 3.0 }, 3).unwrap();
        assert_eq!(diag, Matrix::identity(3).scale(6.0).unwrap());
    }

    #[test]
    fn one_ss_examples() {
        assert_eq!(
            one_ss(&[2.0, 3.0]).unwrap(),
            m(&[&[1.0, 0.0, 0.0], &[2.0, 1.0, 0.0], &[6.0, 3.0, 1.0]])
        );
        let ones = one_ss(&[1.0; 3]).unwrap();
        assert!((0..4).all(|j| (0..4).all(|i| ones.get(j, i) == if j >= i { 1.0 } else { 0.0 })));
        assert_eq!(one_ss(&[0.0; 3]).unwrap(), Matrix::identity(4));
        assert_eq!(one_ss(&[]).unwrap(), Matrix::identity(1));
    }

    #[test]
    fn structured_examples() {
        let ones = Matrix::filled(3, 1, 1.0);
        let spec = MixingSpec::StructuredLti {
            alpha: vec![1.0, 1.0],
            w_c: ones.clone(),
            w_b: ones.clone(),
        };
        assert_eq!(structured_lti_mixing(&spec, 3).unwrap(), one_ss(&[1.0, 1.0]).unwrap());

        let spec = MixingSpec::StructuredLti {
            alpha: vec![0.5, 0.5],
            w_c: ones.clone(),
            w_b: ones.clone(),
        };
        let lti = lti_mixing(&MixingSpec::LtiScalar { a: 0.5, b: 1.0, c: 1.0 }, 3).unwrap();
        assert_eq!(structured_lti_mixing(&spec, 3).unwrap(), lti);

        let spec = MixingSpec::StructuredLti {
            alpha: vec![0.5, 0.5],
            w_c: ones,
            w_b: Matrix::zeros(3, 1),
        };
        assert_eq!(structured_lti_mixing(&spec, 3).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn selective_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = MixingSpec::Selective {
            decay: Decay::Uniform(1.0),
            w_b: Matrix::identity(2),
            w_c: Matrix::identity(2),
        };
        let got = selective_mixing(&m(&[&[1.0, 0.0], &[h, h]]), &spec).unwrap();
        assert!(got.max_abs_diff(&m(&[&[1.0, 0.0], &[h, 1.0]])).unwrap() < 1e-12);
        assert_eq!(selective_mixing(&Matrix::identity(2), &spec).unwrap(), Matrix::identity(2));

        let spec = MixingSpec::Selective {
            decay: Decay::Uniform(0.0),
            w_b: Matrix::identity(2),
            w_c: Matrix::identity(2),
        };
        let y = m(&[&[0.6, 0.8], &[1.0, 0.0], &[0.0, 1.0]]);
        assert!(selective_mixing(&y, &spec).unwrap().max_abs_diff(&Matrix::identity(3)).unwrap() < 1e-12);
    }

    #[test]
    fn selective_per_step_decay() {
        let spec = MixingSpec::Selective {
            decay: Decay::PerStep(vec![2.0, 3.0]),
            w_b: Matrix::identity(1),
            w_c: Matrix::identity(1),
        };
        let y = Matrix::filled(3, 1, 1.0);
        assert_eq!(selective_mixing(&y, &spec).unwrap(), one_ss(&[2.0, 3.0]).unwrap());
        assert!(selective_mixing(&Matrix::filled(4, 1, 1.0), &spec).is_err());
    }

    #[test]
    fn gating_examples() {
        let g = apply_gating(&m(&[&[1.0, 2.0]]), &m(&[&[0.0, 1.0]]), &Matrix::identity(2)).unwrap();
        assert_eq!(g.get(0, 0), 0.0);
        assert!((g.get(0, 1) - 1.46211716).abs() < 1e-8);
        let z = apply_gating(&m(&[&[1.0, 2.0]]), &m(&[&[3.0, 1.0]]), &Matrix::zeros(2, 2)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(apply_gating(&m(&[&[1.0, 2.0]]), &m(&[&[3.0]]), &Matrix::identity(2)).is_err());
    }

    #[test]
    fn c_m_examples() {
        let spec = attention(2, Matrix::identity(2));
        assert_eq!(c_m_constant(&spec, 4).unwrap(), 2.0);

        let spec = MixingSpec::Selective {
            decay: Decay::Uniform(1.0),
            w_b: Matrix::diagonal(&[2.0, 1.0]).unwrap(),
            w_c: Matrix::diagonal(&[3.0, 0.0]).unwrap(),
        };
        assert!((c_m_constant(&spec, 3).unwrap() - 6.0).abs() < 1e-12);

        let spec = MixingSpec::LtiScalar { a: 0.5, b: 1.0, c: 2.0 };
        assert_eq!(c_m_constant(&spec, 3).unwrap(), 1.0);
    }

    #[test]
    fn selective_constant_is_not_a_norm_bound() {
        let spec = MixingSpec::Selective {
            decay: Decay::Uniform(1.0),
            w_b: Matrix::identity(1),
            w_c: Matrix::identity(1),
        };
        let y = Matrix::filled(3, 1, 1.0);
        let norm = frobenius_norm(&selective_mixing(&y, &spec).unwrap());
        assert!((norm - 6f64.sqrt()).abs() < 1e-12);
        assert!(norm > c_m_constant(&spec, 3).unwrap());
        assert!(norm <= c_m_upper(&spec, 3).unwrap() + 1e-12);
    }

    #[test]
    fn block_kind_round_trips() {
        for kind in BlockKind::ALL {
            assert_eq!(kind.as_str().parse::<BlockKind>().unwrap(), kind);
        }
        assert!("mamba".parse::<BlockKind>().is_err());
    }

    fn psd_nonneg_config() -> impl Strategy<Value = (Matrix, Matrix, f64)> {
        (2usize..6, 2usize..5).prop_flat_map(|(n, d)| {
            (
                proptest::collection::vec(0.0f64..1.0, d * d),
                proptest::collection::vec(0.01f64..1.0, n * d),
                0.5f64..=1.0,
            )
                .prop_map(move |(g, y, alpha)| {
                    let g = Matrix::new(d, d, g).unwrap();
                    let y = row_normalize(&Matrix::new(n, d, y).unwrap()).unwrap();
                    (g, y, alpha)
                })
        })
    }

    proptest! {
        #[test]
        fn attention_is_row_stochastic(x in matrix_strategy(1..8, 1..6, 3.0)) {
            let d = x.cols();
            let w = Matrix::from_fn(d, d, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0).unwrap();
            let a = attention_mixing(&x, &attention(d, w)).unwrap();
            for row in a.row_iter() {
                prop_assert!(row.iter().all(|&v| v >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn ssm_mixings_are_lower_triangular(
            y in matrix_strategy(1..7, 1..5, 2.0),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let (n, d) = y.shape();
            let lti = lti_mixing(&MixingSpec::LtiScalar { a, b, c: 1.5 }, n).unwrap();
            prop_assert!(lti.is_lower_triangular());

            let w_c = Matrix::from_fn(n, 2, |i, j| a + (i + j) as f64).unwrap();
            let w_b = Matrix::from_fn(n, 2, |i, j| b - (i * j) as f64).unwrap();
            let st = MixingSpec::StructuredLti { alpha: vec![a; n - 1], w_c, w_b };
            prop_assert!(structured_lti_mixing(&st, n).unwrap().is_lower_triangular());

            let w = Matrix::from_fn(d, d, |i, j| if i == j { b } else { a }).unwrap();
            let sel = MixingSpec::Selective { decay: Decay::Uniform(a), w_b: w.clone(), w_c: w };
            prop_assert!(selective_mixing(&y, &sel).unwrap().is_lower_triangular());
        }

        #[test]
        fn entries_dominate_the_smallest_eigen_term((g, y, alpha) in psd_nonneg_config()) {
            let spec = MixingSpec::Selective { decay: Decay::Uniform(alpha), w_b: g.clone(), w_c: g.clone() };
            let sym = g.matmul(&g.transpose()).unwrap();
            let (lambda_min, _) = crate::linalg::symmetric_eigen_extremes(&sym).unwrap();
            prop_assume!(lambda_min > 0.0);
            let n = y.rows();
            let floor = lambda_min * crate::metrics::phi(&y) * alpha.powi(n as i32);
            let mm = selective_mixing(&y, &spec).unwrap();
            for j in 0..n {
                for i in 0..=j {
                    prop_assert!(mm.get(j, i) >= floor - 1e-12, "M[{j},{i}] = {} < {floor}", mm.get(j, i));
                }
            }
        }

        #[test]
        fn attention_norm_within_constant(y in unit_rows_strategy(1..8, 1..5)) {
            let d = y.cols();
            let w = Matrix::from_fn(d, d, |i, j| (i as f64 - j as f64) * 0.7).unwrap();
            let spec = attention(d, w);
            let n = y.rows();
            prop_assert!(frobenius_norm(&attention_mixing(&y, &spec).unwrap()) <= c_m_constant(&spec, n).unwrap() * (1.0 + 1e-9));
        }

        #[test]
        fn selective_norm_within_upper_bound(
            y in unit_rows_strategy(1..8, 2..3),
            ws in proptest::collection::vec(-2.0f64..2.0, 8),
            alpha in -1.2f64..1.2,
        ) {
            let w_b = Matrix::new(2, 2, ws[..4].to_vec()).unwrap();
            let w_c = Matrix::new(2, 2, ws[4..].to_vec()).unwrap();
            let spec = MixingSpec::Selective { decay: Decay::Uniform(alpha), w_b, w_c };
            let n = y.rows();
            let got = frobenius_norm(&selective_mixing(&y, &spec).unwrap());
            prop_assert!(got <= c_m_upper(&spec, n).unwrap() * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn selective_inner_term_is_quadratic(y in matrix_strategy(1..6, 2..3, 2.0), s in -3.0f64..3.0) {
            let w_b = m(&[&[0.3, -1.0], &[0.5, 2.0]]);
            let w_c = m(&[&[1.1, 0.4], &[-0.2, 0.9]]);
            let spec = MixingSpec::Selective { decay: Decay::Uniform(1.0), w_b, w_c };
            let base = selective_mixing(&y, &spec).unwrap();
            let scaled = selective_mixing(&y.scale(s).unwrap(), &spec).unwrap();
            let expect = base.scale(s * s).unwrap();
            prop_assert!(scaled.max_abs_diff(&expect).unwrap() <= 1e-10 * (1.0 + expect.max_abs()));
        }
    }
}
