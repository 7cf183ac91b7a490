//! Seeded random weights and inputs.
//!
//! Every draw comes from ChaCha8 seeded with `seed_from_u64(seed)`, with a
//! separate stream per purpose. Weights never depend on the skip strength,
//! the LayerNorm flag or the gating flag, so every cell of a sweep or
//! ablation sees the same mixing weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{LayerSpec, ModelSpec};
use crate::error::Result;
use crate::harness::config::{Init, RunConfig};
use crate::linalg::{orthogonal_factor, row_normalize, Matrix};
use crate::mixing::{BlockKind, Decay, MixingSpec};

pub const STREAM_WEIGHTS: u64 = 0;
pub const STREAM_INPUT: u64 = 1;
pub const STREAM_GATES: u64 = 2;

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize, std: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::new(rows, cols, data).expect("gaussian draws are finite")
}

/// `d x d` weight: Gaussian with std `scale / sqrt(d)`, or `scale` times the
/// orthogonal polar factor of a Gaussian draw.
pub fn weight_matrix(rng: &mut impl Rng, d: usize, init: Init, scale: f64) -> Result<Matrix> {
    let g = gaussian_matrix(rng, d, d, scale / (d as f64).sqrt());
    match init {
        Init::Gaussian => Ok(g),
        Init::Orthogonal => orthogonal_factor(&g)?.scale(scale),
    }
}

/// Knobs for one random mixing block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingParams {
    pub init: Init,
    pub init_scale: f64,
    pub tied_bc: bool,
}

impl From<&RunConfig> for MixingParams {
    fn from(cfg: &RunConfig) -> Self {
        Self {
            init: cfg.init,
            init_scale: cfg.init_scale,
            tied_bc: cfg.tied_bc,
        }
    }
}

/// Decays are drawn from `U(0.5, 1)`; factor matrices follow `params.init`.
pub fn random_mixing(rng: &mut impl Rng, kind: BlockKind, n: usize, d: usize, params: MixingParams) -> Result<MixingSpec> {
    let MixingParams { init, init_scale, tied_bc } = params;
    Ok(match kind {
        BlockKind::Attention => MixingSpec::Attention {
            w_q: weight_matrix(rng, d, init, init_scale)?,
            w_k: weight_matrix(rng, d, init, init_scale)?,
            w_v: weight_matrix(rng, d, init, init_scale)?,
            d_qk: d as f64,
        },
        BlockKind::Lti => MixingSpec::LtiScalar {
            a: rng.random_range(0.5..1.0),
            b: init_scale * rng.sample::<f64, _>(StandardNormal),
            c: init_scale * rng.sample::<f64, _>(StandardNormal),
        },
        BlockKind::Structured => {
            let alpha = (1..n).map(|_| rng.random_range(0.5..1.0)).collect();
            let std = init_scale / (d as f64).sqrt();
            MixingSpec::StructuredLti {
                alpha,
                w_c: gaussian_matrix(rng, n, d, std),
                w_b: gaussian_matrix(rng, n, d, std),
            }
        }
        BlockKind::Selective => {
            let a = rng.random_range(0.5..1.0);
            let w_b = weight_matrix(rng, d, init, init_scale)?;
            let w_c = if tied_bc {
                w_b.clone()
            } else {
                weight_matrix(rng, d, init, init_scale)?
            };
            MixingSpec::Selective {
                decay: Decay::Uniform(a),
                w_b,
                w_c,
            }
        }
    })
}

/// `N x d` Gaussian input with `mean` added to every entry.
pub fn random_input(rng: &mut impl Rng, n: usize, d: usize, mean: f64) -> Matrix {
    gaussian_matrix(rng, n, d, 1.0).map("random_input", |x| x + mean).expect("finite")
}

/// Same as [`random_input`], rows scaled to unit norm.
pub fn random_unit_input(rng: &mut impl Rng, n: usize, d: usize, mean: f64) -> Matrix {
    loop {
        let x = random_input(rng, n, d, mean);
        if let Ok(y) = row_normalize(&x) {
            return y;
        }
    }
}

/// The per-layer mixing weights of a run; identical for every skip strength.
pub fn random_mixings(cfg: &RunConfig) -> Result<Vec<MixingSpec>> {
    let mut rng = rng_for(cfg.seed, STREAM_WEIGHTS);
    (0..cfg.k_layers)
        .map(|_| random_mixing(&mut rng, cfg.block, cfg.n, cfg.d, cfg.into()))
        .collect()
}

pub fn random_gates(cfg: &RunConfig) -> Result<Vec<Matrix>> {
    let mut rng = rng_for(cfg.seed, STREAM_GATES);
    (0..cfg.k_layers)
        .map(|_| weight_matrix(&mut rng, cfg.d, cfg.init, cfg.init_scale))
        .collect()
}

pub fn config_input(cfg: &RunConfig) -> Matrix {
    random_input(&mut rng_for(cfg.seed, STREAM_INPUT), cfg.n, cfg.d, cfg.input_mean)
}

/// Assembles a model from pre-drawn weights.
pub fn assemble(mixings: &[MixingSpec], gates: Option<&[Matrix]>, lambda: f64, layernorm: bool, n: usize, d: usize) -> ModelSpec {
    let layers = mixings
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let layer = LayerSpec::new(m.clone(), lambda, layernorm);
            match gates {
                Some(g) => layer.with_gate(g[k].clone()),
                None => layer,
            }
        })
        .collect();
    ModelSpec::new(layers, n, d)
}

/// Model and input for `cfg` at skip strength `lambda`.
pub fn random_model(cfg: &RunConfig, lambda: f64) -> Result<(ModelSpec, Matrix)> {
    let mixings = random_mixings(cfg)?;
    let gates = if cfg.gating { Some(random_gates(cfg)?) } else { None };
    let model = assemble(&mixings, gates.as_deref(), lambda, cfg.layernorm, cfg.n, cfg.d);
    Ok((model, config_input(cfg)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = gaussian_matrix(&mut rng_for(7, 0), 3, 3, 1.0);
        let b = gaussian_matrix(&mut rng_for(7, 0), 3, 3, 1.0);
        let c = gaussian_matrix(&mut rng_for(7, 1), 3, 3, 1.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn orthogonal_init_is_orthogonal() {
        let q = weight_matrix(&mut rng_for(3, 0), 5, Init::Orthogonal, 1.0).unwrap();
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&Matrix::identity(5)).unwrap() < 1e-12);
    }

    #[test]
    fn weights_do_not_depend_on_lambda_or_flags() {
        let cfg = RunConfig {
            k_layers: 3,
            n: 4,
            d: 3,
            ..Default::default()
        };
        let (m1, x1) = random_model(&cfg, 0.0).unwrap();
        let gated = RunConfig {
            gating: true,
            layernorm: false,
            ..cfg.clone()
        };
        let (m2, x2) = random_model(&gated, -5.0).unwrap();
        assert_eq!(x1, x2);
        for (a, b) in m1.layers.iter().zip(&m2.layers) {
            assert_eq!(a.mixing, b.mixing);
        }
    }

    #[test]
    fn every_kind_validates() {
        let mut rng = rng_for(1, 0);
        let params = MixingParams {
            init: Init::Gaussian,
            init_scale: 1.0,
            tied_bc: false,
        };
        for kind in BlockKind::ALL {
            let m = random_mixing(&mut rng, kind, 5, 3, params).unwrap();
            m.validate(5, 3).unwrap();
            assert_eq!(m.kind(), kind);
        }
    }
}
