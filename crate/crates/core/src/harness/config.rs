use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixing::BlockKind;

/// Default sweep grid for the skip strength.
pub const DEFAULT_LAMBDAS: [f64; 9] = [-5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    #[default]
    Gaussian,
    Orthogonal,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::Gaussian => "gaussian",
            Init::Orthogonal => "orthogonal",
        })
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Init::Gaussian),
            "orthogonal" => Ok(Init::Orthogonal),
            other => Err(Error::InvalidParameter(format!(
                "unknown init '{other}' (expected gaussian or orthogonal)"
            ))),
        }
    }
}

/// Settings for sweeps and ablations. Loaded from a flat JSON object; any key
/// may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub block: BlockKind,
    #[serde(alias = "seq_len")]
    pub n: usize,
    #[serde(alias = "dim")]
    pub d: usize,
    #[serde(alias = "layers")]
    pub k_layers: usize,
    #[serde(alias = "lambda")]
    pub lambda_list: Vec<f64>,
    pub layernorm: bool,
    pub gating: bool,
    pub init: Init,
    pub init_scale: f64,
    /// Constant added to every entry of the Gaussian input.
    pub input_mean: f64,
    /// Selective blocks share one matrix for `W_B` and `W_C`.
    pub tied_bc: bool,
    #[serde(alias = "out")]
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            block: BlockKind::Selective,
            n: 16,
            d: 8,
            k_layers: 64,
            lambda_list: DEFAULT_LAMBDAS.to_vec(),
            layernorm: true,
            gating: false,
            init: Init::Gaussian,
            init_scale: 1.0,
            input_mean: 2.0,
            tied_bc: true,
            output_path: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 || self.d == 0 {
            return bad(format!("seq-len and dim must be at least 1, got {} and {}", self.n, self.d));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init-scale must be positive, got {}", self.init_scale));
        }
        if !self.input_mean.is_finite() {
            return bad("input-mean must be finite".into());
        }
        if let Some(l) = self.lambda_list.iter().find(|l| !l.is_finite()) {
            return bad(format!("lambda values must be finite, got {l}"));
        }
        Ok(())
    }

    pub fn validate_for_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.lambda_list.is_empty() {
            return Err(Error::InvalidParameter("the lambda list is empty".into()));
        }
        Ok(())
    }
}

/// Parses `"-5,0,0.5"` into a list of reals.
pub fn parse_lambda_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("'{t}' is not a finite number")))
        })
        .collect()
}
