//! Problem configuration files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::directions::Method;
use crate::error::{Error, Result};

pub const CONFIG_SCHEMA: &str = "ssc-fw/config/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub schema: String,
    pub name: String,
    pub domain: DomainSpec,
    pub objective: ObjectiveSpec,
    pub method: Method,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps_stat: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub tau: TauSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start: StartSpec,
}

fn default_eps() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    1000
}
fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Simplex {
        dim: usize,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    L1Ball {
        dim: usize,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Box {
        dim: usize,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    LpBall {
        dim: usize,
        p: f64,
        #[serde(default = "default_scale")]
        radius: f64,
    },
    /// {x : ½(x−c)ᵀH(x−c) ≤ level}
    Sublevel {
        dim: usize,
        hessian: MatrixSpec,
        #[serde(default)]
        center: Option<Vec<f64>>,
        level: f64,
    },
    Product {
        blocks: Vec<DomainSpec>,
    },
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Simplex { dim, .. }
            | DomainSpec::L1Ball { dim, .. }
            | DomainSpec::Box { dim, .. }
            | DomainSpec::LpBall { dim, .. }
            | DomainSpec::Sublevel { dim, .. } => *dim,
            DomainSpec::Product { blocks } => blocks.iter().map(|b| b.dim()).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSpec {
    Identity,
    Explicit {
        rows: Vec<Vec<f64>>,
    },
    /// U diag(λ) Uᵀ with λ ⊂ [mu, l] containing both ends.
    RandomSpd {
        seed: u64,
        mu: f64,
        l: f64,
    },
    /// U diag(λ) Uᵀ with λ ⊂ [−scale, scale] and λ_min = −scale.
    RandomIndefinite {
        seed: u64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorSpec {
    Zero,
    Explicit {
        values: Vec<f64>,
    },
    /// Independent N(0, scale²) entries.
    Random {
        seed: u64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// ½xᵀQx − bᵀx
    Quadratic { q: MatrixSpec, b: VectorSpec },
    Linear {
        c: VectorSpec,
        #[serde(default = "default_scale")]
        lipschitz: f64,
    },
    /// Σ 100(x_{i+1} − x_i²)² + (1 − x_i)²; needs an explicit Lipschitz constant.
    Rosenbrock,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauSource {
    #[default]
    Theoretical,
    User {
        value: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    #[default]
    Barycenter,
    Random,
    Point(Vec<f64>),
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!("schema '{}' (expected '{CONFIG_SCHEMA}')", self.schema)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("bad problem name '{}'", self.name)));
        }
        if !(self.eps_stat >= 0.0) {
            return Err(Error::Config(format!("eps_stat {}", self.eps_stat)));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lipschitz {l}")));
            }
        }
        if let TauSource::User { value } = self.tau {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Config(format!("user tau {value} outside (0, 1]")));
            }
        }
        if self.domain.dim() == 0 {
            return Err(Error::Config("zero-dimensional domain".into()));
        }
        Ok(())
    }

    /// Canonical JSON text (struct field order, no whitespace).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
