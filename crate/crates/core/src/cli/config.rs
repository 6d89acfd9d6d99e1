//! JSON run configuration.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::convergence::{Excitation, TimeProfile};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::material::{heat_law, MaterialLaw};
use crate::spaces::{TimeGrid, DEFAULT_EPS_WRAP};
use crate::spatial::{Instance, SpatialOperator, DEFAULT_RESOLUTION};

pub const SCHEMA_VERSION: u32 = 1;

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub forcing: Option<ForcingConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub instance: String,
    pub nu: f64,
    #[serde(default)]
    pub law: LawConfig,
    #[serde(default)]
    pub resolution: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    /// `M(z) = diag(1_θ, 0_q) + z^{-1} diag(0_θ, 1_q)`
    #[default]
    Heat,
    /// `M(z) = M0 + z^{-1} M1` with real coefficient matrices.
    RationalBlock { m0: Vec<Vec<f64>>, m1: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_len: f64,
    pub n: usize,
    #[serde(default)]
    pub eps_wrap: Option<f64>,
    #[serde(default)]
    pub support_end: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub n_pairs: Vec<usize>,
    #[serde(default)]
    pub n_kernel: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    Zero,
    Manufactured {
        n_pairs: usize,
        #[serde(default)]
        n_kernel: usize,
        decay: f64,
        profile: TimeProfile,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub count: usize,
    #[serde(default = "one")]
    pub m_min: usize,
    pub m_max: usize,
    pub c: f64,
    pub d: f64,
    /// Instance seeds to replay instead of deriving them from the master seed.
    #[serde(default)]
    pub replay: Option<Vec<u64>>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: all_formats(),
        }
    }
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let key = if path == "." || path == "?" { "<root>".to_string() } else { path };
            config_err(&key, e.into_inner().to_string())
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("<file>", format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = &self.problem {
            if Instance::from_name(&p.instance).is_none() {
                return Err(config_err(
                    "problem.instance",
                    format!(
                        "unknown instance `{}` (expected mixed_1d, periodic_1d or dirichlet_square_2d)",
                        p.instance
                    ),
                ));
            }
            if !(p.nu > 0.0 && p.nu.is_finite()) {
                return Err(config_err("problem.nu", "must be positive and finite"));
            }
            if p.resolution == Some(0) {
                return Err(config_err("problem.resolution", "must be positive"));
            }
        }
        if let Some(ForcingConfig::Manufactured { decay, .. }) = &self.forcing {
            if decay.is_nan() || *decay <= 0.5 {
                return Err(config_err("forcing.decay", "decay exponent must exceed 1/2"));
            }
        }
        if let Some(o) = &self.oracle {
            if o.count == 0 && o.replay.as_ref().is_none_or(|r| r.is_empty()) {
                return Err(config_err("oracle.count", "must be positive"));
            }
            if o.m_min == 0 || o.m_min > o.m_max {
                return Err(config_err("oracle.m_min", "need 1 <= m_min <= m_max"));
            }
            if !(o.c > 0.0 && o.d >= o.c && o.d.is_finite()) {
                return Err(config_err("oracle.c", "need 0 < c <= d"));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<&ProblemConfig> {
        self.problem
            .as_ref()
            .ok_or_else(|| config_err("problem", "missing section"))
    }

    pub fn operator(&self) -> Result<Arc<SpatialOperator>> {
        let p = self.problem()?;
        let inst = Instance::from_name(&p.instance).expect("validated");
        inst.build(p.resolution.unwrap_or(DEFAULT_RESOLUTION))
            .map(Arc::new)
            .map_err(|e| config_err("problem.resolution", e.to_string()))
    }

    pub fn law(&self, components: usize) -> Result<MaterialLaw> {
        let p = self.problem()?;
        match &p.law {
            LawConfig::Heat => {
                let theta = components.min(1);
                heat_law(theta, components - theta).map_err(|e| config_err("problem.law", e.to_string()))
            }
            LawConfig::RationalBlock { m0, m1 } => {
                let to_mat = |key: &str, rows: &[Vec<f64>]| -> Result<CMat> {
                    if rows.len() != components || rows.iter().any(|r| r.len() != components) {
                        return Err(config_err(key, format!("must be a {components}x{components} matrix")));
                    }
                    Ok(CMat::from_fn(components, components, |i, j| C64::from(rows[i][j])))
                };
                let a = to_mat("problem.law.m0", m0)?;
                let b = to_mat("problem.law.m1", m1)?;
                MaterialLaw::rational("rational_block", a, b).map_err(|e| config_err("problem.law", e.to_string()))
            }
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let nu = self.problem()?.nu;
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| config_err("grid", "missing section"))?;
        let grid = TimeGrid::with_tolerance(g.t_len, g.n, nu, g.eps_wrap.unwrap_or(DEFAULT_EPS_WRAP))
            .map_err(|e| config_err("grid", e.to_string()))?;
        match g.support_end {
            Some(s) => grid
                .with_support_end(s)
                .map_err(|e| config_err("grid.support_end", e.to_string())),
            None => Ok(grid),
        }
    }

    pub fn scheme(&self) -> Result<&SchemeConfig> {
        self.scheme
            .as_ref()
            .ok_or_else(|| config_err("scheme", "missing section"))
    }

    pub fn excitation(&self) -> Result<Option<Excitation>> {
        match &self.forcing {
            None => Err(config_err("forcing", "missing section")),
            Some(ForcingConfig::Zero) => Ok(None),
            Some(ForcingConfig::Manufactured {
                n_pairs,
                n_kernel,
                decay,
                profile,
            }) => Ok(Some(Excitation {
                n_pairs: *n_pairs,
                n_kernel: *n_kernel,
                decay: *decay,
                profile: *profile,
            })),
        }
    }

    pub fn oracle(&self) -> Result<&OracleConfig> {
        self.oracle
            .as_ref()
            .ok_or_else(|| config_err("oracle", "missing section"))
    }
}
