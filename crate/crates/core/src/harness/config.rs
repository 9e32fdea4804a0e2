//! Run configuration, read from TOML.
//!
//! ```toml
//! eps = [0.05, 0.035, 0.025]
//! c0 = 2.0
//! observation_cadence = 10
//! output_dir = "out/four_vortex"
//! verify = ["zeros", "energy", "jacobian", "envelopes"]
//!
//! [datum]
//! kind = "prescribed_vortices"
//! vortices = [{ x = 0.2, y = 0.3, degree = 1 }, { x = 0.7, y = 0.2, degree = -1 }]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::initial_data::DatumSpec;
use crate::integrator::{critical_time, dt_cap, FlowParams};
use crate::torus::GridSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    Zeros,
    Energy,
    Jacobian,
    Envelopes,
    Gronwall,
}

impl Verification {
    pub fn name(self) -> &'static str {
        match self {
            Self::Zeros => "zeros",
            Self::Energy => "energy",
            Self::Jacobian => "jacobian",
            Self::Envelopes => "envelopes",
            Self::Gronwall => "gronwall",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSetting {
    Single(f64),
    List(Vec<f64>),
}

impl EpsSetting {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Single(e) => vec![*e],
            Self::List(v) => v.clone(),
        }
    }
}

fn default_c0() -> f64 {
    2.0
}

fn default_cadence() -> u64 {
    10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_checkpoint_every() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datum: DatumSpec,
    pub eps: EpsSetting,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default)]
    pub n_override: Option<usize>,
    #[serde(default)]
    pub dt_override: Option<f64>,
    /// Final time; `T_ε` when absent.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_cadence")]
    pub observation_cadence: u64,
    /// Observations between rolling checkpoints.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub verify: Vec<Verification>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Everything one simulation needs, after validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSpec {
    pub datum: DatumSpec,
    pub params: FlowParams,
    pub cadence: u64,
    pub checkpoint_every: usize,
    pub verify: BTreeSet<Verification>,
}

impl MemberSpec {
    /// Standard member: finest admissible grid, `t_end = T_ε`.
    pub fn standard(datum: DatumSpec, eps: f64, c0: f64, verify: &[Verification]) -> Result<Self> {
        Ok(Self {
            datum,
            params: FlowParams::standard(eps, c0)?,
            cadence: default_cadence(),
            checkpoint_every: default_checkpoint_every(),
            verify: verify.iter().copied().collect(),
        })
    }

    pub fn wants(&self, v: Verification) -> bool {
        self.verify.contains(&v)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn eps_values(&self) -> Vec<f64> {
        self.eps.values()
    }

    pub fn validate(&self) -> Result<()> {
        let eps = self.eps_values();
        if eps.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        if eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config("eps list must be strictly decreasing".into()));
        }
        if self.observation_cadence == 0 {
            return Err(Error::Config("observation_cadence must be >= 1".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be >= 1".into()));
        }
        self.datum
            .validate()
            .map_err(|e| Error::Config(format!("datum: {e}")))?;
        for &e in &eps {
            self.params_for(e)?;
        }
        Ok(())
    }

    /// Flow parameters for one `ε`, with the resolution and step rules applied.
    pub fn params_for(&self, eps: f64) -> Result<FlowParams> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Config(format!("eps = {eps} outside (0, 1)")));
        }
        let need = GridSpec::min_points_for(eps);
        let n = match self.n_override {
            Some(n) if n < need => {
                return Err(Error::Config(format!(
                    "resolution rule n >= ceil(8/eps) violated: n = {n} < {need} for eps = {eps}"
                )))
            }
            Some(n) => GridSpec::new(n).map_err(|e| Error::Config(e.to_string()))?.n(),
            None => GridSpec::resolving(eps).map_err(|e| Error::Config(e.to_string()))?.n(),
        };
        let t_crit = critical_time(eps, self.c0);
        if !(t_crit > 0.0) {
            return Err(Error::Config(format!(
                "critical time T_eps = {t_crit:.4} <= 0 for eps = {eps}, c0 = {}",
                self.c0
            )));
        }
        let cap = dt_cap(eps, n);
        let dt = match self.dt_override {
            Some(dt) if !(dt > 0.0 && dt <= cap) => {
                return Err(Error::Config(format!(
                    "time-step rule dt <= min(0.05, eps/n) violated: dt = {dt} > {cap:.3e}"
                )))
            }
            Some(dt) => dt,
            None => t_crit / (t_crit / cap).ceil(),
        };
        let t_end = self.t_end.unwrap_or(t_crit);
        FlowParams::new(eps, n, dt, self.c0, t_end).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn members(&self) -> Result<Vec<MemberSpec>> {
        let datum = match self.seed {
            Some(s) => self.datum.clone().with_seed(s),
            None => self.datum.clone(),
        };
        self.eps_values()
            .into_iter()
            .map(|e| {
                Ok(MemberSpec {
                    datum: datum.clone(),
                    params: self.params_for(e)?,
                    cadence: self.observation_cadence,
                    checkpoint_every: self.checkpoint_every,
                    verify: self.verify.iter().copied().collect(),
                })
            })
            .collect()
    }
}
