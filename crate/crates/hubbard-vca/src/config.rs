//! Run configuration: a JSON document with model, variational, grid,
//! backend and solver blocks. Unknown keys are rejected and every field is
//! range-checked before any computation starts.

use crate::cluster::{ClusterModel, Dimension, VariationalParams};
use crate::emulator::Evolution;
use crate::error::{Result, VcaError};
use crate::greens::TimeGrid;
use crate::vca::{GfRoute, ParamBounds, VParam};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub variational: VariationalConfig,
    pub grid: GridConfig,
    pub backend: BackendConfig,
    pub solver: SolverConfig,
    pub output_dir: String,
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Grid for the `potthoff-scan` stage.
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    /// Bath sweep for the `gibbs-study` stage.
    #[serde(default)]
    pub gibbs_study: Option<GibbsStudyConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: u8,
    pub l_c: usize,
    pub n_c: usize,
    #[serde(default = "default_spacing")]
    pub a: f64,
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub temperature: f64,
}

fn default_spacing() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalConfig {
    pub mu_prime: f64,
    pub delta_prime: f64,
    #[serde(default)]
    pub delta_d_prime: f64,
    #[serde(default)]
    pub m_prime: f64,
    /// Which fields the saddle search moves.
    #[serde(default = "default_active")]
    pub active: Vec<VParam>,
    #[serde(default)]
    pub bounds: ParamBounds,
}

fn default_active() -> Vec<VParam> {
    vec![VParam::MuPrime, VParam::DeltaPrime]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dtau: f64,
    pub n_max: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// Lehmann exact-diagonalization oracle.
    Ed,
    /// Density-matrix emulation of the measurement circuit.
    Emulator {
        #[serde(default = "default_evolution")]
        evolution: Evolution,
        #[serde(default)]
        gibbs: GibbsSource,
        /// 0 means exact probabilities; otherwise binomial shot noise.
        #[serde(default)]
        shots: u64,
    },
}

fn default_evolution() -> Evolution {
    Evolution::Exact
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum GibbsSource {
    #[default]
    Exact,
    Riera {
        m: usize,
        r: u32,
        q: u32,
        lambda: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_eps_omega")]
    pub eps_omega: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_h() -> f64 {
    1e-3
}

fn default_eps_omega() -> f64 {
    1e-5
}

fn default_max_iter() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub mu_n: usize,
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub delta_n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsStudyConfig {
    /// Bath sizes to sweep; the backend's riera block supplies r, q, λ.
    pub m_values: Vec<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| VcaError::config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.dimension != 1 && m.dimension != 2 {
            return Err(VcaError::config("model.dimension must be 1 or 2"));
        }
        self.cluster_model()?.validate()?;
        if !(m.t >= 0.0) {
            return Err(VcaError::config("model.t must be ≥ 0"));
        }
        let g = &self.grid;
        if !(g.dtau > 0.0) || g.n_max == 0 || !(g.eta >= 0.0) {
            return Err(VcaError::config(
                "grid requires dtau > 0, n_max ≥ 1, eta ≥ 0",
            ));
        }
        let s = &self.solver;
        if !(s.h > 0.0) || !(s.eps_omega > 0.0) || s.max_iter == 0 {
            return Err(VcaError::config(
                "solver requires h > 0, eps_omega > 0, max_iter ≥ 1",
            ));
        }
        if self.variational.active.is_empty() {
            return Err(VcaError::config("variational.active must not be empty"));
        }
        let model = self.cluster_model()?;
        self.variational_params().validate(&model)?;
        if let BackendConfig::Emulator { gibbs, .. } = &self.backend {
            if let GibbsSource::Riera { m, r, q, lambda } = gibbs {
                crate::emulator::GibbsPrepConfig {
                    m: *m,
                    r: *r,
                    q: *q,
                    lambda: *lambda,
                    target_beta: 1.0 / self.model.temperature,
                }
                .validate()?;
            }
        }
        if let Some(scan) = &self.scan {
            if scan.mu_n == 0 || scan.delta_n == 0 {
                return Err(VcaError::config("scan grid sizes must be ≥ 1"));
            }
        }
        Ok(())
    }

    pub fn cluster_model(&self) -> Result<ClusterModel> {
        let dimension = Dimension::try_from(self.model.dimension).map_err(VcaError::Config)?;
        Ok(ClusterModel {
            dimension,
            l_c: self.model.l_c,
            n_c: self.model.n_c,
            a: self.model.a,
            t: self.model.t,
            u: self.model.u,
            mu: self.model.mu,
            temperature: self.model.temperature,
        })
    }

    pub fn variational_params(&self) -> VariationalParams {
        VariationalParams {
            mu_prime: self.variational.mu_prime,
            delta_prime: self.variational.delta_prime,
            delta_d_prime: self.variational.delta_d_prime,
            m_prime: self.variational.m_prime,
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid {
            dtau: self.grid.dtau,
            n_max: self.grid.n_max,
            eta: self.grid.eta,
        }
    }

    /// Route feeding the Ω integral: the emulator backend follows the
    /// discrete time-domain protocol, the ED backend evaluates the Lehmann
    /// poles directly.
    pub fn gf_route(&self) -> GfRoute {
        match self.backend {
            BackendConfig::Ed => GfRoute::EdLehmann,
            BackendConfig::Emulator { .. } => GfRoute::TimeDomain,
        }
    }
}
