//! TOML run configuration. Every field has a default; a missing config file
//! section falls back to the built-in case parameters. See
//! `configs/reference.toml` for a fully commented example.

use hstokes::cases::CaseName;
use hstokes::domain::GridSpec;
use hstokes::error::{HsError, Result};
use hstokes::kernels::SolonnikovParams;
use hstokes::navier_stokes::IterationConfig;
use hstokes::oracle::OracleConfig;
use hstokes::stokes::SolverOptions;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub iteration: IterationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// "stokes" or "navier-stokes"; `demo` and `oracle-compare` infer it.
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Built-in case name, or "files" to read the [data] section.
    #[serde(default = "default_case")]
    pub case: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Case amplitude; the case default when omitted.
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_kind() -> String {
    "stokes".into()
}
fn default_case() -> String {
    "rayleigh-ramp".into()
}
fn default_alpha() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    42
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: default_kind(),
            case: default_case(),
            alpha: default_alpha(),
            amplitude: None,
            seed: default_seed(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub period_l: f64,
    pub height_h: f64,
    pub n_tangential: usize,
    pub n_normal: usize,
    pub t_final: f64,
    pub n_time: usize,
}

impl GridSection {
    pub fn to_grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.dim,
            self.period_l,
            self.height_h,
            self.n_tangential,
            self.n_normal,
            self.t_final,
            self.n_time,
        )
    }
}

/// External field files, written in the binary + JSON sidecar format.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub dir: PathBuf,
    #[serde(default = "default_h_name")]
    pub h: String,
    #[serde(default = "default_g_name")]
    pub g: String,
    #[serde(default = "default_f_name")]
    pub f: String,
}

fn default_h_name() -> String {
    "h".into()
}
fn default_g_name() -> String {
    "g".into()
}
fn default_f_name() -> String {
    "f".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationSection {
    pub m_max: usize,
    pub contraction_threshold: f64,
    pub stop_tol: f64,
    pub t_shrink: f64,
    pub max_attempts: usize,
}

impl Default for IterationSection {
    fn default() -> Self {
        let d = IterationConfig::default();
        IterationSection {
            m_max: d.m_max,
            contraction_threshold: d.contraction_threshold,
            stop_tol: d.stop_tol,
            t_shrink: d.t_shrink,
            max_attempts: d.max_attempts,
        }
    }
}

impl IterationSection {
    pub fn to_config(&self, alpha: f64) -> IterationConfig {
        IterationConfig {
            m_max: self.m_max,
            contraction_threshold: self.contraction_threshold,
            stop_tol: self.stop_tol,
            t_shrink: self.t_shrink,
            max_attempts: self.max_attempts,
            alpha,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub compat_tol_rel: f64,
    pub residual_family: usize,
    pub seminorm_budget: usize,
    pub compute_weak_residual: bool,
    pub sigma_nodes_first: usize,
    pub sigma_nodes_near: usize,
    pub sigma_nodes_far: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverSection {
            compat_tol_rel: d.compat_tol_rel,
            residual_family: d.residual_family,
            seminorm_budget: d.seminorm_budget,
            compute_weak_residual: d.compute_weak_residual,
            sigma_nodes_first: d.solonnikov.sigma_nodes_first,
            sigma_nodes_near: d.solonnikov.sigma_nodes_near,
            sigma_nodes_far: d.solonnikov.sigma_nodes_far,
        }
    }
}

impl SolverSection {
    pub fn to_options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            compat_tol_rel: self.compat_tol_rel,
            solonnikov: SolonnikovParams {
                sigma_nodes_first: self.sigma_nodes_first,
                sigma_nodes_near: self.sigma_nodes_near,
                sigma_nodes_far: self.sigma_nodes_far,
                ..SolonnikovParams::default()
            },
            residual_family: self.residual_family,
            seed,
            compute_weak_residual: self.compute_weak_residual,
            seminorm_budget: self.seminorm_budget,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub normal_refine: usize,
    pub time_refine: usize,
    pub cfl_limit: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let d = OracleConfig::default();
        OracleSection {
            normal_refine: d.normal_refine,
            time_refine: d.time_refine,
            cfl_limit: d.cfl_limit,
        }
    }
}

impl OracleSection {
    pub fn to_config(&self) -> OracleConfig {
        OracleConfig {
            normal_refine: self.normal_refine,
            time_refine: self.time_refine,
            cfl_limit: self.cfl_limit,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub write_parts: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            write_parts: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| HsError::InvalidData(format!("config {}: {e}", p.display())))
            }
        }
    }

    pub fn case(&self) -> Result<CaseName> {
        CaseName::parse(&self.run.case)
    }

    /// The grid: explicit [grid] section, or the case default.
    pub fn grid(&self) -> Result<GridSpec> {
        match &self.grid {
            Some(g) => g.to_grid(),
            None => Ok(self.case()?.default_grid()),
        }
    }
}
