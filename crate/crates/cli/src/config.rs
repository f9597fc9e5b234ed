//! Run configuration: one JSON file per run, overridden by flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ep3_core::model::SystemParams;
use ep3_core::spectral::{ep3_analytic, linspace, logspace, SweepDirection};
use ep3_core::{Params, TrajConfig, Unit};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Default probe strength, relative to `kappa`, of the reference simulations.
pub const DEFAULT_EPS_OVER_KAPPA: f64 = 0.1183;
pub const DEFAULT_KAPPA: f64 = 7.0;

/// `n` evenly spaced samples of `[min, max]`, written `min:max:n` on the
/// command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisSpec {
    pub const fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn validate(&self, name: &str) -> CliResult<()> {
        if self.n == 0 {
            return Err(CliError::Config(format!("axis `{name}` is empty")));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::Config(format!(
                "axis `{name}` has non-finite bounds"
            )));
        }
        if self.n > 1 && !(self.min < self.max) {
            return Err(CliError::Config(format!("axis `{name}` needs min < max")));
        }
        Ok(())
    }

    pub fn linear(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.n)
    }

    pub fn logarithmic(&self) -> Vec<f64> {
        logspace(self.min, self.max, self.n)
    }
}

impl FromStr for AxisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, n] = parts.as_slice() else {
            return Err(format!("expected min:max:n, got `{s}`"));
        };
        Ok(Self {
            min: min
                .parse()
                .map_err(|_| format!("bad axis minimum `{min}`"))?,
            max: max
                .parse()
                .map_err(|_| format!("bad axis maximum `{max}`"))?,
            n: n.parse().map_err(|_| format!("bad axis count `{n}`"))?,
        })
    }
}

/// How spectra are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    SteadyState,
    Trajectories,
}

/// Which parameter an eigenvalue sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    G,
    #[default]
    Omega,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::G => "g",
            SweepAxis::Omega => "omega",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfacesConfig {
    pub g: AxisSpec,
    pub omega: AxisSpec,
}

impl Default for SurfacesConfig {
    fn default() -> Self {
        Self {
            g: AxisSpec::new(0.0, 6.0, 201),
            omega: AxisSpec::new(0.0, 6.0, 201),
        }
    }
}

/// Trajectory settings; the seed comes from the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySettings {
    pub n_traj: usize,
    pub t_final: f64,
    pub dt_max: f64,
    pub steady_window: f64,
}

impl Default for TrajectorySettings {
    fn default() -> Self {
        let d = TrajConfig::default();
        Self {
            n_traj: d.n_traj,
            t_final: d.t_final,
            dt_max: d.dt_max,
            steady_window: d.steady_window,
        }
    }
}

impl TrajectorySettings {
    pub fn with_seed(&self, seed: u64) -> TrajConfig {
        TrajConfig {
            n_traj: self.n_traj,
            t_final: self.t_final,
            dt_max: self.dt_max,
            seed,
            steady_window: self.steady_window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub deltas: AxisSpec,
    pub fock_cutoff: usize,
    pub method: Method,
    pub trajectories: TrajectorySettings,
    pub fit: bool,
    /// Fits with a larger RMS weighted residual are reported as poor.
    pub residual_threshold: f64,
    /// Also compute the trace with `gamma2` folded into `gamma1`.
    pub pair_gamma2: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            deltas: AxisSpec::new(-12.0, 12.0, 61),
            fock_cutoff: 3,
            method: Method::SteadyState,
            trajectories: TrajectorySettings::default(),
            fit: true,
            residual_threshold: 0.05,
            pair_gamma2: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigensweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for EigensweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Omega,
            values: vec![1.0, 2.0, 2.5, 3.0, 3.29, 3.5, 4.0, 5.0, 6.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    /// Logarithmically spaced offsets from the EP3.
    pub offsets: AxisSpec,
    pub directions: Vec<SweepDirection>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            offsets: AxisSpec::new(1e-4, 1e-1, 40),
            directions: vec![SweepDirection::GSweep, SweepDirection::OmegaSweep],
        }
    }
}

/// Everything a run needs; written back, resolved, into each meta sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Parameter file, relative to the config file's directory.
    pub params: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Unit of the parameter file, overriding its own `unit` field.
    pub unit: Option<Unit>,
    pub surfaces: SurfacesConfig,
    pub spectrum: SpectrumConfig,
    pub eigensweep: EigensweepConfig,
    pub scaling: ScalingConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?;
        if let (Some(p), Some(dir)) = (&cfg.params, path.parent()) {
            if p.is_relative() {
                cfg.params = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }
}

/// Parameters used when no file is given: the `kappa/gamma = 7` EP3.
pub fn default_params() -> Params {
    let ep = ep3_analytic(1.0, DEFAULT_KAPPA).expect("EP3 exists for kappa/gamma = 7");
    SystemParams::lambda_system(
        ep.g_ep3,
        ep.omega_ep3,
        DEFAULT_KAPPA,
        DEFAULT_EPS_OVER_KAPPA,
    )
    .expect("valid default parameters")
}
