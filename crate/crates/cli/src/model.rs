//! JSON description of a Gaussian signal model for the theory commands.

use std::path::Path;

use compreg::linops::{Circulant, Kernel};
use compreg::theory::verify::{run_checks, Check};
use compreg::theory::{ar1_eigenvalues, SpectralModel};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// Eigenvalues of a first-order autoregressive covariance, symmetrized and scaled to mean `variance`.
    Ar1 {
        rho: f64,
        variance: f64,
    },
    Eigenvalues {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterSpec {
    Identity,
    /// Centre-anchored 1-D taps applied cyclically.
    Kernel {
        taps: Vec<f64>,
    },
    /// DFT coefficients; `im` defaults to zeros.
    Spectrum {
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: usize,
    pub sigma_n2: f64,
    pub signal: SignalSpec,
    #[serde(default = "identity")]
    pub filter: FilterSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn identity() -> FilterSpec {
    FilterSpec::Identity
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    10_000
}

impl Default for ModelSpec {
    /// A smooth AR(1) source seen through a 3-tap blur with a null at the
    /// Nyquist frequency.
    fn default() -> Self {
        Self {
            n: 32,
            sigma_n2: 0.5,
            signal: SignalSpec::Ar1 {
                rho: 0.9,
                variance: 100.0,
            },
            filter: FilterSpec::Kernel {
                taps: vec![0.25, 0.5, 0.25],
            },
            seed: default_seed(),
            trials: default_trials(),
        }
    }
}

impl ModelSpec {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::from(e).context(path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn build(&self) -> CliResult<SpectralModel> {
        let n = self.n;
        if n == 0 {
            return Err(CliError::config("model length must be positive"));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials must be positive"));
        }
        let lambda = match &self.signal {
            SignalSpec::Ar1 { rho, variance } => {
                if !(rho.abs() < 1.0 && *variance > 0.0) {
                    return Err(CliError::config(
                        "AR(1) needs |rho| < 1 and a positive variance",
                    ));
                }
                ar1_eigenvalues(n, *rho, *variance)
            }
            SignalSpec::Eigenvalues { values } => values.clone(),
        };
        let h = match &self.filter {
            FilterSpec::Identity => vec![Complex64::new(1.0, 0.0); n],
            FilterSpec::Kernel { taps } => {
                let k = Kernel::new(1, taps.len(), taps.clone())?;
                Circulant::from_kernel(k, (1, n))?.spectrum().to_vec()
            }
            FilterSpec::Spectrum { re, im } => {
                let im = im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
                if im.len() != re.len() {
                    return Err(CliError::config("spectrum re and im differ in length"));
                }
                re.iter()
                    .zip(&im)
                    .map(|(&a, &b)| Complex64::new(a, b))
                    .collect()
            }
        };
        Ok(SpectralModel::new(lambda, h, self.sigma_n2)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub spec: ModelSpec,
    pub rank: usize,
    pub total_rate: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn report(spec: &ModelSpec) -> CliResult<Report> {
    let model = spec.build()?;
    let alloc = model.optimal_allocation()?;
    let checks = run_checks(&model, spec.trials, spec.seed)?;
    Ok(Report {
        spec: spec.clone(),
        rank: alloc.rank,
        total_rate: alloc.total_rate,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
