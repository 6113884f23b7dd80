//! Rate-distortion analysis of Gaussian signals with circulant covariance
//! observed through a circulant degradation and white Gaussian noise.
//!
//! Everything is computed per DFT component. The engine works in `f64`: the
//! checks it supports are stated to 1e-9..1e-10 relative accuracy.

mod demo;
mod montecarlo;
pub mod verify;

pub use demo::{demo_emit, demo_rows, demo_write, DemoRow, DEMO_HEADER};
pub use montecarlo::{
    backward_channel_sample, sample_circulant, trial_rng, verify_nullspace_energy,
    BackwardChannelSample, BackwardChannelStats, NullspaceEnergy,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::{default_zero_tol, Circulant, DegradationOperator, Dft2};
use crate::signal::Signal;

/// Signal eigenvalues `λ_k`, degradation spectrum `h_k` and noise variance `σ²`
/// of a length-`N` model.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    lambda_x: Vec<f64>,
    h_f: Vec<Complex64>,
    sigma_n2: f64,
    zero_tol: f64,
}

impl SpectralModel {
    /// Requires `λ_k ≥ 0` with `λ_k = λ_{N−k}` (a real autocorrelation), a
    /// conjugate-symmetric `h`, and `σ² ≥ 0`.
    pub fn new(lambda_x: Vec<f64>, h_f: Vec<Complex64>, sigma_n2: f64) -> Result<Self> {
        let n = lambda_x.len();
        if n == 0 || h_f.len() != n {
            return Err(Error::Config(format!(
                "model needs equally long non-empty spectra, got {} and {}",
                n,
                h_f.len()
            )));
        }
        if !(sigma_n2.is_finite() && sigma_n2 >= 0.0) {
            return Err(Error::Config(
                "noise variance must be finite and non-negative".into(),
            ));
        }
        let peak = lambda_x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for k in 0..n {
            let l = lambda_x[k];
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config(format!(
                    "eigenvalue {k} is negative or not finite"
                )));
            }
            if (l - lambda_x[(n - k) % n]).abs() > 1e-12 * (1.0 + peak) {
                return Err(Error::Config(format!(
                    "eigenvalues are not symmetric at {k}; the autocorrelation would not be real"
                )));
            }
        }
        // Validates conjugate symmetry of h.
        Circulant::from_spectrum((1, n), h_f.clone())?;
        let zero_tol = default_zero_tol(&h_f);
        Ok(Self {
            lambda_x,
            h_f,
            sigma_n2,
            zero_tol,
        })
    }

    /// Pure denoising, `H = I`.
    pub fn denoising(lambda_x: Vec<f64>, sigma_n2: f64) -> Result<Self> {
        let n = lambda_x.len();
        Self::new(lambda_x, vec![Complex64::new(1.0, 0.0); n], sigma_n2)
    }

    pub fn len(&self) -> usize {
        self.lambda_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_x.is_empty()
    }

    pub fn lambda_x(&self) -> &[f64] {
        &self.lambda_x
    }

    pub fn h_f(&self) -> &[Complex64] {
        &self.h_f
    }

    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    #[inline]
    pub fn is_null(&self, k: usize) -> bool {
        self.h_f[k].norm() <= self.zero_tol
    }

    pub fn h_mag2(&self) -> Vec<f64> {
        self.h_f.iter().map(|h| h.norm_sqr()).collect()
    }

    /// `N_H`.
    pub fn rank(&self) -> usize {
        (0..self.len()).filter(|&k| !self.is_null(k)).count()
    }

    /// The degradation as a 1-D operator.
    pub fn operator(&self) -> Result<DegradationOperator<f64>> {
        Ok(DegradationOperator::Circulant(Circulant::from_spectrum(
            (1, self.len()),
            self.h_f.clone(),
        )?))
    }

    /// Eigenvalues of `R_y = H R_x Hᵀ + σ² I`.
    pub fn observation_spectrum(&self) -> Vec<f64> {
        self.lambda_x
            .iter()
            .zip(&self.h_f)
            .map(|(&l, h)| h.norm_sqr() * l + self.sigma_n2)
            .collect()
    }

    /// Eigenvalues of the pseudoinverse-filtered observation: `λ_k + σ²/|h_k|²`, 0 on the null space.
    pub fn filtered_spectrum(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                if self.is_null(k) {
                    0.0
                } else {
                    self.lambda_x[k] + self.sigma_n2 / self.h_f[k].norm_sqr()
                }
            })
            .collect()
    }

    /// Optimal distortions `D_k = σ²/|h_k|²` and rates `R_k = ½log₂(|h_k|²λ_k/σ² + 1)`,
    /// both 0 on the null space.
    pub fn optimal_allocation(&self) -> Result<AllocationResult> {
        if self.sigma_n2 <= 0.0 {
            return Err(Error::Config(
                "allocation needs a positive noise variance".into(),
            ));
        }
        let mut d = Vec::with_capacity(self.len());
        let mut r = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            if self.is_null(k) {
                d.push(0.0);
                r.push(0.0);
            } else {
                let g = self.h_f[k].norm_sqr();
                d.push(self.sigma_n2 / g);
                r.push(0.5 * (g * self.lambda_x[k] / self.sigma_n2 + 1.0).log2());
            }
        }
        let total_weighted_distortion = self
            .h_f
            .iter()
            .zip(&d)
            .map(|(h, &dk)| h.norm_sqr() * dk)
            .sum();
        Ok(AllocationResult {
            total_rate: r.iter().sum(),
            total_weighted_distortion,
            rank: self.rank(),
            d,
            r,
        })
    }

    /// Per-component LMMSE gain `λ h̄ / (|h|²λ + σ²)`; 0 where the denominator vanishes.
    pub fn wiener_gain(&self) -> Vec<Complex64> {
        self.lambda_x
            .iter()
            .zip(&self.h_f)
            .map(|(&l, h)| {
                let den = h.norm_sqr() * l + self.sigma_n2;
                if den > 0.0 {
                    h.conj() * (l / den)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// LMMSE estimate of a zero-mean `x` from `y`.
    pub fn wiener_estimate(&self, y: &Signal<f64>) -> Result<Signal<f64>> {
        y.ensure_dims((1, self.len()))?;
        let dft = Dft2::new(1, self.len());
        let mut spec = dft.signal_spectrum(y);
        for (v, g) in spec.iter_mut().zip(self.wiener_gain()) {
            *v *= g;
        }
        Ok(dft.spectrum_signal(spec))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    pub d: Vec<f64>,
    /// Bits per component.
    pub r: Vec<f64>,
    pub total_rate: f64,
    /// `Σ |h_k|² D_k`.
    pub total_weighted_distortion: f64,
    /// `N_H`.
    pub rank: usize,
}

/// Rate of a Gaussian variable of variance `sigma2` at squared error `d`, in bits.
pub fn gaussian_rd(sigma2: f64, d: f64) -> f64 {
    if d >= sigma2 {
        0.0
    } else if d <= 0.0 {
        f64::INFINITY
    } else {
        0.5 * (sigma2 / d).log2()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillResult {
    pub level: f64,
    pub d: Vec<f64>,
    pub r: Vec<f64>,
}

/// Classical reverse waterfilling: `D_k = min(θ, σ_k²)` with `Σ D_k = total_d`.
/// A budget of at least `Σ σ_k²` gives `D_k = σ_k²` and zero rate.
pub fn reverse_waterfill_uniform(variances: &[f64], total_d: f64) -> Result<WaterfillResult> {
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config(
            "variances must be finite and non-negative".into(),
        ));
    }
    if !(total_d.is_finite() && total_d >= 0.0) {
        return Err(Error::Config(
            "distortion budget must be finite and non-negative".into(),
        ));
    }
    let total_var: f64 = variances.iter().sum();
    let max_var = variances.iter().fold(0.0f64, |a, &b| a.max(b));
    let finish = |level: f64| {
        let d: Vec<f64> = variances.iter().map(|&v| v.min(level)).collect();
        let r = variances
            .iter()
            .zip(&d)
            .map(|(&v, &dk)| gaussian_rd(v, dk))
            .collect();
        WaterfillResult { level, d, r }
    };
    if total_d >= total_var {
        return Ok(finish(max_var));
    }
    let spent = |level: f64| variances.iter().map(|&v| v.min(level)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, max_var);
    while hi - lo > 1e-10 * (1.0 + max_var) {
        let mid = 0.5 * (lo + hi);
        if spent(mid) < total_d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(finish(0.5 * (lo + hi)))
}

/// Eigenvalues of a cyclic AR(1)-like autocorrelation `variance · ρ^|i−j|`, periodized.
pub fn ar1_eigenvalues(n: usize, rho: f64, variance: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|k| {
            let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (1.0 - rho * rho) / (1.0 - 2.0 * rho * w.cos() + rho * rho)
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    // Symmetrize exactly so the autocorrelation is real to the last bit.
    (0..n)
        .map(|k| variance * 0.5 * (raw[k] + raw[(n - k) % n]) / mean)
        .collect()
}
