use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::SpectralModel;
use crate::error::{Error, Result};
use crate::linops::{default_zero_tol, DegradationOperator, Dft2};

/// Independent stream `trial` of the generator seeded by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn white_spectrum<R: Rng + ?Sized>(dft: &Dft2<f64>, rng: &mut R) -> Vec<Complex64> {
    let e: Vec<f64> = (0..dft.len()).map(|_| rng.sample(StandardNormal)).collect();
    dft.forward_real(&e)
}

fn colour(spec: &mut [Complex64], variances: &[f64]) {
    for (v, &s) in spec.iter_mut().zip(variances) {
        *v *= s.max(0.0).sqrt();
    }
}

/// Real zero-mean Gaussian vector whose circulant covariance has eigenvalues `variances`
/// (which must satisfy `v_k = v_{N−k}`). Sampled white in the signal domain, then shaped.
pub fn sample_circulant<R: Rng + ?Sized>(
    dft: &Dft2<f64>,
    variances: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let mut spec = white_spectrum(dft, rng);
    colour(&mut spec, variances);
    dft.inverse_real(spec)
}

fn energy(spec: &[Complex64], keep: impl Fn(usize) -> bool) -> f64 {
    let n = spec.len() as f64;
    spec.iter()
        .enumerate()
        .filter(|&(k, _)| keep(k))
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullspaceEnergy {
    /// Mean of `‖(I − HH⁺)y‖²` over the trials.
    pub empirical: f64,
    /// `(N − N_H)σ²`.
    pub expected: f64,
}

/// Samples `y = Hx + n` with `x, n` white (`x` unit variance) and averages the
/// energy of `y` outside the range of `H`.
pub fn verify_nullspace_energy(
    h: &DegradationOperator<f64>,
    sigma_n2: f64,
    trials: usize,
    seed: u64,
) -> Result<NullspaceEnergy> {
    if !(sigma_n2.is_finite() && sigma_n2 >= 0.0) || trials == 0 {
        return Err(Error::Config(
            "need a non-negative noise variance and at least one trial".into(),
        ));
    }
    let sigma = sigma_n2.sqrt();
    let n = h.len();
    let rank = h.rank_count(None);
    let per_trial: Vec<f64> = match h {
        DegradationOperator::DiagonalMask(m) => (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t as u64);
                m.keep()
                    .iter()
                    .map(|&k| {
                        let x: f64 = rng.sample(StandardNormal);
                        let noise = sigma * rng.sample::<f64, _>(StandardNormal);
                        let y = if k { x + noise } else { noise };
                        if k {
                            0.0
                        } else {
                            y * y
                        }
                    })
                    .sum()
            })
            .collect(),
        DegradationOperator::Circulant(c) => {
            let hf = c.spectrum();
            let tol = default_zero_tol(hf);
            let dft = c.dft();
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, t as u64);
                    let xf = white_spectrum(dft, &mut rng);
                    let nf = white_spectrum(dft, &mut rng);
                    let yf: Vec<Complex64> = hf
                        .iter()
                        .zip(xf.iter().zip(&nf))
                        .map(|(h, (x, e))| h * x + e * sigma)
                        .collect();
                    energy(&yf, |k| hf[k].norm() <= tol)
                })
                .collect()
        }
    };
    Ok(NullspaceEnergy {
        empirical: per_trial.iter().sum::<f64>() / trials as f64,
        expected: (n - rank) as f64 * sigma_n2,
    })
}

/// One draw of the backward test channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardChannelSample {
    pub x_hat: Vec<f64>,
    /// `z = ỹ − x̂`.
    pub z: Vec<f64>,
    pub y_tilde: Vec<f64>,
    /// Component of `y` outside the range of `H`.
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖H(ỹ − x̂)‖²`.
    pub noise_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackwardChannelStats {
    pub trials: usize,
    /// Mean of `‖H(ỹ − x̂)‖²`.
    pub noise_energy: f64,
    /// `N_H σ²`.
    pub expected_noise_energy: f64,
    /// `‖Ĉ_y − R_y‖_F / ‖R_y‖_F` for the empirical second moment `Ĉ_y`.
    pub covariance_rel_error: f64,
    /// z-scores of the sample means of `w₀ ỹ₀` and `w₀ ỹ₁`.
    pub cross_z: [f64; 2],
}

/// Draws `trials` samples of `x̂ ~ N(0, H⁺R_yH⁺* − σ²H⁺H⁺*)`, `z ~ N(0, σ²H⁺H⁺*)`,
/// `ỹ = x̂ + z` and `y = Hỹ + w` with `w ~ N(0, σ²(I − P_H))`.
pub fn backward_channel_sample(
    model: &SpectralModel,
    trials: usize,
    seed: u64,
) -> Result<Vec<BackwardChannelSample>> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let n = model.len();
    let sigma2 = model.sigma_n2();
    let filtered = model.filtered_spectrum();
    let mut var_x = vec![0.0; n];
    let mut var_z = vec![0.0; n];
    let mut var_w = vec![0.0; n];
    let mut clamped = 0usize;
    for k in 0..n {
        if model.is_null(k) {
            var_w[k] = sigma2;
        } else {
            let noise = sigma2 / model.h_f()[k].norm_sqr();
            let v = filtered[k] - noise;
            if v < 0.0 {
                clamped += 1;
            }
            var_x[k] = v.max(0.0);
            var_z[k] = noise;
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} negative reconstruction variances to zero");
    }
    let dft = Dft2::<f64>::new(1, n);
    let hf = model.h_f();
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let mut xf = white_spectrum(&dft, &mut rng);
            let mut zf = white_spectrum(&dft, &mut rng);
            let mut wf = white_spectrum(&dft, &mut rng);
            colour(&mut xf, &var_x);
            colour(&mut zf, &var_z);
            colour(&mut wf, &var_w);
            let hz: Vec<Complex64> = hf.iter().zip(&zf).map(|(h, z)| h * z).collect();
            let ytf: Vec<Complex64> = xf.iter().zip(&zf).map(|(a, b)| a + b).collect();
            let yf: Vec<Complex64> = hf
                .iter()
                .zip(ytf.iter().zip(&wf))
                .map(|(h, (v, w))| h * v + w)
                .collect();
            BackwardChannelSample {
                noise_energy: energy(&hz, |_| true),
                x_hat: dft.inverse_real(xf),
                z: dft.inverse_real(zf),
                y_tilde: dft.inverse_real(ytf),
                w: dft.inverse_real(wf),
                y: dft.inverse_real(yf),
            }
        })
        .collect())
}

fn z_score(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    if se > 0.0 {
        mean / se
    } else {
        0.0
    }
}

impl BackwardChannelStats {
    /// Summarizes samples drawn from `model` by [`backward_channel_sample`].
    pub fn from_samples(model: &SpectralModel, samples: &[BackwardChannelSample]) -> Self {
        let n = model.len();
        let trials = samples.len();
        let mut second = vec![0.0; n * n];
        for s in samples {
            for i in 0..n {
                let yi = s.y[i];
                for j in 0..n {
                    second[i * n + j] += yi * s.y[j];
                }
            }
        }
        let dft = Dft2::<f64>::new(1, n);
        let r_col = dft.inverse_real(
            model
                .observation_spectrum()
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect(),
        );
        let (mut diff, mut norm) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let r = r_col[(i + n - j) % n];
                let c = second[i * n + j] / trials as f64;
                diff += (c - r) * (c - r);
                norm += r * r;
            }
        }
        let lag = |l: usize| z_score(samples.iter().map(move |s| s.w[0] * s.y_tilde[l % n]));
        Self {
            trials,
            noise_energy: samples.iter().map(|s| s.noise_energy).sum::<f64>() / trials as f64,
            expected_noise_energy: model.rank() as f64 * model.sigma_n2(),
            covariance_rel_error: (diff / norm).sqrt(),
            cross_z: [lag(0), lag(1)],
        }
    }
}
