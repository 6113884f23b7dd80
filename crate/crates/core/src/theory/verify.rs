//! Numerical checks of the closed-form results.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::montecarlo::{
    backward_channel_sample, trial_rng, verify_nullspace_energy, BackwardChannelStats,
};
use super::SpectralModel;
use crate::error::{Error, Result};
use crate::linops::DegradationOperator;
use crate::scalar::Real;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionIdentity {
    /// `‖y − Hx̂‖²`.
    pub lhs: f64,
    /// `‖(I − HH⁺)y‖² + ‖H(H⁺y − x̂)‖²`.
    pub rhs: f64,
    /// `|lhs − rhs| / max(lhs, rhs)`, 0 when both vanish.
    pub gap: f64,
}

pub fn verify_distortion_identity<T: Real>(
    h: &DegradationOperator<T>,
    y: &Signal<T>,
    x_hat: &Signal<T>,
) -> Result<DistortionIdentity> {
    let lhs = h.apply(x_hat)?.distance_sq(y)?.to_f64_lossy();
    let outside = y
        .sub(&h.range_projection(y, None)?)?
        .norm_sq()
        .to_f64_lossy();
    let inside = h
        .apply(&h.pseudoinverse_filter(y, None)?.sub(x_hat)?)?
        .norm_sq()
        .to_f64_lossy();
    let rhs = outside + inside;
    let scale = lhs.max(rhs);
    let gap = if scale > 0.0 {
        (lhs - rhs).abs() / scale
    } else {
        0.0
    };
    Ok(DistortionIdentity { lhs, rhs, gap })
}

/// Minimizer of `[½log₂(v/D)]₊ + c·D` over `D > 0`, by ternary search on `ln D`.
fn component_argmin(v: f64, c: f64) -> f64 {
    let f = |u: f64| {
        let d = u.exp();
        (0.5 * (v / d).log2()).max(0.0) + c * d
    };
    let (mut lo, mut hi) = (v.ln() - 80.0, v.ln() + 1.0);
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    (0.5 * (lo + hi)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagrangianAllocation {
    pub mu: f64,
    pub d: Vec<f64>,
}

/// Allocation found by minimizing `Σ[½log₂(λ̃_k/D_k)]₊ + μΣ|h_k|²D_k` per component
/// and bisecting on `μ` until `Σ|h_k|²D_k = N_H σ²`. Makes no use of the closed form.
pub fn lagrangian_allocation(model: &SpectralModel) -> Result<LagrangianAllocation> {
    if model.sigma_n2() <= 0.0 {
        return Err(Error::Config(
            "allocation needs a positive noise variance".into(),
        ));
    }
    let filtered = model.filtered_spectrum();
    let g = model.h_mag2();
    let active: Vec<usize> = (0..model.len()).filter(|&k| !model.is_null(k)).collect();
    let target = active.len() as f64 * model.sigma_n2();
    let solve = |mu: f64| -> Vec<f64> {
        let mut d = vec![0.0; model.len()];
        for &k in &active {
            d[k] = component_argmin(filtered[k], mu * g[k]);
        }
        d
    };
    let spent = |d: &[f64]| active.iter().map(|&k| g[k] * d[k]).sum::<f64>();
    let (mut lo, mut hi) = ((1e-30f64).ln(), (1e30f64).ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // Spending falls as μ grows.
        if spent(&solve(mid.exp())) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = (0.5 * (lo + hi)).exp();
    Ok(LagrangianAllocation { mu, d: solve(mu) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Runs every check on `model`. Monte Carlo checks use `trials` draws from `seed`.
pub fn run_checks(model: &SpectralModel, trials: usize, seed: u64) -> Result<Vec<Check>> {
    let n = model.len();
    let alloc = model.optimal_allocation()?;
    let target = alloc.rank as f64 * model.sigma_n2();
    let mut checks = vec![Check::at_most(
        "allocation_constraint",
        rel(alloc.total_weighted_distortion, target),
        1e-9,
    )];

    let oracle = lagrangian_allocation(model)?;
    let worst = alloc
        .d
        .iter()
        .zip(&oracle.d)
        .map(|(&a, &b)| rel(a, b))
        .fold(0.0, f64::max);
    checks.push(Check::at_most("lagrangian_oracle", worst, 1e-6));

    let filtered = model.filtered_spectrum();
    let excess = (0..n)
        .filter(|&k| !model.is_null(k))
        .map(|k| alloc.d[k] - filtered[k])
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most(
        "distortion_below_filtered_variance",
        excess,
        0.0,
    ));

    let h = model.operator()?;
    let mut rng = trial_rng(seed, u64::MAX);
    let mut draw = || -> Result<Signal<f64>> {
        Signal::new(1, n, (0..n).map(|_| rng.sample(StandardNormal)).collect())
    };
    let (y, x_hat) = (draw()?, draw()?);
    checks.push(Check::at_most(
        "distortion_identity",
        verify_distortion_identity(&h, &y, &x_hat)?.gap,
        1e-10,
    ));

    let null = verify_nullspace_energy(&h, model.sigma_n2(), trials, seed)?;
    checks.push(if null.expected > 0.0 {
        Check::at_most("nullspace_energy", rel(null.empirical, null.expected), 0.05)
    } else {
        Check::at_most("nullspace_energy", null.empirical, 1e-18)
    });

    let samples = backward_channel_sample(model, trials, seed.wrapping_add(1))?;
    let stats = BackwardChannelStats::from_samples(model, &samples);
    checks.push(Check::at_most(
        "backward_channel_noise_energy",
        rel(stats.noise_energy, stats.expected_noise_energy),
        0.05,
    ));
    checks.push(Check::at_most(
        "backward_channel_covariance",
        stats.covariance_rel_error,
        0.05,
    ));
    checks.push(Check::at_most(
        "backward_channel_cross_correlation",
        stats.cross_z[0].abs().max(stats.cross_z[1].abs()),
        3.0,
    ));
    Ok(checks)
}
