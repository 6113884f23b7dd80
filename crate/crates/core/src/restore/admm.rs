//! ADMM iterations alternating deconvolution with shifted compress-decompress.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{shift_offsets, AdmmConfig, ThetaSchedule};
use super::deconv::{solve_stage, CgSettings, Target};
use super::init::initialize;
use crate::codec::{theta_search, Codec, CodecOutput, Theta};
use crate::error::{Error, Result};
use crate::linops::{BlockGrid, DegradationOperator};
use crate::metrics::psnr;
use crate::scalar::Real;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    /// One block grid.
    NonOverlapping,
    /// Several shifted grids, one dual variable each.
    Overlapping,
    /// Several shifted grids sharing the coverage-weighted mean dual.
    RobustDual,
}

impl Algorithm {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::NonOverlapping),
            2 => Some(Self::Overlapping),
            3 => Some(Self::RobustDual),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::NonOverlapping => 1,
            Self::Overlapping => 2,
            Self::RobustDual => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    /// `‖H ẑ − y‖²` at the coverage-weighted mean of the decompressed shifts.
    pub fidelity: f64,
    /// Total bits over all shifts.
    pub bits: u64,
    /// `fidelity + μ·bits`.
    pub cost: f64,
    /// PSNR of `x̂` against the reference, when one is given.
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AdmmState<T> {
    pub x_hat: Signal<T>,
    /// Decompressed signal of each shift, on that shift's crop.
    pub z_hat: Vec<Signal<T>>,
    /// Scaled dual of each shift, full size and zero outside the shift's crop.
    pub u: Vec<Signal<T>>,
    /// Merged dual, kept by [`Algorithm::RobustDual`].
    pub u_total: Option<Signal<T>>,
    pub t: usize,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome<T> {
    /// The deconvolution-stage estimate `x̂` of the last iteration.
    pub estimate: Signal<T>,
    /// Coverage-weighted mean of the last decompressed shifts.
    pub compressed_estimate: Signal<T>,
    /// Codec output of each shift in the last iteration.
    pub final_outputs: Vec<CodecOutput<T>>,
    pub offsets: Vec<(usize, usize)>,
    pub state: AdmmState<T>,
}

impl<T: Real> AdmmOutcome<T> {
    pub fn trace(&self) -> &[TraceRow] {
        &self.state.trace
    }

    pub fn iterations(&self) -> usize {
        self.state.t
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a, T> {
    /// Ground truth for the PSNR column of the trace.
    pub reference: Option<&'a Signal<T>>,
    /// Overrides the default initialization of the decompressed shifts.
    pub initial: Option<Signal<T>>,
}

/// The shifted grids and their per-pixel coverage.
pub(crate) struct Shifts {
    pub grids: Vec<BlockGrid>,
    pub masks: Vec<Vec<bool>>,
    pub count: Vec<u32>,
}

impl Shifts {
    pub fn new(
        offsets: &[(usize, usize)],
        block: (usize, usize),
        dims: (usize, usize),
    ) -> Result<Self> {
        let grids = offsets
            .iter()
            .map(|&o| BlockGrid::new(block, o, dims))
            .collect::<Result<Vec<_>>>()?;
        let masks: Vec<Vec<bool>> = grids.iter().map(BlockGrid::coverage_mask).collect();
        let mut count = vec![0u32; dims.0 * dims.1];
        for m in &masks {
            for (c, &k) in count.iter_mut().zip(m) {
                *c += u32::from(k);
            }
        }
        if let Some(index) = count.iter().position(|&c| c == 0) {
            return Err(Error::Uncovered { index });
        }
        Ok(Self {
            grids,
            masks,
            count,
        })
    }

    /// `Σⱼ shift_j⁻¹(crops[j]) / C`, summed in shift order.
    pub fn merge<T: Real>(&self, crops: &[&Signal<T>]) -> Result<Signal<T>> {
        let (h, w) = self.grids[0].dims();
        let mut acc = vec![T::zero(); h * w];
        for (g, crop) in self.grids.iter().zip(crops) {
            let full = g.shift_inverse(crop)?;
            for (a, &v) in acc.iter_mut().zip(full.as_slice()) {
                *a += v;
            }
        }
        for (a, &c) in acc.iter_mut().zip(&self.count) {
            *a /= T::of(f64::from(c));
        }
        Ok(Signal::from_raw(h, w, acc))
    }
}

fn compress<T: Real, C: Codec<T> + ?Sized>(
    codec: &C,
    x: &Signal<T>,
    schedule: &ThetaSchedule,
    t: usize,
) -> Result<CodecOutput<T>> {
    match (schedule.theta_at(t), schedule) {
        (Some(theta), _) => codec.compress_decompress(x, theta),
        (None, ThetaSchedule::PerIterationSearch { lambda }) => {
            Ok(theta_search(codec, x, *lambda, codec.theta_grid())?.1)
        }
        (None, _) => unreachable!("only the search schedule leaves θ open"),
    }
}

fn check_schedule<T: Real, C: Codec<T> + ?Sized>(codec: &C, config: &AdmmConfig) -> Result<()> {
    config
        .scheduled_thetas()
        .into_iter()
        .try_for_each(|theta: Theta| codec.check_theta(theta))
}

/// Runs `algorithm` on `y = Hx + n`.
pub fn run<T: Real, C: Codec<T> + ?Sized>(
    algorithm: Algorithm,
    y: &Signal<T>,
    h: &DegradationOperator<T>,
    codec: &C,
    config: &AdmmConfig,
    options: RunOptions<'_, T>,
) -> Result<AdmmOutcome<T>> {
    config.validate()?;
    if algorithm == Algorithm::NonOverlapping && config.num_shifts != 1 {
        return Err(Error::Config(
            "the non-overlapping algorithm uses exactly one shift".into(),
        ));
    }
    check_schedule(codec, config)?;
    let dims = h.dims();
    y.ensure_dims(dims)?;
    if let Some(r) = options.reference {
        r.ensure_dims(dims)?;
    }
    let offsets = shift_offsets(config.num_shifts, config.block)?;
    let shifts = Shifts::new(&offsets, config.block, dims)?;
    let m = offsets.len();
    let init = match options.initial {
        Some(s) => {
            s.ensure_dims(dims)?;
            s
        }
        None => initialize(y, h)?,
    };
    let robust = algorithm == Algorithm::RobustDual;
    let mut state = AdmmState {
        x_hat: init.clone(),
        z_hat: shifts
            .grids
            .iter()
            .map(|g| g.shift(&init))
            .collect::<Result<Vec<_>>>()?,
        u: vec![Signal::zeros(dims.0, dims.1); m],
        u_total: robust.then(|| Signal::zeros(dims.0, dims.1)),
        t: 0,
        trace: Vec::with_capacity(config.max_iters),
    };
    let cg = CgSettings {
        tol: config.cg_tol,
        max_iters: config.cg_max_iters,
    };
    let mu = config.mu_or_zero();
    let mut outputs: Vec<CodecOutput<T>> = Vec::new();
    let mut previous: Option<Signal<T>> = None;

    for t in 1..=config.max_iters {
        let duals: Vec<&Signal<T>> = match &state.u_total {
            Some(ut) => vec![ut; m],
            None => state.u.iter().collect(),
        };

        let targets = shifts
            .grids
            .iter()
            .zip(&shifts.masks)
            .zip(state.z_hat.iter().zip(&duals))
            .map(|((g, mask), (z, u))| {
                let zt = z.sub(&g.shift(u)?)?;
                Ok(Target {
                    value: g.shift_inverse(&zt)?,
                    covered: Some(mask.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let x_hat = solve_stage(h, y, &targets, config.beta, cg, previous.as_ref())?;

        outputs = shifts
            .grids
            .par_iter()
            .zip(duals.par_iter())
            .map(|(g, u)| compress(codec, &g.shift(&x_hat.add(u)?)?, &config.theta_schedule, t))
            .collect::<Result<Vec<_>>>()?;

        for (j, (g, out)) in shifts.grids.iter().zip(&outputs).enumerate() {
            let z_full = g.shift_inverse(&out.reconstruction)?;
            let mask = &shifts.masks[j];
            let u = state.u[j].as_mut_slice();
            for k in 0..u.len() {
                if mask[k] {
                    u[k] += x_hat.as_slice()[k] - z_full.as_slice()[k];
                }
            }
        }
        state.z_hat = outputs.iter().map(|o| o.reconstruction.clone()).collect();
        if robust {
            let mut acc = vec![T::zero(); dims.0 * dims.1];
            for u in &state.u {
                for (a, &v) in acc.iter_mut().zip(u.as_slice()) {
                    *a += v;
                }
            }
            for (a, &c) in acc.iter_mut().zip(&shifts.count) {
                *a /= T::of(f64::from(c));
            }
            state.u_total = Some(Signal::from_raw(dims.0, dims.1, acc));
        }

        let z_mean = shifts.merge(&state.z_hat.iter().collect::<Vec<_>>())?;
        let fidelity = h.apply(&z_mean)?.distance_sq(y)?.to_f64_lossy();
        let bits: u64 = outputs.iter().map(|o| o.bit_cost).sum();
        let psnr_t = options
            .reference
            .map(|r| psnr(&x_hat, r, 255.0))
            .transpose()?;
        state.trace.push(TraceRow {
            iter: t,
            fidelity,
            bits,
            cost: fidelity + mu * bits as f64,
            psnr: psnr_t,
        });
        if !x_hat.is_finite() {
            return Err(Error::NotConverged {
                iterations: t,
                residual: f64::NAN,
            });
        }
        let converged = previous.as_ref().is_some_and(|p| {
            let denom = p.norm().to_f64_lossy();
            let change = x_hat
                .distance_sq(p)
                .map(|d| d.sqrt().to_f64_lossy())
                .unwrap_or(f64::INFINITY);
            denom > 0.0 && change / denom < config.stop_tol
        });
        state.t = t;
        state.x_hat = x_hat.clone();
        previous = Some(x_hat);
        if converged {
            break;
        }
    }

    let compressed_estimate = shifts.merge(&state.z_hat.iter().collect::<Vec<_>>())?;
    Ok(AdmmOutcome {
        estimate: state.x_hat.clone(),
        compressed_estimate,
        final_outputs: outputs,
        offsets,
        state,
    })
}

/// Single-grid restoration. `final_outputs[0]` is the estimate in compressed form.
pub fn algorithm1<T: Real, C: Codec<T> + ?Sized>(
    y: &Signal<T>,
    h: &DegradationOperator<T>,
    codec: &C,
    config: &AdmmConfig,
    options: RunOptions<'_, T>,
) -> Result<AdmmOutcome<T>> {
    run(Algorithm::NonOverlapping, y, h, codec, config, options)
}

pub fn algorithm2<T: Real, C: Codec<T> + ?Sized>(
    y: &Signal<T>,
    h: &DegradationOperator<T>,
    codec: &C,
    config: &AdmmConfig,
    options: RunOptions<'_, T>,
) -> Result<AdmmOutcome<T>> {
    run(Algorithm::Overlapping, y, h, codec, config, options)
}

pub fn algorithm3<T: Real, C: Codec<T> + ?Sized>(
    y: &Signal<T>,
    h: &DegradationOperator<T>,
    codec: &C,
    config: &AdmmConfig,
    options: RunOptions<'_, T>,
) -> Result<AdmmOutcome<T>> {
    run(Algorithm::RobustDual, y, h, codec, config, options)
}
