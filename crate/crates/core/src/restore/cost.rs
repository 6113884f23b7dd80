use rayon::prelude::*;
use serde::Serialize;

use super::admm::Shifts;
use crate::codec::{Codec, Theta};
use crate::error::Result;
use crate::linops::DegradationOperator;
use crate::scalar::Real;
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub fidelity: f64,
    pub bits: u64,
    pub cost: f64,
}

/// Restoration objective of `estimate`, evaluated at its decompressed form:
/// every shift of the estimate is coded at `theta`, the reconstructions are
/// merged by coverage-weighted averaging into `ẑ`, and the result is
/// `‖Hẑ − y‖² + μ·Σ bits`.
pub fn fundamental_cost<T: Real, C: Codec<T> + ?Sized>(
    y: &Signal<T>,
    h: &DegradationOperator<T>,
    estimate: &Signal<T>,
    codec: &C,
    theta: Theta,
    block: (usize, usize),
    offsets: &[(usize, usize)],
    mu: f64,
) -> Result<CostBreakdown> {
    let shifts = Shifts::new(offsets, block, h.dims())?;
    let outputs = shifts
        .grids
        .par_iter()
        .map(|g| codec.compress_decompress(&g.shift(estimate)?, theta))
        .collect::<Result<Vec<_>>>()?;
    let z = shifts.merge(
        &outputs
            .iter()
            .map(|o| &o.reconstruction)
            .collect::<Vec<_>>(),
    )?;
    let fidelity = h.apply(&z)?.distance_sq(y)?.to_f64_lossy();
    let bits = outputs.iter().map(|o| o.bit_cost).sum::<u64>();
    Ok(CostBreakdown {
        fidelity,
        bits,
        cost: fidelity + mu * bits as f64,
    })
}
