use serde::{Deserialize, Serialize};

use crate::codec::Theta;
use crate::error::{Error, Result};

/// How θ is chosen at iteration `t` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSchedule {
    Fixed {
        theta: Theta,
    },
    /// `θ_t = max(start − step·(t − 1), floor)`.
    Linear {
        start: Theta,
        step: Theta,
        floor: Theta,
    },
    /// Per-shift exhaustive search of `‖x̃ − ẑ_θ‖² + λ·bits_θ` over the codec grid.
    PerIterationSearch {
        lambda: f64,
    },
}

impl ThetaSchedule {
    /// `None` means the θ is searched for.
    pub fn theta_at(&self, t: usize) -> Option<Theta> {
        match *self {
            Self::Fixed { theta } => Some(theta),
            Self::Linear { start, step, floor } => {
                let k = Theta::try_from(t.saturating_sub(1)).unwrap_or(Theta::MAX);
                Some(start.saturating_sub(step.saturating_mul(k)).max(floor))
            }
            Self::PerIterationSearch { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub beta: f64,
    /// Weight of the bit cost in the tracked objective; 0 when absent.
    pub mu: Option<f64>,
    pub theta_schedule: ThetaSchedule,
    pub num_shifts: usize,
    pub block: (usize, usize),
    pub max_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    /// Stop once `‖x̂_t − x̂_{t−1}‖ / ‖x̂_{t−1}‖` falls below this; 0 disables.
    pub stop_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            beta: 1e-3,
            mu: None,
            theta_schedule: ThetaSchedule::Fixed { theta: 8 },
            num_shifts: 1,
            block: (8, 8),
            max_iters: 15,
            cg_tol: 1e-6,
            cg_max_iters: 2000,
            stop_tol: 1e-4,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad("beta must be finite and non-negative");
        }
        if let Some(mu) = self.mu {
            if !(mu.is_finite() && mu >= 0.0) {
                return bad("mu must be finite and non-negative");
            }
        }
        if self.block.0 == 0 || self.block.1 == 0 {
            return bad("block size must be positive");
        }
        let nb = self.block.0 * self.block.1;
        if self.num_shifts == 0 || self.num_shifts > nb {
            return Err(Error::Config(format!(
                "number of shifts must be in 1..={nb} for {}x{} blocks",
                self.block.0, self.block.1
            )));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.cg_tol.is_finite() && self.cg_tol > 0.0) || self.cg_max_iters == 0 {
            return bad("CG tolerance and iteration cap must be positive");
        }
        if !(self.stop_tol.is_finite() && self.stop_tol >= 0.0) {
            return bad("stop tolerance must be non-negative");
        }
        if let ThetaSchedule::PerIterationSearch { lambda } = self.theta_schedule {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return bad("search lambda must be finite and non-negative");
            }
        }
        shift_offsets(self.num_shifts, self.block).map(|_| ())
    }

    pub fn mu_or_zero(&self) -> f64 {
        self.mu.unwrap_or(0.0)
    }

    /// Every θ the schedule can produce within `max_iters`.
    pub fn scheduled_thetas(&self) -> Vec<Theta> {
        let mut out: Vec<Theta> = (1..=self.max_iters)
            .filter_map(|t| self.theta_schedule.theta_at(t))
            .collect();
        out.dedup();
        out
    }
}

/// The first `m` offsets, row-major, of a uniform `g × g` lattice over the block
/// (`g = ⌈√m⌉`); one-dimensional blocks use an `m`-point lattice. Starts at `(0, 0)`.
pub fn shift_offsets(m: usize, block: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    let (bh, bw) = block;
    if m == 0 || m > bh * bw {
        return Err(Error::Config(format!(
            "cannot place {m} shifts in a {bh}x{bw} block"
        )));
    }
    if bh == 1 || bw == 1 {
        let len = bh.max(bw);
        let steps = (0..m).map(|b| b * len / m);
        return Ok(if bh == 1 {
            steps.map(|s| (0, s)).collect()
        } else {
            steps.map(|s| (s, 0)).collect()
        });
    }
    let g = (1..).find(|g| g * g >= m).expect("finite");
    if g > bh || g > bw {
        return Err(Error::Config(format!(
            "{m} shifts need a {g}x{g} lattice, larger than the {bh}x{bw} block"
        )));
    }
    Ok((0..g)
        .flat_map(|a| (0..g).map(move |b| (a * bh / g, b * bw / g)))
        .take(m)
        .collect())
}
