//! Exhaustive-search codec over an explicit block codebook.

use std::collections::HashSet;

use super::{code_blocks, exp_golomb_len, Codec, CodecOutput, Theta};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::Signal;

/// Finite set of candidate blocks with their codeword lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    block: (usize, usize),
    entries: Vec<(Vec<T>, u64)>,
}

impl<T: Real> Codebook<T> {
    pub fn new(block: (usize, usize), entries: Vec<(Vec<T>, u64)>) -> Result<Self> {
        if block.0 == 0 || block.1 == 0 {
            return Err(Error::InvalidCodebook("block size must be positive".into()));
        }
        if entries.is_empty() {
            return Err(Error::InvalidCodebook("codebook is empty".into()));
        }
        let n = block.0 * block.1;
        let mut seen = HashSet::new();
        for (i, (v, bits)) in entries.iter().enumerate() {
            if v.len() != n {
                return Err(Error::InvalidCodebook(format!(
                    "entry {i} has {} samples, expected {n}",
                    v.len()
                )));
            }
            if *bits == 0 {
                return Err(Error::InvalidCodebook(format!("entry {i} has zero bits")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidCodebook(format!("entry {i} is not finite")));
            }
            let key: Vec<u64> = v.iter().map(|x| x.to_f64_lossy().to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidCodebook(format!("entry {i} is a duplicate")));
            }
        }
        Ok(Self { block, entries })
    }

    /// Constant blocks at the given levels; level `i` costs the Exp-Golomb length of
    /// its signed distance from the middle level.
    pub fn constant_levels(block: (usize, usize), levels: &[f64]) -> Result<Self> {
        let mid = (levels.len() / 2) as i64;
        let n = block.0 * block.1;
        let entries = levels
            .iter()
            .enumerate()
            .map(|(i, &l)| (vec![T::of(l); n], exp_golomb_len(i as i64 - mid)))
            .collect();
        Self::new(block, entries)
    }

    pub fn block(&self) -> (usize, usize) {
        self.block
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, i: usize) -> (&[T], u64) {
        let (v, b) = &self.entries[i];
        (v, *b)
    }

    /// The top-left `h × w` window of entry `i`, used for clipped edge blocks.
    pub fn entry_window(&self, i: usize, h: usize, w: usize) -> Signal<T> {
        let src = &self.entries[i].0;
        let bw = self.block.1;
        let data = (0..h * w).map(|k| src[(k / w) * bw + k % w]).collect();
        Signal::from_raw(h, w, data)
    }
}

/// Index and bits of the entry minimizing `‖block − c‖² + λ·bits(c)`.
///
/// Ties go to fewer bits, then to the earlier entry. Blocks smaller than the
/// codebook's block size are compared against each entry's top-left window.
pub fn lagrangian_rd_block<T: Real>(
    codebook: &Codebook<T>,
    block: &Signal<T>,
    lambda: f64,
) -> Result<(usize, u64)> {
    let (h, w) = block.dims();
    let (bh, bw) = codebook.block;
    if h > bh || w > bw {
        return Err(Error::DimensionMismatch {
            expected: codebook.block,
            found: (h, w),
        });
    }
    let lambda = T::of(lambda);
    let b = block.as_slice();
    let mut best: Option<(T, u64, usize)> = None;
    for (i, (entry, bits)) in codebook.entries.iter().enumerate() {
        let mut dist = T::zero();
        for r in 0..h {
            for c in 0..w {
                let d = b[r * w + c] - entry[r * bw + c];
                dist += d * d;
            }
        }
        let cost = dist + lambda * T::of(*bits as f64);
        let better = match best {
            None => true,
            Some((bc, bb, _)) => cost < bc || (cost == bc && *bits < bb),
        };
        if better {
            best = Some((cost, *bits, i));
        }
    }
    let (_, bits, i) = best.ok_or_else(|| Error::InvalidCodebook("codebook is empty".into()))?;
    Ok((i, bits))
}

/// Codec whose θ indexes a grid of Lagrange multipliers.
#[derive(Debug, Clone)]
pub struct OracleCodec<T> {
    codebook: Codebook<T>,
    lambdas: Vec<f64>,
    thetas: Vec<Theta>,
}

impl<T: Real> OracleCodec<T> {
    pub fn new(codebook: Codebook<T>, lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config(
                "oracle codec needs a non-empty grid of finite λ ≥ 0".into(),
            ));
        }
        let thetas = (0..lambdas.len() as Theta).collect();
        Ok(Self {
            codebook,
            lambdas,
            thetas,
        })
    }

    pub fn codebook(&self) -> &Codebook<T> {
        &self.codebook
    }

    pub fn lambda(&self, theta: Theta) -> Result<f64> {
        usize::try_from(theta)
            .ok()
            .and_then(|i| self.lambdas.get(i).copied())
            .ok_or(Error::ThetaOutOfRange { theta })
    }

    /// Index of the entry chosen for each block of `x`.
    pub fn assignments(&self, x: &Signal<T>, theta: Theta) -> Result<Vec<usize>> {
        let lambda = self.lambda(theta)?;
        let mut picks = Vec::new();
        code_blocks(x, self.codebook.block, |b| {
            let (i, bits) = lagrangian_rd_block(&self.codebook, b, lambda)?;
            picks.push(i);
            Ok((self.codebook.entry_window(i, b.height(), b.width()), bits))
        })?;
        Ok(picks)
    }
}

impl<T: Real> Codec<T> for OracleCodec<T> {
    fn theta_grid(&self) -> &[Theta] {
        &self.thetas
    }

    fn compress_decompress(&self, x: &Signal<T>, theta: Theta) -> Result<CodecOutput<T>> {
        let lambda = self.lambda(theta)?;
        code_blocks(x, self.codebook.block, |b| {
            let (i, bits) = lagrangian_rd_block(&self.codebook, b, lambda)?;
            Ok((self.codebook.entry_window(i, b.height(), b.width()), bits))
        })
    }
}
