//! Block DCT codec: orthonormal DCT-II, uniform quantization, signed Exp-Golomb code lengths.

use super::{code_blocks, Codec, CodecOutput, Theta};
use crate::error::Result;
use crate::scalar::Real;
use crate::signal::Signal;

/// θ indexes the quantization step `q = 2^(θ/2)`.
pub const DCT_THETA_GRID: [Theta; 15] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16];

/// Length of the signed Exp-Golomb codeword for `level`.
pub fn exp_golomb_len(level: i64) -> u64 {
    let k = if level > 0 {
        2 * level.unsigned_abs() - 1
    } else {
        2 * level.unsigned_abs()
    };
    2 * u64::from((k + 1).ilog2()) + 1
}

/// Row-major `n × n` orthonormal DCT-II matrix.
fn dct_matrix<T: Real>(n: usize) -> Vec<T> {
    let nf = n as f64;
    let mut m = Vec::with_capacity(n * n);
    for k in 0..n {
        let alpha = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        for i in 0..n {
            let arg = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf);
            m.push(T::of(alpha * arg.cos()));
        }
    }
    m
}

struct Basis<T> {
    rows: Vec<T>,
    cols: Vec<T>,
}

impl<T: Real> Basis<T> {
    fn new(h: usize, w: usize) -> Self {
        Self {
            rows: dct_matrix(h),
            cols: dct_matrix(w),
        }
    }

    /// `A X Bᵀ` for `transpose = false`, `Aᵀ X B` otherwise, with A = rows, B = cols.
    fn transform(&self, x: &[T], h: usize, w: usize, transpose: bool) -> Vec<T> {
        let a = |i: usize, j: usize| {
            if transpose {
                self.rows[j * h + i]
            } else {
                self.rows[i * h + j]
            }
        };
        let b = |i: usize, j: usize| {
            if transpose {
                self.cols[j * w + i]
            } else {
                self.cols[i * w + j]
            }
        };
        let mut tmp = vec![T::zero(); h * w];
        for r in 0..h {
            for c in 0..w {
                let mut acc = T::zero();
                for j in 0..w {
                    acc += x[r * w + j] * b(c, j);
                }
                tmp[r * w + c] = acc;
            }
        }
        let mut out = vec![T::zero(); h * w];
        for r in 0..h {
            for c in 0..w {
                let mut acc = T::zero();
                for i in 0..h {
                    acc += a(r, i) * tmp[i * w + c];
                }
                out[r * w + c] = acc;
            }
        }
        out
    }

    fn roundtrip(&self, block: &Signal<T>, q_step: T) -> (Signal<T>, u64) {
        let (h, w) = block.dims();
        let coefs = self.transform(block.as_slice(), h, w, false);
        let mut bits = 0u64;
        let deq: Vec<T> = coefs
            .iter()
            .map(|&c| {
                let level = (c / q_step).round();
                bits += exp_golomb_len(level.to_i64().unwrap_or(i64::MAX / 4));
                level * q_step
            })
            .collect();
        let rec = self.transform(&deq, h, w, true);
        (Signal::from_raw(h, w, rec), bits)
    }
}

/// Codes one block at quantization step `q_step`.
pub fn dct_block_roundtrip<T: Real>(block: &Signal<T>, q_step: T) -> (Signal<T>, u64) {
    Basis::new(block.height(), block.width()).roundtrip(block, q_step)
}

/// Block DCT codec; partial edge blocks are coded as smaller rectangles.
pub struct DctCodec<T: Real> {
    block: (usize, usize),
    // bases[(h - 1) * bw + (w - 1)] serves an h × w block
    bases: Vec<Basis<T>>,
}

impl<T: Real> Default for DctCodec<T> {
    fn default() -> Self {
        Self::new((8, 8))
    }
}

impl<T: Real> DctCodec<T> {
    pub fn new(block: (usize, usize)) -> Self {
        assert!(block.0 > 0 && block.1 > 0, "block size must be positive");
        let mut bases = Vec::with_capacity(block.0 * block.1);
        for h in 1..=block.0 {
            for w in 1..=block.1 {
                bases.push(Basis::new(h, w));
            }
        }
        Self { block, bases }
    }

    pub fn block(&self) -> (usize, usize) {
        self.block
    }

    pub fn q_step(theta: Theta) -> T {
        T::of(2f64.powf(f64::from(theta) / 2.0))
    }
}

impl<T: Real> Codec<T> for DctCodec<T> {
    fn theta_grid(&self) -> &[Theta] {
        &DCT_THETA_GRID
    }

    fn compress_decompress(&self, x: &Signal<T>, theta: Theta) -> Result<CodecOutput<T>> {
        self.check_theta(theta)?;
        let q = Self::q_step(theta);
        code_blocks(x, self.block, |b| {
            let (h, w) = b.dims();
            Ok(self.bases[(h - 1) * self.block.1 + (w - 1)].roundtrip(b, q))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golomb_lengths() {
        let lens: Vec<u64> = [0, 1, -1, 2, -2, 3, -3, 4]
            .iter()
            .map(|&l| exp_golomb_len(l))
            .collect();
        assert_eq!(lens, vec![1, 3, 3, 5, 5, 5, 5, 7]);
    }

    #[test]
    fn dct_matrix_is_orthonormal() {
        for n in 1..=8 {
            let m = dct_matrix::<f64>(n);
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| m[a * n + i] * m[b * n + i]).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_image_costs_one_bit_per_coefficient() {
        let codec = DctCodec::<f64>::default();
        let out = codec.compress_decompress(&Signal::zeros(8, 8), 10).unwrap();
        assert_eq!(out.bit_cost, 64);
        assert!(out.reconstruction.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_128_survives_coarse_step() {
        // DC coefficient of a constant 8×8 block is 8·128 = 1024 = 4·256.
        let codec = DctCodec::<f64>::default();
        let x = Signal::filled(8, 8, 128.0);
        let out = codec.compress_decompress(&x, 16).unwrap();
        for &v in out.reconstruction.as_slice() {
            assert!((v - 128.0).abs() < 1e-9);
        }
        assert_eq!(out.bit_cost, exp_golomb_len(4) + 63);
    }

    #[test]
    fn partial_blocks_keep_dims() {
        let codec = DctCodec::<f64>::default();
        let x = Signal::new(5, 11, (0..55).map(|i| i as f64).collect()).unwrap();
        let out = codec.compress_decompress(&x, 2).unwrap();
        assert_eq!(out.reconstruction.dims(), (5, 11));
        assert_eq!(out.per_block_bits.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn rejects_theta_outside_grid() {
        let codec = DctCodec::<f64>::default();
        assert!(codec.compress_decompress(&Signal::zeros(8, 8), 17).is_err());
    }
}
