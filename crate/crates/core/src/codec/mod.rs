//! Lossy compress-decompress codecs with exact bit costs.

mod dct;
mod external;
mod oracle;

pub use dct::{dct_block_roundtrip, exp_golomb_len, DctCodec, DCT_THETA_GRID};
pub use external::{ExternalCodec, ExternalConfig};
pub use oracle::{lagrangian_rd_block, Codebook, OracleCodec};

use crate::error::{Error, Result};
use crate::linops::BlockGrid;
use crate::scalar::Real;
use crate::signal::Signal;

/// Codec parameter. Its meaning is codec specific.
pub type Theta = i32;

#[derive(Debug, Clone, PartialEq)]
pub struct CodecOutput<T> {
    pub reconstruction: Signal<T>,
    /// Total codeword length in bits.
    pub bit_cost: u64,
    /// Bits per block in row-major block order, for codecs that report them.
    pub per_block_bits: Option<Vec<u64>>,
}

pub trait Codec<T: Real>: Send + Sync {
    /// The admissible values of θ, in the codec's preferred order.
    fn theta_grid(&self) -> &[Theta];

    fn compress_decompress(&self, x: &Signal<T>, theta: Theta) -> Result<CodecOutput<T>>;

    fn check_theta(&self, theta: Theta) -> Result<()> {
        if self.theta_grid().contains(&theta) {
            Ok(())
        } else {
            Err(Error::ThetaOutOfRange { theta })
        }
    }
}

/// Applies `code` independently to every block of an aligned grid and reassembles.
pub(crate) fn code_blocks<T: Real>(
    x: &Signal<T>,
    block: (usize, usize),
    mut code: impl FnMut(&Signal<T>) -> Result<(Signal<T>, u64)>,
) -> Result<CodecOutput<T>> {
    let grid = BlockGrid::new(block, (0, 0), x.dims())?;
    let mut reconstruction = Signal::zeros(x.height(), x.width());
    let mut per_block = Vec::with_capacity(grid.block_count());
    for i in 0..grid.block_count() {
        let (rec, bits) = code(&grid.extract_block(x, i)?)?;
        grid.place_block(&mut reconstruction, i, &rec)?;
        per_block.push(bits);
    }
    Ok(CodecOutput {
        reconstruction,
        bit_cost: per_block.iter().sum(),
        per_block_bits: Some(per_block),
    })
}

/// Exhaustive search for the θ minimizing `‖x − ẑ_θ‖² + λ·bits_θ`; ties keep the earlier θ.
pub fn theta_search<T: Real, C: Codec<T> + ?Sized>(
    codec: &C,
    x: &Signal<T>,
    lambda: f64,
    grid: &[Theta],
) -> Result<(Theta, CodecOutput<T>)> {
    let mut best: Option<(f64, Theta, CodecOutput<T>)> = None;
    for &theta in grid {
        let out = codec.compress_decompress(x, theta)?;
        let cost = rd_cost(x, &out, lambda)?;
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            best = Some((cost, theta, out));
        }
    }
    best.map(|(_, t, o)| (t, o))
        .ok_or_else(|| Error::Config("theta grid is empty".into()))
}

/// `‖x − ẑ‖² + λ·bits`.
pub fn rd_cost<T: Real>(x: &Signal<T>, out: &CodecOutput<T>, lambda: f64) -> Result<f64> {
    Ok(x.distance_sq(&out.reconstruction)?.to_f64_lossy() + lambda * out.bit_cost as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_on_single_element_grid() {
        let codec = DctCodec::default();
        let x = Signal::<f64>::filled(8, 8, 10.0);
        let (t, _) = theta_search(&codec, &x, 5.0, &[7]).unwrap();
        assert_eq!(t, 7);
        assert!(theta_search(&codec, &x, 5.0, &[]).is_err());
    }

    #[test]
    fn zero_lambda_picks_finest() {
        let codec = DctCodec::default();
        let x =
            Signal::<f64>::new(8, 8, (0..64).map(|i| ((i * 37) % 101) as f64).collect()).unwrap();
        let (t, _) = theta_search(&codec, &x, 0.0, codec.theta_grid()).unwrap();
        assert_eq!(t, 2);
    }
}
