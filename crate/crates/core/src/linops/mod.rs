//! Circulant and mask operators, DFT helpers, block grids and shifts.

mod dft;
mod grid;
mod operator;

pub use dft::Dft2;
pub use grid::{cyclic_shift, BlockGrid, BlockRect};
pub use operator::{
    default_zero_tol, pseudoinverse_spectrum, rank_of_spectrum, Circulant, DegradationOperator,
    DiagonalMask, Kernel, DEFAULT_RELATIVE_ZERO_TOL,
};
