//! Non-overlapping block partitions and the crop-based shifts between them.
//!
//! A grid with offset `(dy, dx)` tiles the crop whose top-left pixel is
//! `(dy, dx)` and whose bottom-right pixel is the image's. Blocks start at the
//! crop's top-left corner; blocks running past the crop are clipped.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::Signal;

/// Rectangle `rows r0..r0+h, cols c0..c0+w` in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    block: (usize, usize),
    offset: (usize, usize),
    dims: (usize, usize),
}

impl BlockGrid {
    pub fn new(
        block: (usize, usize),
        offset: (usize, usize),
        dims: (usize, usize),
    ) -> Result<Self> {
        if block.0 == 0 || block.1 == 0 {
            return Err(Error::Config(format!(
                "block size must be positive, got {}x{}",
                block.0, block.1
            )));
        }
        if offset.0 >= block.0 || offset.1 >= block.1 {
            return Err(Error::InvalidOffset { offset, block });
        }
        if offset.0 >= dims.0 || offset.1 >= dims.1 {
            return Err(Error::InvalidOffset {
                offset,
                block: dims,
            });
        }
        Ok(Self {
            block,
            offset,
            dims,
        })
    }

    pub fn block(&self) -> (usize, usize) {
        self.block
    }

    pub fn offset(&self) -> (usize, usize) {
        self.offset
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    /// Dimensions of the covered crop.
    pub fn crop_dims(&self) -> (usize, usize) {
        (self.dims.0 - self.offset.0, self.dims.1 - self.offset.1)
    }

    /// Blocks per column and per row.
    pub fn counts(&self) -> (usize, usize) {
        let (ch, cw) = self.crop_dims();
        (ch.div_ceil(self.block.0), cw.div_ceil(self.block.1))
    }

    pub fn block_count(&self) -> usize {
        let (a, b) = self.counts();
        a * b
    }

    /// Block `i` in row-major block order.
    pub fn rect(&self, i: usize) -> Result<BlockRect> {
        let count = self.block_count();
        if i >= count {
            return Err(Error::IndexOutOfRange { index: i, count });
        }
        let per_row = self.counts().1;
        let row = self.offset.0 + (i / per_row) * self.block.0;
        let col = self.offset.1 + (i % per_row) * self.block.1;
        Ok(BlockRect {
            row,
            col,
            height: self.block.0.min(self.dims.0 - row),
            width: self.block.1.min(self.dims.1 - col),
        })
    }

    pub fn rects(&self) -> impl Iterator<Item = BlockRect> + '_ {
        (0..self.block_count()).map(move |i| self.rect(i).expect("index within grid"))
    }

    #[inline]
    pub fn covers(&self, row: usize, col: usize) -> bool {
        row >= self.offset.0 && col >= self.offset.1 && row < self.dims.0 && col < self.dims.1
    }

    /// Row-major coverage indicator over the full image.
    pub fn coverage_mask(&self) -> Vec<bool> {
        let (h, w) = self.dims;
        (0..h * w).map(|k| self.covers(k / w, k % w)).collect()
    }

    pub fn extract_block<T: Real>(&self, x: &Signal<T>, i: usize) -> Result<Signal<T>> {
        x.ensure_dims(self.dims)?;
        let r = self.rect(i)?;
        Ok(copy_window(x, r.row, r.col, r.height, r.width))
    }

    pub fn place_block<T: Real>(
        &self,
        x: &mut Signal<T>,
        i: usize,
        block: &Signal<T>,
    ) -> Result<()> {
        x.ensure_dims(self.dims)?;
        let r = self.rect(i)?;
        block.ensure_dims((r.height, r.width))?;
        paste_window(x, r.row, r.col, block);
        Ok(())
    }

    /// The crop seen by this grid.
    pub fn shift<T: Real>(&self, x: &Signal<T>) -> Result<Signal<T>> {
        x.ensure_dims(self.dims)?;
        let (ch, cw) = self.crop_dims();
        Ok(copy_window(x, self.offset.0, self.offset.1, ch, cw))
    }

    /// Places a crop back at its offset; uncovered pixels are zero.
    pub fn shift_inverse<T: Real>(&self, crop: &Signal<T>) -> Result<Signal<T>> {
        crop.ensure_dims(self.crop_dims())?;
        let mut out = Signal::zeros(self.dims.0, self.dims.1);
        paste_window(&mut out, self.offset.0, self.offset.1, crop);
        Ok(out)
    }
}

fn copy_window<T: Real>(x: &Signal<T>, row: usize, col: usize, h: usize, w: usize) -> Signal<T> {
    let width = x.width();
    let src = x.as_slice();
    let mut data = Vec::with_capacity(h * w);
    for r in row..row + h {
        data.extend_from_slice(&src[r * width + col..r * width + col + w]);
    }
    Signal::from_raw(h, w, data)
}

fn paste_window<T: Real>(x: &mut Signal<T>, row: usize, col: usize, block: &Signal<T>) {
    let width = x.width();
    let (h, w) = block.dims();
    let dst = x.as_mut_slice();
    for r in 0..h {
        let start = (row + r) * width + col;
        dst[start..start + w].copy_from_slice(&block.as_slice()[r * w..(r + 1) * w]);
    }
}

/// Cyclic translation: `out[r, c] = x[(r + dy) mod h, (c + dx) mod w]`.
pub fn cyclic_shift<T: Real>(x: &Signal<T>, dy: usize, dx: usize) -> Signal<T> {
    let (h, w) = x.dims();
    let src = x.as_slice();
    let data = (0..h * w)
        .map(|k| src[((k / w + dy) % h) * w + (k % w + dx) % w])
        .collect();
    Signal::from_raw(h, w, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Signal<f64> {
        Signal::new(h, w, (0..h * w).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn unit_blocks_are_pixels() {
        let x = ramp(3, 4);
        let g = BlockGrid::new((1, 1), (0, 0), (3, 4)).unwrap();
        assert_eq!(g.block_count(), 12);
        for i in 0..12 {
            assert_eq!(g.extract_block(&x, i).unwrap().as_slice(), &[i as f64]);
        }
    }

    #[test]
    fn aligned_grid_tiles_image() {
        let x = ramp(16, 16);
        let g = BlockGrid::new((8, 8), (0, 0), (16, 16)).unwrap();
        assert_eq!(g.block_count(), 4);
        let mut y = Signal::zeros(16, 16);
        for i in 0..4 {
            let b = g.extract_block(&x, i).unwrap();
            g.place_block(&mut y, i, &b).unwrap();
        }
        assert_eq!(x, y);
    }

    #[test]
    fn offset_grid_covers_bottom_right_crop() {
        let g = BlockGrid::new((8, 8), (3, 3), (16, 16)).unwrap();
        assert_eq!(g.crop_dims(), (13, 13));
        assert_eq!(g.block_count(), 4);
        let r = g.rect(3).unwrap();
        assert_eq!((r.row, r.col, r.height, r.width), (11, 11, 5, 5));
        let mut count = vec![0usize; 256];
        for r in g.rects() {
            for a in r.row..r.row + r.height {
                for b in r.col..r.col + r.width {
                    count[a * 16 + b] += 1;
                }
            }
        }
        for (k, &c) in count.iter().enumerate() {
            let inside = k / 16 >= 3 && k % 16 >= 3;
            assert_eq!(c, usize::from(inside));
        }
    }

    #[test]
    fn out_of_range_block() {
        let g = BlockGrid::new((8, 8), (0, 0), (16, 16)).unwrap();
        assert!(matches!(
            g.extract_block(&ramp(16, 16), 4),
            Err(Error::IndexOutOfRange { index: 4, count: 4 })
        ));
    }

    #[test]
    fn one_dimensional_shift() {
        let x = Signal::from_vec(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let g = BlockGrid::new((1, 2), (0, 1), (1, 4)).unwrap();
        let crop = g.shift(&x).unwrap();
        assert_eq!(crop.as_slice(), &[2.0, 3.0, 4.0]);
        assert_eq!(
            g.shift_inverse(&crop).unwrap().as_slice(),
            &[0.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn offset_must_be_inside_block() {
        assert!(matches!(
            BlockGrid::new((8, 8), (8, 0), (16, 16)),
            Err(Error::InvalidOffset { .. })
        ));
    }

    #[test]
    fn zero_offset_shift_is_identity() {
        let x = ramp(5, 7);
        let g = BlockGrid::new((4, 4), (0, 0), (5, 7)).unwrap();
        assert_eq!(g.shift(&x).unwrap(), x);
    }

    #[test]
    fn cyclic_shift_wraps() {
        let x = Signal::from_vec(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cyclic_shift(&x, 0, 1).as_slice(), &[2.0, 3.0, 1.0]);
    }
}
