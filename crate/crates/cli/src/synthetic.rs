//! Piecewise-constant test images and an oracle codebook built from their blocks.

use compreg::codec::{exp_golomb_len, Codebook};
use compreg::linops::BlockGrid;
use compreg::restore::shift_offsets;
use compreg::Signal;

pub const SIDE: usize = 32;

fn image(f: impl Fn(usize, usize) -> f64) -> Signal<f64> {
    let data = (0..SIDE * SIDE).map(|k| f(k / SIDE, k % SIDE)).collect();
    Signal::new(SIDE, SIDE, data).expect("square image")
}

/// Four 32×32 images: a vertical step, a rectangle, four quadrants and a diagonal edge.
pub fn suite() -> Vec<(&'static str, Signal<f64>)> {
    vec![
        ("step", image(|_, c| if c < 13 { 40.0 } else { 200.0 })),
        (
            "rect",
            image(|r, c| {
                if (5..22).contains(&r) && (9..27).contains(&c) {
                    60.0
                } else {
                    180.0
                }
            }),
        ),
        (
            "quad",
            image(|r, c| [30.0, 90.0, 150.0, 210.0][(r / 16) * 2 + c / 16]),
        ),
        ("diag", image(|r, c| if r > c { 50.0 } else { 190.0 })),
    ]
}

/// Constant blocks at `levels`, then every distinct block of `x` under all
/// offsets of the block lattice. Partial blocks are padded by repeating their
/// last row and column. Entry `i` costs `1 + exp_golomb_len(i)` bits.
pub fn oracle_codebook(x: &Signal<f64>, block: (usize, usize), levels: &[f64]) -> Codebook<f64> {
    let (bh, bw) = block;
    let mut entries: Vec<Vec<f64>> = levels.iter().map(|&l| vec![l; bh * bw]).collect();
    for offset in shift_offsets(bh * bw, block).expect("full lattice fits the block") {
        let grid = BlockGrid::new(block, offset, x.dims()).expect("offset inside block");
        for r in grid.rects() {
            let mut e = Vec::with_capacity(bh * bw);
            for a in 0..bh {
                for b in 0..bw {
                    e.push(x.get(r.row + a.min(r.height - 1), r.col + b.min(r.width - 1)));
                }
            }
            if !entries.contains(&e) {
                entries.push(e);
            }
        }
    }
    let entries = entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, 1 + exp_golomb_len(i as i64)))
        .collect();
    Codebook::new(block, entries).expect("distinct entries")
}
