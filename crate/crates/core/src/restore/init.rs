use crate::error::{Error, Result};
use crate::linops::{DegradationOperator, DiagonalMask};
use crate::scalar::Real;
use crate::signal::Signal;

/// Window side used to fill missing pixels before the first iteration.
pub const FILL_WINDOW: usize = 7;

/// Starting point for the compressed estimates: `y` for blur operators; for
/// masks, `y` with every missing pixel replaced by the mean of the available
/// pixels in its 7×7 window, widened by 2 until it contains one.
pub fn initialize<T: Real>(y: &Signal<T>, h: &DegradationOperator<T>) -> Result<Signal<T>> {
    y.ensure_dims(h.dims())?;
    match h {
        DegradationOperator::Circulant(_) => Ok(y.clone()),
        DegradationOperator::DiagonalMask(m) => fill_missing(y, m),
    }
}

fn fill_missing<T: Real>(y: &Signal<T>, mask: &DiagonalMask) -> Result<Signal<T>> {
    if mask.available_count() == 0 {
        return Err(Error::Config("mask has no available pixels".into()));
    }
    let (h, w) = y.dims();
    let keep = mask.keep();
    let mut out = y.clone();
    for r in 0..h {
        for c in 0..w {
            if keep[r * w + c] {
                continue;
            }
            let mut half = FILL_WINDOW / 2;
            loop {
                let (r0, r1) = (r.saturating_sub(half), (r + half).min(h - 1));
                let (c0, c1) = (c.saturating_sub(half), (c + half).min(w - 1));
                let mut sum = T::zero();
                let mut n = 0usize;
                for rr in r0..=r1 {
                    for cc in c0..=c1 {
                        if keep[rr * w + cc] {
                            sum += y.get(rr, cc);
                            n += 1;
                        }
                    }
                }
                if n > 0 {
                    out.set(r, c, sum / T::of_usize(n));
                    break;
                }
                half += 1;
            }
        }
    }
    Ok(out)
}

/// Overwrites the available pixels with their observed values.
pub fn final_touch_inpaint<T: Real>(
    x_hat: &Signal<T>,
    y: &Signal<T>,
    mask: &DiagonalMask,
) -> Result<Signal<T>> {
    x_hat.ensure_dims(mask.dims())?;
    y.ensure_dims(mask.dims())?;
    let data = mask
        .keep()
        .iter()
        .zip(x_hat.as_slice().iter().zip(y.as_slice()))
        .map(|(&k, (&x, &v))| if k { v } else { x })
        .collect();
    Ok(Signal::from_raw(mask.dims().0, mask.dims().1, data))
}
