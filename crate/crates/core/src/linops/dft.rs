//! Separable 2-D DFT on row-major buffers.
//!
//! Forward transforms are unnormalized; inverse transforms divide by `N`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;
use crate::signal::Signal;

/// Cached FFT plans for one `height × width` grid.
#[derive(Clone)]
pub struct Dft2<T: Real> {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Dft2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl<T: Real> Dft2<T> {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, buf: &mut [Complex<T>], rows: &Arc<dyn Fft<T>>, cols: &Arc<dyn Fft<T>>) {
        assert_eq!(buf.len(), self.len(), "buffer does not match DFT grid");
        // rustfft processes consecutive chunks of the plan length.
        rows.process(buf);
        if self.height > 1 {
            let mut column = vec![Complex::new(T::zero(), T::zero()); self.height];
            for c in 0..self.width {
                for r in 0..self.height {
                    column[r] = buf[r * self.width + c];
                }
                cols.process(&mut column);
                for r in 0..self.height {
                    buf[r * self.width + c] = column[r];
                }
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let scale = T::one() / T::of_usize(self.len());
        buf.iter_mut().for_each(|v| *v = *v * scale);
    }

    pub fn forward_real(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, mut spec: Vec<Complex<T>>) -> Vec<T> {
        self.inverse(&mut spec);
        spec.into_iter().map(|v| v.re).collect()
    }

    pub fn signal_spectrum(&self, x: &Signal<T>) -> Vec<Complex<T>> {
        self.forward_real(x.as_slice())
    }

    pub fn spectrum_signal(&self, spec: Vec<Complex<T>>) -> Signal<T> {
        Signal::from_raw(self.height, self.width, self.inverse_real(spec))
    }

    /// Index of the frequency `(-k1, -k2)` modulo the grid.
    #[inline]
    pub fn mirror_index(&self, k: usize) -> usize {
        let (r, c) = (k / self.width, k % self.width);
        let mr = (self.height - r) % self.height;
        let mc = (self.width - c) % self.width;
        mr * self.width + mc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft2(x: &[f64], h: usize, w: usize) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); h * w];
        for k1 in 0..h {
            for k2 in 0..w {
                let mut acc = Complex::new(0.0, 0.0);
                for n1 in 0..h {
                    for n2 in 0..w {
                        let ang = -2.0
                            * std::f64::consts::PI
                            * ((k1 * n1) as f64 / h as f64 + (k2 * n2) as f64 / w as f64);
                        acc += Complex::from_polar(x[n1 * w + n2], ang);
                    }
                }
                out[k1 * w + k2] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_direct_summation() {
        let (h, w) = (3, 5);
        let x: Vec<f64> = (0..h * w).map(|i| ((i * 7) % 11) as f64 - 4.0).collect();
        let fast = Dft2::<f64>::new(h, w).forward_real(&x);
        for (a, b) in fast.iter().zip(naive_dft2(&x, h, w)) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_round_trip() {
        let plan = Dft2::<f64>::new(4, 6);
        let x: Vec<f64> = (0..24).map(|i| (i as f64).sin()).collect();
        let back = plan.inverse_real(plan.forward_real(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_of_dc_is_dc() {
        let plan = Dft2::<f64>::new(4, 6);
        assert_eq!(plan.mirror_index(0), 0);
        assert_eq!(plan.mirror_index(1), 5);
        assert_eq!(plan.mirror_index(6), 18);
    }
}
