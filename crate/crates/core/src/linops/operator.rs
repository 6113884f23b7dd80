//! Degradation operators: cyclic convolution and pixel masks.

use num_complex::Complex;

use super::dft::Dft2;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::Signal;

/// Relative threshold below which a spectral gain counts as zero.
pub const DEFAULT_RELATIVE_ZERO_TOL: f64 = 1e-8;

/// Convolution kernel anchored at `(height / 2, width / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    height: usize,
    width: usize,
    taps: Vec<T>,
}

impl<T: Real> Kernel<T> {
    /// Kernel with taps used as given.
    pub fn new(height: usize, width: usize, taps: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 || taps.len() != height * width {
            return Err(Error::Config(format!(
                "kernel of {} taps does not fill {height}x{width}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("kernel taps must be finite".into()));
        }
        Ok(Self {
            height,
            width,
            taps,
        })
    }

    /// Kernel rescaled to unit sum.
    pub fn normalized(height: usize, width: usize, taps: Vec<T>) -> Result<Self> {
        let k = Self::new(height, width, taps)?;
        let sum: T = k.taps.iter().copied().sum();
        if sum.abs() <= T::epsilon() {
            return Err(Error::Config("kernel taps sum to zero".into()));
        }
        Ok(Self {
            taps: k.taps.iter().map(|&t| t / sum).collect(),
            ..k
        })
    }

    pub fn identity() -> Self {
        Self {
            height: 1,
            width: 1,
            taps: vec![T::one()],
        }
    }

    pub fn uniform(height: usize, width: usize) -> Result<Self> {
        Self::normalized(height, width, vec![T::one(); height * width])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    /// Spatially reversed kernel. For odd sizes it is the kernel of the adjoint.
    pub fn reversed(&self) -> Self {
        let mut taps = self.taps.clone();
        taps.reverse();
        Self { taps, ..*self }
    }

    /// Zero-padded `dims` array with the anchor tap at index 0, wrapping cyclically.
    pub fn embed(&self, dims: (usize, usize)) -> Vec<T> {
        let (h, w) = dims;
        let (ch, cw) = self.center();
        let mut out = vec![T::zero(); h * w];
        for i in 0..self.height {
            for j in 0..self.width {
                let r = (i as isize - ch as isize).rem_euclid(h as isize) as usize;
                let c = (j as isize - cw as isize).rem_euclid(w as isize) as usize;
                out[r * w + c] += self.taps[i * self.width + j];
            }
        }
        out
    }
}

/// Cyclic convolution, stored by its DFT spectrum.
#[derive(Debug, Clone)]
pub struct Circulant<T: Real> {
    dims: (usize, usize),
    spectrum: Vec<Complex<T>>,
    kernel: Option<Kernel<T>>,
    dft: Dft2<T>,
}

impl<T: Real> Circulant<T> {
    pub fn from_kernel(kernel: Kernel<T>, dims: (usize, usize)) -> Result<Self> {
        check_dims(dims)?;
        let dft = Dft2::new(dims.0, dims.1);
        let spectrum = dft.forward_real(&kernel.embed(dims));
        Ok(Self {
            dims,
            spectrum,
            kernel: Some(kernel),
            dft,
        })
    }

    /// Builds the operator from a conjugate-symmetric spectrum, so it maps reals to reals.
    pub fn from_spectrum(dims: (usize, usize), spectrum: Vec<Complex<T>>) -> Result<Self> {
        check_dims(dims)?;
        if spectrum.len() != dims.0 * dims.1 {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: (1, spectrum.len()),
            });
        }
        let dft = Dft2::new(dims.0, dims.1);
        let scale = spectrum.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        let tol = T::of(1e-9) * (scale + T::one());
        for (k, v) in spectrum.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Config(format!("spectrum entry {k} is not finite")));
            }
            if (v - spectrum[dft.mirror_index(k)].conj()).norm() > tol {
                return Err(Error::Config(format!(
                    "spectrum is not conjugate-symmetric at index {k}"
                )));
            }
        }
        Ok(Self {
            dims,
            spectrum,
            kernel: None,
            dft,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn spectrum(&self) -> &[Complex<T>] {
        &self.spectrum
    }

    /// The spatial kernel, when the operator was built from one.
    pub fn kernel(&self) -> Option<&Kernel<T>> {
        self.kernel.as_ref()
    }

    pub fn dft(&self) -> &Dft2<T> {
        &self.dft
    }

    pub fn default_zero_tol(&self) -> T {
        default_zero_tol(&self.spectrum)
    }

    /// Multiplies the spectrum of `x` by `gain(k, h_k)`.
    pub fn filter(
        &self,
        x: &Signal<T>,
        gain: impl Fn(usize, Complex<T>) -> Complex<T>,
    ) -> Result<Signal<T>> {
        x.ensure_dims(self.dims)?;
        let mut spec = self.dft.signal_spectrum(x);
        for (k, (v, &h)) in spec.iter_mut().zip(&self.spectrum).enumerate() {
            *v = *v * gain(k, h);
        }
        Ok(self.dft.spectrum_signal(spec))
    }
}

/// Diagonal 0/1 operator keeping pixels where the mask is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMask {
    dims: (usize, usize),
    keep: Vec<bool>,
}

impl DiagonalMask {
    pub fn new(dims: (usize, usize), keep: Vec<bool>) -> Result<Self> {
        check_dims(dims)?;
        if keep.len() != dims.0 * dims.1 {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: (1, keep.len()),
            });
        }
        Ok(Self { dims, keep })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn available_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    fn apply<T: Real>(&self, x: &Signal<T>) -> Result<Signal<T>> {
        x.ensure_dims(self.dims)?;
        let data = x
            .as_slice()
            .iter()
            .zip(&self.keep)
            .map(|(&v, &k)| if k { v } else { T::zero() })
            .collect();
        Ok(Signal::from_raw(self.dims.0, self.dims.1, data))
    }
}

/// The linear degradation `H` of the observation model `y = Hx + n`.
#[derive(Debug, Clone)]
pub enum DegradationOperator<T: Real> {
    Circulant(Circulant<T>),
    DiagonalMask(DiagonalMask),
}

impl<T: Real> DegradationOperator<T> {
    pub fn identity(dims: (usize, usize)) -> Result<Self> {
        Ok(Self::Circulant(Circulant::from_kernel(
            Kernel::identity(),
            dims,
        )?))
    }

    pub fn convolution(kernel: Kernel<T>, dims: (usize, usize)) -> Result<Self> {
        Ok(Self::Circulant(Circulant::from_kernel(kernel, dims)?))
    }

    pub fn mask(dims: (usize, usize), keep: Vec<bool>) -> Result<Self> {
        Ok(Self::DiagonalMask(DiagonalMask::new(dims, keep)?))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Circulant(_) => "circulant",
            Self::DiagonalMask(_) => "mask",
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Circulant(c) => c.dims,
            Self::DiagonalMask(m) => m.dims,
        }
    }

    pub fn len(&self) -> usize {
        let (h, w) = self.dims();
        h * w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, x: &Signal<T>) -> Result<Signal<T>> {
        match self {
            Self::Circulant(c) => c.filter(x, |_, h| h),
            Self::DiagonalMask(m) => m.apply(x),
        }
    }

    pub fn adjoint(&self, v: &Signal<T>) -> Result<Signal<T>> {
        match self {
            Self::Circulant(c) => c.filter(v, |_, h| h.conj()),
            Self::DiagonalMask(m) => m.apply(v),
        }
    }

    /// `HᵀH x`.
    pub fn normal(&self, x: &Signal<T>) -> Result<Signal<T>> {
        match self {
            Self::Circulant(c) => c.filter(x, |_, h| Complex::new(h.norm_sqr(), T::zero())),
            Self::DiagonalMask(m) => m.apply(x),
        }
    }

    pub fn spectrum(&self) -> Result<&[Complex<T>]> {
        match self {
            Self::Circulant(c) => Ok(&c.spectrum),
            Self::DiagonalMask(_) => Err(Error::UnsupportedKind {
                op: "spectrum",
                kind: "mask",
            }),
        }
    }

    /// `zero_tol` defaults to 1e-8 times the largest spectral magnitude.
    fn resolve_tol(&self, zero_tol: Option<T>) -> T {
        match (zero_tol, self) {
            (Some(t), _) => t,
            (None, Self::Circulant(c)) => c.default_zero_tol(),
            (None, Self::DiagonalMask(_)) => T::zero(),
        }
    }

    /// `H⁺y`. For a mask the pseudoinverse is the mask itself.
    pub fn pseudoinverse_filter(&self, y: &Signal<T>, zero_tol: Option<T>) -> Result<Signal<T>> {
        let tol = self.resolve_tol(zero_tol);
        match self {
            Self::Circulant(c) => c.filter(y, |_, h| pinv_gain(h, tol)),
            Self::DiagonalMask(m) => m.apply(y),
        }
    }

    /// `H H⁺ y`, the orthogonal projection onto the range of `H`.
    pub fn range_projection(&self, y: &Signal<T>, zero_tol: Option<T>) -> Result<Signal<T>> {
        let tol = self.resolve_tol(zero_tol);
        match self {
            Self::Circulant(c) => c.filter(y, |_, h| {
                if h.norm() > tol {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }),
            Self::DiagonalMask(m) => m.apply(y),
        }
    }

    /// Rank `N_H`.
    pub fn rank_count(&self, zero_tol: Option<T>) -> usize {
        let tol = self.resolve_tol(zero_tol);
        match self {
            Self::Circulant(c) => rank_of_spectrum(&c.spectrum, tol),
            Self::DiagonalMask(m) => m.available_count(),
        }
    }
}

fn check_dims(dims: (usize, usize)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::InvalidSignal(format!(
            "operator dimensions must be positive, got {}x{}",
            dims.0, dims.1
        )));
    }
    Ok(())
}

pub fn default_zero_tol<T: Real>(spectrum: &[Complex<T>]) -> T {
    let peak = spectrum.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    T::of(DEFAULT_RELATIVE_ZERO_TOL) * peak
}

#[inline]
fn pinv_gain<T: Real>(h: Complex<T>, tol: T) -> Complex<T> {
    if h.norm() > tol {
        h.inv()
    } else {
        Complex::new(T::zero(), T::zero())
    }
}

/// Elementwise spectral pseudoinverse: `1/h` where `|h| > zero_tol`, else 0.
pub fn pseudoinverse_spectrum<T: Real>(spectrum: &[Complex<T>], zero_tol: T) -> Vec<Complex<T>> {
    spectrum.iter().map(|&h| pinv_gain(h, zero_tol)).collect()
}

pub fn rank_of_spectrum<T: Real>(spectrum: &[Complex<T>], zero_tol: T) -> usize {
    spectrum.iter().filter(|h| h.norm() > zero_tol).count()
}
