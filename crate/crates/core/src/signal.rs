//! Real-valued 1-D and 2-D signals stored row-major.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A finite real-valued array of `height × width` samples.
///
/// One-dimensional signals use `height == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Signal<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidSignal(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidSignal(format!(
                "{} samples do not fill {height}x{width}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_vec(data: Vec<T>) -> Result<Self> {
        let n = data.len();
        Self::new(1, n, data)
    }

    pub fn from_f64(height: usize, width: usize, data: &[f64]) -> Result<Self> {
        Self::new(height, width, data.iter().map(|&v| T::of(v)).collect())
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(
            height > 0 && width > 0,
            "signal dimensions must be positive"
        );
        Self {
            height,
            width,
            data: vec![T::zero(); height * width],
        }
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        let mut s = Self::zeros(height, width);
        s.data.iter_mut().for_each(|v| *v = value);
        s
    }

    /// Builds a signal without the finiteness scan. Internal arithmetic only.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: T) {
        self.data[row * self.width + col] = v;
    }

    pub fn ensure_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: self.dims(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::from_raw(
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Elementwise combination of two equally sized signals.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        other.ensure_dims(self.dims())?;
        Ok(Self::from_raw(
            self.height,
            self.width,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, k: T) -> Self {
        self.map(|v| v * k)
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        other.ensure_dims(self.dims())?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm_sq(&self) -> T {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn distance_sq(&self, other: &Self) -> Result<T> {
        other.ensure_dims(self.dims())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum())
    }

    /// Converts to another scalar width.
    pub fn cast<U: Real>(&self) -> Signal<U> {
        Signal::from_raw(
            self.height,
            self.width,
            self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        )
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.to_f64_lossy()).collect()
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
