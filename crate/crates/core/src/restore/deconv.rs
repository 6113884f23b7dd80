//! The ℓ2-constrained deconvolution stage and its closed forms.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linops::{Circulant, DegradationOperator, DiagonalMask};
use crate::scalar::Real;
use crate::signal::{dot, Signal};

/// A full-size target `z̃` and the pixels it constrains (`None`: all of them).
#[derive(Debug, Clone)]
pub struct Target<T> {
    pub value: Signal<T>,
    pub covered: Option<Vec<bool>>,
}

impl<T: Real> Target<T> {
    pub fn full(value: Signal<T>) -> Self {
        Self {
            value,
            covered: None,
        }
    }
}

/// Sum of the targets over their covered pixels and the per-pixel coverage count.
pub(crate) struct Aggregate<T> {
    pub sum: Vec<T>,
    pub count: Vec<u32>,
}

pub(crate) fn aggregate<T: Real>(
    dims: (usize, usize),
    targets: &[Target<T>],
) -> Result<Aggregate<T>> {
    let n = dims.0 * dims.1;
    let mut sum = vec![T::zero(); n];
    let mut count = vec![0u32; n];
    for t in targets {
        t.value.ensure_dims(dims)?;
        let v = t.value.as_slice();
        match &t.covered {
            None => {
                for k in 0..n {
                    sum[k] += v[k];
                    count[k] += 1;
                }
            }
            Some(mask) => {
                if mask.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: dims,
                        found: (1, mask.len()),
                    });
                }
                for k in 0..n {
                    if mask[k] {
                        sum[k] += v[k];
                        count[k] += 1;
                    }
                }
            }
        }
    }
    if let Some(index) = count.iter().position(|&c| c == 0) {
        return Err(Error::Uncovered { index });
    }
    Ok(Aggregate { sum, count })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 2000,
        }
    }
}

/// Conjugate gradients for a symmetric positive (semi)definite `apply`.
/// Stops when `‖b − Ax‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T]) -> Result<Vec<T>>,
    b: &[T],
    x0: Option<&[T]>,
    settings: CgSettings,
) -> Result<Vec<T>> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let tol = T::of(settings.tol) * b_norm;
    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let ax = apply(&x)?;
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= tol {
        return Ok(x);
    }
    let mut p = r.clone();
    for _ in 0..settings.max_iters {
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= tol {
            return Ok(x);
        }
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }
    // Report the true residual, not the recursively updated one.
    let ax = apply(&x)?;
    let res: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let residual = (dot(&res, &res).sqrt() / b_norm).to_f64_lossy();
    if residual <= settings.tol {
        return Ok(x);
    }
    Err(Error::NotConverged {
        iterations: settings.max_iters,
        residual,
    })
}

/// Solves `(HᵀH + (β/2)·C) x = Hᵀy + (β/2)·Σⱼ z̃ʲ` by conjugate gradients, where `C`
/// counts the targets covering each pixel.
pub fn l2_deconvolve<T: Real>(
    h: &DegradationOperator<T>,
    y: &Signal<T>,
    targets: &[Target<T>],
    beta: f64,
    cg: CgSettings,
    initial: Option<&Signal<T>>,
) -> Result<Signal<T>> {
    let dims = h.dims();
    y.ensure_dims(dims)?;
    let agg = aggregate(dims, targets)?;
    let half = T::of(beta / 2.0);
    let hty = h.adjoint(y)?;
    let rhs: Vec<T> = hty
        .as_slice()
        .iter()
        .zip(&agg.sum)
        .map(|(&a, &s)| a + half * s)
        .collect();
    let weights: Vec<T> = agg
        .count
        .iter()
        .map(|&c| half * T::of(f64::from(c)))
        .collect();
    let apply = |v: &[T]| -> Result<Vec<T>> {
        let normal = h.normal(&Signal::from_raw(dims.0, dims.1, v.to_vec()))?;
        Ok(normal
            .as_slice()
            .iter()
            .zip(v)
            .zip(&weights)
            .map(|((&a, &x), &w)| a + w * x)
            .collect())
    };
    if let Some(x0) = initial {
        x0.ensure_dims(dims)?;
    }
    let x = conjugate_gradient(apply, &rhs, initial.map(Signal::as_slice), cg)?;
    Ok(Signal::from_raw(dims.0, dims.1, x))
}

/// Componentwise DFT solution for one full-domain target:
/// `x̂_k = (|h_k|² ỹ_k + (β/2) z̃_k) / (|h_k|² + β/2)` with `ỹ = H⁺y`.
/// Components with `|h_k| ≤ zero_tol` take `z̃_k`.
pub fn fourier_l2_deconvolve<T: Real>(
    h: &Circulant<T>,
    y: &Signal<T>,
    z: &Signal<T>,
    beta: f64,
    zero_tol: Option<T>,
) -> Result<Signal<T>> {
    y.ensure_dims(h.dims())?;
    z.ensure_dims(h.dims())?;
    let tol = zero_tol.unwrap_or_else(|| h.default_zero_tol());
    let dft = h.dft();
    let yf = dft.signal_spectrum(y);
    let zf = dft.signal_spectrum(z);
    let half = T::of(beta / 2.0);
    let out: Vec<Complex<T>> = h
        .spectrum()
        .iter()
        .zip(yf.iter().zip(&zf))
        .map(|(&hk, (&yk, &zk))| {
            if hk.norm() <= tol {
                return zk;
            }
            let g = hk.norm_sqr();
            let ytilde = yk / hk;
            (ytilde * g + zk * half) / (g + half)
        })
        .collect();
    Ok(dft.spectrum_signal(out))
}

/// Closed-form stage for a mask: kept pixels average `y` with the targets,
/// missing pixels take the targets' mean.
pub fn inpaint_step<T: Real>(
    mask: &DiagonalMask,
    y: &Signal<T>,
    targets: &[Target<T>],
    beta: f64,
) -> Result<Signal<T>> {
    let dims = mask.dims();
    y.ensure_dims(dims)?;
    let agg = aggregate(dims, targets)?;
    let half = T::of(beta / 2.0);
    let data = mask
        .keep()
        .iter()
        .zip(y.as_slice())
        .zip(agg.sum.iter().zip(&agg.count))
        .map(|((&keep, &yk), (&s, &c))| {
            let c = T::of(f64::from(c));
            if keep {
                (yk + half * s) / (T::one() + half * c)
            } else {
                s / c
            }
        })
        .collect();
    Ok(Signal::from_raw(dims.0, dims.1, data))
}

/// Stage-6 solve used by the ADMM loop: closed form for masks, CG otherwise.
pub(crate) fn solve_stage<T: Real>(
    h: &DegradationOperator<T>,
    y: &Signal<T>,
    targets: &[Target<T>],
    beta: f64,
    cg: CgSettings,
    initial: Option<&Signal<T>>,
) -> Result<Signal<T>> {
    match h {
        DegradationOperator::DiagonalMask(m) => inpaint_step(m, y, targets, beta),
        DegradationOperator::Circulant(_) => l2_deconvolve(h, y, targets, beta, cg, initial),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::Kernel;

    #[test]
    fn identity_with_beta_two_averages() {
        let h = DegradationOperator::identity((1, 4)).unwrap();
        let y = Signal::from_vec(vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let z = Signal::from_vec(vec![3.0, 0.0, 1.0, 8.0]).unwrap();
        let x =
            l2_deconvolve(&h, &y, &[Target::full(z)], 2.0, CgSettings::default(), None).unwrap();
        for (a, b) in x.as_slice().iter().zip([2.0, 1.0, 2.0, 6.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fourier_scalar_example() {
        // |h|² = 3, β = 2, ỹ = 4, z̃ = 0 gives 3 at every frequency, i.e. 3·δ in space.
        let s3 = 3f64.sqrt();
        let c = Circulant::from_spectrum((1, 1), vec![Complex::new(s3, 0.0)]).unwrap();
        let y = Signal::from_vec(vec![4.0 * s3]).unwrap();
        let z = Signal::from_vec(vec![0.0]).unwrap();
        let x = fourier_l2_deconvolve(&c, &y, &z, 2.0, None).unwrap();
        assert!((x.as_slice()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_null_component_copies_target() {
        let k = Kernel::new(1, 2, vec![0.5f64, 0.5]).unwrap();
        let DegradationOperator::Circulant(c) =
            DegradationOperator::convolution(k, (1, 2)).unwrap()
        else {
            unreachable!()
        };
        let y = Signal::from_vec(vec![1.0f64, 1.0]).unwrap();
        let z = Signal::from_vec(vec![5.0, -5.0]).unwrap();
        let x = fourier_l2_deconvolve(&c, &y, &z, 0.0, None).unwrap();
        // DC from ỹ (=1), alternating component from z̃.
        assert!((x.as_slice()[0] - 6.0).abs() < 1e-12);
        assert!((x.as_slice()[1] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn inpaint_examples() {
        let m = DiagonalMask::new((1, 2), vec![false, true]).unwrap();
        let y = Signal::from_vec(vec![0.0f64, 1.0]).unwrap();
        let t1 = Target::full(Signal::from_vec(vec![4.0, 4.0]).unwrap());
        let t2 = Target::full(Signal::from_vec(vec![6.0, 6.0]).unwrap());
        let x = inpaint_step(&m, &y, &[t1.clone(), t2], 2.0).unwrap();
        assert!((x.as_slice()[0] - 5.0).abs() < 1e-15);
        assert!((x.as_slice()[1] - 11.0 / 3.0).abs() < 1e-15);
        let x0 = inpaint_step(&m, &y, &[t1], 0.0).unwrap();
        assert_eq!(x0.as_slice(), &[4.0, 1.0]);
    }

    #[test]
    fn uncovered_pixel_is_an_error() {
        let m = DiagonalMask::new((1, 2), vec![true, true]).unwrap();
        let y = Signal::from_vec(vec![0.0, 1.0]).unwrap();
        let t = Target {
            value: Signal::from_vec(vec![1.0, 1.0]).unwrap(),
            covered: Some(vec![false, true]),
        };
        assert!(matches!(
            inpaint_step(&m, &y, &[t], 1.0),
            Err(Error::Uncovered { index: 0 })
        ));
    }

    #[test]
    fn cg_reports_non_convergence() {
        let k = Kernel::<f64>::uniform(1, 5).unwrap();
        let h = DegradationOperator::convolution(k, (1, 64)).unwrap();
        let y = Signal::new(1, 64, (0..64).map(|i| (i as f64).sin()).collect()).unwrap();
        let z = Target::full(Signal::zeros(1, 64));
        let r = l2_deconvolve(
            &h,
            &y,
            &[z],
            1e-6,
            CgSettings {
                tol: 1e-12,
                max_iters: 2,
            },
            None,
        );
        assert!(matches!(r, Err(Error::NotConverged { iterations: 2, .. })));
    }
}
