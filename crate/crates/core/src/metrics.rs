use crate::error::Result;
use crate::scalar::Real;
use crate::signal::Signal;

pub fn mse<T: Real>(a: &Signal<T>, b: &Signal<T>) -> Result<f64> {
    Ok(a.distance_sq(b)?.to_f64_lossy() / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical inputs.
pub fn psnr<T: Real>(a: &Signal<T>, b: &Signal<T>, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mse() {
        let a = Signal::new(1, 2, vec![0.0, 0.0]).unwrap();
        let b = Signal::new(1, 2, vec![1.0, -1.0]).unwrap();
        assert!((psnr(&a, &b, 255.0).unwrap() - 48.130_803_608).abs() < 1e-8);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
    }
}
