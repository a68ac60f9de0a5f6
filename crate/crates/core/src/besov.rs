//! The Besov-type norm `||F||_{B^s} = int |F^(tau)| (1 + |tau|)^s dtau` of a
//! compactly supported spectral function, by FFT quadrature.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::symbols::SymbolFn;

pub const DEFAULT_WINDOW: f64 = 64.0;
pub const DEFAULT_SAMPLES: usize = 1 << 14;

/// Gregory end weights for a half-line trapezoid sum starting at the first sample.
const GREGORY: [f64; 4] = [1.0 / 12.0, -1.0 / 24.0, 19.0 / 720.0, -3.0 / 160.0];

fn forward_differences(v: &[f64]) -> [f64; 4] {
    let mut d = [0.0; 4];
    let mut row: Vec<f64> = v.iter().take(5).copied().collect();
    for slot in d.iter_mut() {
        row = row.windows(2).map(|w| w[1] - w[0]).collect();
        *slot = row[0];
    }
    d
}

/// `int_0^inf g` from equally spaced samples `g_0, g_1, ...` with spacing `h`.
pub fn half_line_quadrature(values: &[f64], h: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let trapezoid = values.iter().sum::<f64>() - 0.5 * values[0];
    if values.len() < 5 {
        return h * trapezoid;
    }
    let d = forward_differences(values);
    let correction: f64 = GREGORY.iter().zip(d).map(|(w, dk)| w * dk).sum();
    h * (trapezoid + correction)
}

/// `||F||_{B^s}` with `F` sampled at `samples` points of `[0, window)`.
///
/// The transform is unitary, `F^(tau) = (2 pi)^{-1/2} int F(lambda) e^{-i lambda tau} dlambda`,
/// evaluated on the frequency lattice `2 pi k / window`; the integrand has a
/// corner at `tau = 0`, so each half-line gets its own end correction.
pub fn besov_norm<T: Real>(f: &SymbolFn<T>, s: f64, window: f64, samples: usize) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(invalid("s", "Besov order must be non-negative"));
    }
    let hi = match f.support().hi {
        Some(hi) => hi.to_f64_lossy(),
        None => return Err(Error::UnboundedSupport(f.label().to_string())),
    };
    if !(window > 0.0) || hi >= window {
        return Err(invalid(
            "window",
            format!("window {window} must contain the support [0, {hi}]"),
        ));
    }
    if samples < 16 || !samples.is_power_of_two() {
        return Err(invalid(
            "samples",
            "sample count must be a power of two, at least 16",
        ));
    }
    let step = window / samples as f64;
    let mut data: Vec<Complex<f64>> = (0..samples)
        .map(|j| {
            let v = f.eval(T::lit(j as f64 * step));
            Complex::new(v.re.to_f64_lossy(), v.im.to_f64_lossy())
        })
        .collect();
    FftPlanner::new()
        .plan_fft_forward(samples)
        .process(&mut data);
    let norm = step / (2.0 * std::f64::consts::PI).sqrt();
    let dtau = 2.0 * std::f64::consts::PI / window;
    let integrand = |k: usize| {
        let tau = dtau * k.min(samples - k) as f64;
        data[k].norm() * norm * (1.0 + tau).powf(s)
    };
    let half = samples / 2;
    let positive: Vec<f64> = (0..half).map(integrand).collect();
    let negative: Vec<f64> = std::iter::once(0)
        .chain((half..samples).rev())
        .map(integrand)
        .collect();
    Ok(half_line_quadrature(&positive, dtau) + half_line_quadrature(&negative, dtau))
}

/// `besov_norm` with the default window and sample count.
pub fn besov_norm_default<T: Real>(f: &SymbolFn<T>, s: f64) -> Result<f64> {
    besov_norm(f, s, DEFAULT_WINDOW, DEFAULT_SAMPLES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{cutoff_pair, dyadic_bump, schrodinger_symbol, Support};

    #[test]
    fn gregory_is_high_order() {
        // Oracle: int_0^inf e^{-x} dx = 1.
        let h = 0.1;
        let v: Vec<f64> = (0..2000).map(|i| (-(i as f64) * h).exp()).collect();
        let plain = h * (v.iter().sum::<f64>() - 0.5 * v[0]);
        let corrected = half_line_quadrature(&v, h);
        assert!((corrected - 1.0).abs() < 1e-7, "{corrected}");
        assert!((corrected - 1.0).abs() < 1e-3 * (plain - 1.0).abs());
    }

    #[test]
    fn zero_function() {
        let z = SymbolFn::<f64>::real("zero", Support::bounded(0.0, 1.0), |_| 0.0);
        assert_eq!(besov_norm_default(&z, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let phi = dyadic_bump::<f64>();
        assert!(matches!(
            besov_norm_default(&phi, -0.1),
            Err(Error::InvalidParameter { .. })
        ));
        let (_, phi1) = cutoff_pair::<f64>();
        assert!(matches!(
            besov_norm_default(&phi1, 1.0),
            Err(Error::UnboundedSupport(_))
        ));
        assert!(besov_norm(&phi, 1.0, 0.5, 1024).is_err());
        assert!(besov_norm(&phi, 1.0, 64.0, 1000).is_err());
    }

    #[test]
    fn monotone_in_order() {
        let phi = dyadic_bump::<f64>();
        let mut prev = 0.0;
        for s in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let v = besov_norm_default(&phi, s).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn converges_under_refinement() {
        let phi = dyadic_bump::<f64>().mul(&schrodinger_symbol(3.0, 0.5).unwrap());
        let a = besov_norm(&phi, 1.5, 64.0, 1 << 14).unwrap();
        let b = besov_norm(&phi, 1.5, 128.0, 1 << 15).unwrap();
        assert!(((a - b) / b).abs() < 1e-6, "{a} {b}");
    }

    #[test]
    fn smooth_bump_lower_bound() {
        // By inversion, sup |F| <= (2 pi)^{-1/2} ||F||_{B^0}.
        let phi = dyadic_bump::<f64>();
        let v = besov_norm_default(&phi, 0.0).unwrap();
        assert!(v >= (2.0 * std::f64::consts::PI).sqrt() * (1.0 - 1e-9));
    }
}
