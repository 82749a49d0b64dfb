//! Special functions used by the Von Mises model. The scaled Bessel function
//! is local because the exponentially scaled form is needed for large κ.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 30.0;

/// Exponentially scaled modified Bessel function `e^{-κ} I₀(κ)` for κ ≥ 0.
///
/// Power series below κ = 30, asymptotic expansion above; both are accurate
/// to a few ulps in their range.
pub fn bessel_i0_scaled(kappa: f64) -> f64 {
    let k = kappa.abs();
    if k <= SERIES_LIMIT {
        let q = 0.25 * k * k;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut j = 1.0;
        while term > 1e-17 * sum {
            term *= q / (j * j);
            sum += term;
            j += 1.0;
        }
        sum * (-k).exp()
    } else {
        // I₀(κ) e^{-κ} √(2πκ) ~ Σ ((2j-1)!!)² / (j! (8κ)^j)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut j: f64 = 1.0;
        loop {
            let next = term * (2.0 * j - 1.0).powi(2) / (j * 8.0 * k);
            if next.abs() >= term.abs() {
                break;
            }
            if next.abs() < 1e-17 * sum {
                sum += next;
                break;
            }
            term = next;
            sum += term;
            j += 1.0;
        }
        sum / (2.0 * PI * k).sqrt()
    }
}

/// `I₀(κ)`; overflows to `inf` for κ ≳ 713, use [`bessel_i0_scaled`] there.
pub fn bessel_i0(kappa: f64) -> f64 {
    bessel_i0_scaled(kappa) * kappa.abs().exp()
}

/// Error function `2/√π ∫₀^x e^{-t²} dt`.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;

    fn i0_by_quadrature(k: f64) -> f64 {
        integrate(|t| (k * t.cos()).exp(), 0.0, PI, 1e-14 * (k.exp())) / PI
    }

    fn erf_by_quadrature(x: f64) -> f64 {
        2.0 / PI.sqrt() * integrate(|t| (-t * t).exp(), 0.0, x, 1e-15)
    }

    #[test]
    fn i0_reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert_relative_eq!(bessel_i0(1.0), 1.2660658778, max_relative = 1e-10);
        for k in [
            0.1, 0.5, 1.0, 2.5, 7.0, 15.0, 29.0, 31.0, 60.0, 100.0, 300.0,
        ] {
            assert_relative_eq!(bessel_i0(k), i0_by_quadrature(k), max_relative = 1e-10);
        }
    }

    #[test]
    fn i0_scaled_large_kappa() {
        // e^{-κ} I₀(κ) → 1/√(2πκ) (1 + 1/(8κ) + ...)
        let k = 1e6;
        let expect = (1.0 + 1.0 / (8.0 * k)) / (2.0 * PI * k).sqrt();
        assert_relative_eq!(bessel_i0_scaled(k), expect, max_relative = 1e-11);
        // continuity across the series/asymptotic switch
        let lo = bessel_i0_scaled(SERIES_LIMIT);
        let hi = bessel_i0_scaled(SERIES_LIMIT + 1e-9);
        assert_relative_eq!(lo, hi, max_relative = 1e-9);
    }

    #[test]
    fn i0_is_increasing() {
        let mut prev = bessel_i0(0.0);
        for i in 1..500 {
            let v = bessel_i0(i as f64 * 0.2);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn erf_reference_values() {
        assert_eq!(erf(0.0), 0.0);
        assert_relative_eq!(erf(1.0), 0.8427007929, max_relative = 1e-10);
        for x in [1e-8, 0.01, 0.3, 1.0, 1.7, 2.5, 3.3, 4.5, 5.9] {
            assert_relative_eq!(erf(x), erf_by_quadrature(x), max_relative = 1e-10);
            assert_eq!(erf(-x), -erf(x));
        }
        assert_eq!(erf(10.0), 1.0);
        assert_eq!(erf(-10.0), -1.0);
    }
}
