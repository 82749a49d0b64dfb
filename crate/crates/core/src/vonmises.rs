//! Truncated Von Mises angle-error model and the expected eavesdropper
//! covariance `E{h(θ̂+Δθ) h^H(θ̂+Δθ)}`.
//!
//! Two routes are provided for the covariance. The closed form follows the
//! second-order Taylor treatment of the phase and of the Von Mises exponent,
//! which turns every entry into Gaussian moments over the truncation
//! interval. The quadrature route integrates the exact entry
//! `(g/N) ∫ e^{jα cos(θ̂+x)} f(x) dx` numerically and serves as the
//! independent reference.
//!
//! Both integrate the *un-normalized* density over `[-Δθ_max, Δθ_max]`, so
//! their diagonals equal `(g/N)·P_in` with `P_in` the truncated mass.
//! [`ExpectedCovariance::renormalized`] divides that mass out.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{psd_part, CMat};
use crate::model::{ArrayGeometry, Scenario};
use crate::quadrature::integrate;
use crate::special::{bessel_i0_scaled, erf};

/// Rejection cap for [`sample_truncated_vonmises`].
pub const MAX_REJECTIONS: usize = 1_000_000;

const QUADRATURE_TOL: f64 = 1e-12;

/// Von Mises angle error restricted to `[-Δθ_max, Δθ_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesParams {
    mean: f64,
    concentration: f64,
    max_error: f64,
}

impl VonMisesParams {
    pub fn new(mean: f64, concentration: f64, max_error: f64) -> Result<Self> {
        if !(concentration >= 0.0 && concentration.is_finite()) {
            return Err(Error::invalid(
                "kappa",
                format!("κ must be finite and ≥ 0, got {concentration}"),
            ));
        }
        if !(max_error > 0.0 && max_error <= PI) {
            return Err(Error::invalid(
                "delta_theta_max",
                format!("Δθ_max must lie in (0, π], got {max_error}"),
            ));
        }
        if !(mean.abs() < max_error) {
            return Err(Error::invalid(
                "mu",
                format!("|μ| must be below Δθ_max, got μ={mean}, Δθ_max={max_error}"),
            ));
        }
        Ok(Self {
            mean,
            concentration,
            max_error,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    pub fn with_max_error(&self, max_error: f64) -> Result<Self> {
        Self::new(self.mean, self.concentration, max_error)
    }

    /// `1 / (2π I₀(κ))` times `e^{κ}`, i.e. the peak density.
    fn peak_density(&self) -> f64 {
        1.0 / (2.0 * PI * bessel_i0_scaled(self.concentration))
    }
}

/// `e^{κ cos(θ-μ)} / (2π I₀(κ))`.
pub fn vonmises_pdf(theta: f64, params: &VonMisesParams) -> f64 {
    let k = params.concentration;
    params.peak_density() * (k * ((theta - params.mean).cos() - 1.0)).exp()
}

/// `∫_{-Δθ_max}^{Δθ_max} g(θ) f(θ) dθ`. The range is clipped to
/// `μ ± 12/√κ`, beyond which `f` is below `e^{-72}` of its peak, and split
/// at `μ` so that a narrow peak is always sampled.
pub fn integrate_weighted<G: Fn(f64) -> f64>(g: G, params: &VonMisesParams, abs_tol: f64) -> f64 {
    let d = params.max_error;
    let reach = if params.concentration > 0.0 {
        12.0 / params.concentration.sqrt()
    } else {
        f64::INFINITY
    };
    let lo = (-d).max(params.mean - reach);
    let hi = d.min(params.mean + reach);
    let f = |x: f64| g(x) * vonmises_pdf(x, params);
    integrate(f, lo, params.mean, 0.5 * abs_tol) + integrate(f, params.mean, hi, 0.5 * abs_tol)
}

/// `P_in = ∫_{-Δθ_max}^{Δθ_max} f(θ) dθ`.
pub fn truncated_mass(params: &VonMisesParams) -> f64 {
    integrate_weighted(|_| 1.0, params, 1e-14)
}

/// Draw from the full-circle Von Mises distribution, wrapped to `[-π, π)`.
///
/// Best–Fisher rejection; uniform below κ = 1e-8 and a wrapped normal above
/// κ = 1e5 where the two agree to O(1/κ²).
pub fn sample_vonmises<R: Rng + ?Sized>(mean: f64, kappa: f64, rng: &mut R) -> f64 {
    let raw = if kappa < 1e-8 {
        PI * (2.0 * rng.random::<f64>() - 1.0)
    } else if kappa > 1e5 {
        let z: f64 = StandardNormal.sample(rng);
        mean + z / kappa.sqrt()
    } else {
        let s = 0.5 / kappa;
        let r = s + (1.0 + s * s).sqrt();
        let w = loop {
            let z = (PI * rng.random::<f64>()).cos();
            let w = (1.0 + r * z) / (r + z);
            let y = kappa * (r - w);
            let v: f64 = rng.random();
            if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
                break w;
            }
        };
        let a = w.clamp(-1.0, 1.0).acos();
        if rng.random::<f64>() < 0.5 {
            mean - a
        } else {
            mean + a
        }
    };
    wrap_angle(raw)
}

/// Wrap to `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Draw from the Von Mises density restricted and renormalized to
/// `[-Δθ_max, Δθ_max]` by rejection from the full-circle sampler.
///
/// Intervals narrow against both the circle and the spread
/// (`Δθ_max < 0.1`, `κΔθ_max² < 0.01`) would rarely be hit that way; they use
/// a uniform proposal on the interval instead, accepted with probability
/// above `e^{-0.02}` since `|θ - μ| ≤ 2Δθ_max`.
pub fn sample_truncated_vonmises<R: Rng + ?Sized>(
    params: &VonMisesParams,
    rng: &mut R,
) -> Result<f64> {
    let d = params.max_error;
    let k = params.concentration;
    if d < 0.1 && k * d * d < 0.01 {
        for _ in 0..MAX_REJECTIONS {
            let x = rng.random_range(-d..=d);
            let u: f64 = rng.random();
            if u <= (k * ((x - params.mean).cos() - 1.0)).exp() {
                return Ok(x);
            }
        }
        return Err(Error::SamplerExhausted(MAX_REJECTIONS));
    }
    for _ in 0..MAX_REJECTIONS {
        let x = sample_vonmises(params.mean, params.concentration, rng);
        if x.abs() <= params.max_error {
            return Ok(x);
        }
    }
    Err(Error::SamplerExhausted(MAX_REJECTIONS))
}

/// `∫_{-a}^{b} t^n e^{-κt²/2} dt` for n ≤ 3.
fn gaussian_moment(n: u32, a: f64, b: f64, kappa: f64) -> f64 {
    let span = a.abs().max(b.abs());
    if kappa * span * span < 0.5 {
        // termwise integration of the exponential series
        let mut sum = 0.0;
        let mut coef = 1.0;
        for j in 0..60u32 {
            let p = (n + 2 * j + 1) as i32;
            let term = coef * (b.powi(p) - (-a).powi(p)) / p as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && j > 1 {
                break;
            }
            coef *= -0.5 * kappa / (j + 1) as f64;
        }
        return sum;
    }
    let q = (0.5 * kappa).sqrt();
    let ea = (-0.5 * kappa * a * a).exp();
    let eb = (-0.5 * kappa * b * b).exp();
    let g0 = (PI / (2.0 * kappa)).sqrt() * (erf(q * a) + erf(q * b));
    match n {
        0 => g0,
        1 => (ea - eb) / kappa,
        2 => (g0 - a * ea - b * eb) / kappa,
        3 => ((2.0 / kappa + a * a) * ea - (2.0 / kappa + b * b) * eb) / kappa,
        _ => unreachable!("moments above third order are not needed"),
    }
}

/// `∫_{-Δθ_max}^{Δθ_max} x^n e^{-κ(x-μ)²/2} dx` for n = 0..=3 (binomial
/// shift of the centred moments).
fn shifted_moments(params: &VonMisesParams) -> [f64; 4] {
    let mu = params.mean;
    let k = params.concentration;
    let a = params.max_error + mu; // Δθ₁
    let b = params.max_error - mu; // Δθ₂
    let t: [f64; 4] = std::array::from_fn(|n| gaussian_moment(n as u32, a, b, k));
    [
        t[0],
        t[1] + mu * t[0],
        t[2] + 2.0 * mu * t[1] + mu * mu * t[0],
        t[3] + 3.0 * mu * t[2] + 3.0 * mu * mu * t[1] + mu.powi(3) * t[0],
    ]
}

/// `Ĥ(u,v) = (g/N) e^{jα_uv cos θ̂}` (zero-based indices).
fn point_entry(
    u: usize,
    v: usize,
    theta_hat: f64,
    geometry: &ArrayGeometry,
    gain: f64,
) -> Complex64 {
    let alpha = geometry.pair_phase_coefficient(u, v);
    Complex64::from_polar(
        gain / geometry.num_antennas() as f64,
        alpha * theta_hat.cos(),
    )
}

/// Closed-form `Υ₁(u,v)` (zero-based `u`, `v`): the cosine part of the entry
/// using `cos ξ ≈ 1 - α²sin²θ̂ Δθ²/2 - α² sinθ̂ cosθ̂ Δθ³/2` and the Gaussian
/// approximation of the density.
pub fn upsilon1(
    u: usize,
    v: usize,
    theta_hat: f64,
    params: &VonMisesParams,
    geometry: &ArrayGeometry,
    gain: f64,
) -> Complex64 {
    let alpha = geometry.pair_phase_coefficient(u, v);
    let (s, c) = theta_hat.sin_cos();
    let x = shifted_moments(params);
    let bracket = x[0] - 0.5 * alpha * alpha * s * s * x[2] - 0.5 * alpha * alpha * s * c * x[3];
    point_entry(u, v, theta_hat, geometry, gain) * (params.peak_density() * bracket)
}

/// Closed-form `Υ₂(u,v)`: the sine part, with `sin ξ ≈ α cosθ̂ Δθ²/2 + α sinθ̂ Δθ`.
pub fn upsilon2(
    u: usize,
    v: usize,
    theta_hat: f64,
    params: &VonMisesParams,
    geometry: &ArrayGeometry,
    gain: f64,
) -> Complex64 {
    let alpha = geometry.pair_phase_coefficient(u, v);
    let (s, c) = theta_hat.sin_cos();
    let x = shifted_moments(params);
    let bracket = 0.5 * alpha * c * x[2] + alpha * s * x[1];
    point_entry(u, v, theta_hat, geometry, gain) * (params.peak_density() * bracket)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceMethod {
    ClosedForm,
    Quadrature,
}

/// Expected outer product `H_BEk` of one eavesdropper's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCovariance {
    pub matrix: CMat,
    /// Zero-based eavesdropper index.
    pub eve_index: usize,
    pub provenance: CovarianceMethod,
}

impl ExpectedCovariance {
    /// Divides the truncated mass out, giving the conditional expectation
    /// under the renormalized truncated density.
    pub fn renormalized(&self, mass: f64) -> Self {
        Self {
            matrix: self.matrix.unscale(mass),
            ..self.clone()
        }
    }
}

fn fill_hermitian(n: usize, mut entry: impl FnMut(usize, usize) -> Complex64) -> CMat {
    let mut m = CMat::zeros(n, n);
    for u in 0..n {
        for v in u..n {
            let z = entry(u, v);
            if u == v {
                m[(u, u)] = Complex64::new(z.re, 0.0);
            } else {
                m[(u, v)] = z;
                m[(v, u)] = z.conj();
            }
        }
    }
    m
}

/// `H_BEk` for zero-based eavesdropper `k`.
pub fn expected_covariance(
    scenario: &Scenario,
    k: usize,
    method: CovarianceMethod,
) -> Result<ExpectedCovariance> {
    if k >= scenario.num_eves() {
        return Err(Error::invalid(
            "eve_index",
            format!("{k} is out of range for K={}", scenario.num_eves()),
        ));
    }
    let geometry = &scenario.geometry;
    let params = &scenario.error_model;
    let theta_hat = scenario.eve_angles[k];
    let gain = crate::model::path_loss(scenario.eve_distances[k], geometry.carrier_frequency())?;
    let n = geometry.num_antennas();
    let matrix = match method {
        CovarianceMethod::ClosedForm => fill_hermitian(n, |u, v| {
            upsilon1(u, v, theta_hat, params, geometry, gain)
                - Complex64::i() * upsilon2(u, v, theta_hat, params, geometry, gain)
        }),
        CovarianceMethod::Quadrature => {
            let scale = gain / n as f64;
            fill_hermitian(n, |u, v| {
                let alpha = geometry.pair_phase_coefficient(u, v);
                if u == v {
                    return Complex64::new(scale * truncated_mass(params), 0.0);
                }
                let phase = |x: f64| alpha * (theta_hat + x).cos();
                let re = integrate_weighted(|x| phase(x).cos(), params, QUADRATURE_TOL);
                let im = integrate_weighted(|x| phase(x).sin(), params, QUADRATURE_TOL);
                Complex64::new(re, im) * scale
            })
        }
    };
    Ok(ExpectedCovariance {
        matrix,
        eve_index: k,
        provenance: method,
    })
}

/// How the designers weight the expected eavesdropper covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceMass {
    /// Integrate the un-normalized density over the truncation interval.
    Truncated,
    /// Divide by the truncated mass (conditional expectation).
    Renormalized,
}

/// All `K` expected covariances with the requested weighting, as used by
/// the designers. The closed form is replaced by its PSD part: its truncated
/// expansions can leave small negative eigenvalues, which an optimizer would
/// otherwise exploit as negative eavesdropper power.
pub fn expected_covariances(
    scenario: &Scenario,
    method: CovarianceMethod,
    mass: CovarianceMass,
) -> Result<Vec<CMat>> {
    let p_in = truncated_mass(&scenario.error_model);
    (0..scenario.num_eves())
        .map(|k| {
            let cov = expected_covariance(scenario, k, method)?;
            let m = match mass {
                CovarianceMass::Truncated => cov.matrix,
                CovarianceMass::Renormalized => cov.renormalized(p_in).matrix,
            };
            Ok(match method {
                CovarianceMethod::ClosedForm => psd_part(&m),
                CovarianceMethod::Quadrature => m,
            })
        })
        .collect()
}
