//! Norm-bounded eavesdropper channel error implied by a maximum angle error.
//!
//! To first order, `h_p(θ̂+Δθ) - h_p(θ̂) ≈ j α_p sin θ̂ Δθ h_p(θ̂)`, so
//! `|Δh_p| ≤ |α_p sin θ̂ h_p(θ̂)| Δθ_max` and `‖Δh‖ ≤ ε`.

use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::model::{channel, ArrayGeometry};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBound {
    /// Zero-based eavesdropper index (informational; `usize::MAX` when the
    /// bound was computed outside a scenario).
    pub eve_index: usize,
    pub epsilon: f64,
    pub per_entry_caps: Vec<f64>,
}

/// First-order bound on `‖h(θ̂+Δθ) - h(θ̂)‖` over `|Δθ| ≤ Δθ_max`.
pub fn epsilon_bound(
    theta_hat: f64,
    distance: f64,
    geometry: &ArrayGeometry,
    max_error: f64,
) -> Result<ErrorBound> {
    if !(max_error >= 0.0) {
        return Err(Error::invalid(
            "delta_theta_max",
            format!("must be ≥ 0, got {max_error}"),
        ));
    }
    let h = channel(geometry, theta_hat, distance)?;
    let s = theta_hat.sin();
    let per_entry_caps: Vec<f64> = (0..geometry.num_antennas())
        .map(|p| {
            (geometry.element_phase_coefficient(p) * s).abs() * h.entries[p].norm() * max_error
        })
        .collect();
    let epsilon = per_entry_caps.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(ErrorBound {
        eve_index: usize::MAX,
        epsilon,
        per_entry_caps,
    })
}

/// Bounds for every eavesdropper of a scenario at its `Δθ_max`.
pub fn scenario_bounds(scenario: &crate::Scenario) -> Result<Vec<ErrorBound>> {
    let d = scenario.error_model.max_error();
    scenario
        .eve_angles
        .iter()
        .zip(&scenario.eve_distances)
        .enumerate()
        .map(|(k, (&theta, &dist))| {
            let mut b = epsilon_bound(theta, dist, &scenario.geometry, d)?;
            b.eve_index = k;
            Ok(b)
        })
        .collect()
}

/// Exact perturbation `h(θ̂+Δθ) - h(θ̂)`.
pub fn channel_perturbation(
    theta_hat: f64,
    delta: f64,
    geometry: &ArrayGeometry,
    distance: f64,
) -> Result<CVec> {
    let a = channel(geometry, theta_hat + delta, distance)?;
    let b = channel(geometry, theta_hat, distance)?;
    Ok(a.entries - b.entries)
}
