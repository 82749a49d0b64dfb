//! Array geometry, line-of-sight channels and the problem instance.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::vonmises::VonMisesParams;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const DEFAULT_CARRIER_HZ: f64 = 3.0e9;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_antennas: usize,
    spacing: f64,
    carrier_frequency: f64,
    wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, spacing: f64, carrier_frequency: f64) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::invalid("num_antennas", "N must be at least 1"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(
                "spacing",
                format!("must be positive, got {spacing}"),
            ));
        }
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::invalid(
                "carrier_frequency",
                format!("must be positive, got {carrier_frequency}"),
            ));
        }
        Ok(Self {
            num_antennas,
            spacing,
            carrier_frequency,
            wavelength: SPEED_OF_LIGHT / carrier_frequency,
        })
    }

    /// Half-wavelength spacing at `carrier_frequency`.
    pub fn half_wavelength(num_antennas: usize, carrier_frequency: f64) -> Result<Self> {
        if !(carrier_frequency > 0.0) {
            return Err(Error::invalid(
                "carrier_frequency",
                format!("must be positive, got {carrier_frequency}"),
            ));
        }
        Self::new(
            num_antennas,
            0.5 * SPEED_OF_LIGHT / carrier_frequency,
            carrier_frequency,
        )
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Same array with a different element count.
    pub fn with_antennas(&self, num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, self.spacing, self.carrier_frequency)
    }

    /// Spatial phase coefficient `2π (n - (N+1)/2) l / λ` of element `n`
    /// (zero-based here, so the centre sits at `(N-1)/2`).
    pub fn element_phase_coefficient(&self, n: usize) -> f64 {
        let centre = (self.num_antennas as f64 - 1.0) / 2.0;
        2.0 * PI * (n as f64 - centre) * self.spacing / self.wavelength
    }

    /// `2π (v - u) l / λ`.
    pub fn pair_phase_coefficient(&self, u: usize, v: usize) -> f64 {
        2.0 * PI * (v as f64 - u as f64) * self.spacing / self.wavelength
    }
}

/// Unit-norm steering vector: entry `n` is `exp(j 2π Ψ(n)) / √N` with
/// `Ψ(n) = -(n - (N+1)/2) l cos θ / λ`.
pub fn steering_vector(geometry: &ArrayGeometry, theta: f64) -> CVec {
    let n = geometry.num_antennas();
    let amp = 1.0 / (n as f64).sqrt();
    let c = theta.cos();
    CVec::from_fn(n, |p, _| {
        Complex64::from_polar(amp, -geometry.element_phase_coefficient(p) * c)
    })
}

/// Free-space linear gain `(c / (4π d f))²`.
pub fn path_loss(distance: f64, frequency: f64) -> Result<f64> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::invalid(
            "distance",
            format!("must be positive, got {distance}"),
        ));
    }
    if !(frequency > 0.0 && frequency.is_finite()) {
        return Err(Error::invalid(
            "frequency",
            format!("must be positive, got {frequency}"),
        ));
    }
    let r = SPEED_OF_LIGHT / (4.0 * PI * distance * frequency);
    Ok(r * r)
}

/// Path loss in dB, `-10 log10(g)`.
pub fn path_loss_db(distance: f64, frequency: f64) -> Result<f64> {
    Ok(-10.0 * path_loss(distance, frequency)?.log10())
}

/// Line-of-sight channel `√g · ĥ(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: CVec,
    pub gain: f64,
    pub angle: f64,
    pub distance: f64,
}

impl ChannelVector {
    /// `h h^H`.
    pub fn outer(&self) -> CMat {
        crate::linalg::outer(&self.entries)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.norm_squared()
    }
}

pub fn channel(geometry: &ArrayGeometry, theta: f64, distance: f64) -> Result<ChannelVector> {
    let gain = path_loss(distance, geometry.carrier_frequency())?;
    let entries = steering_vector(geometry, theta).scale(gain.sqrt());
    Ok(ChannelVector {
        entries,
        gain,
        angle: theta,
        distance,
    })
}

/// Estimated eavesdropper angles used for the eavesdropper-count sweep: the
/// four default angles, then `7π/12`, then further `π/6` steps.
pub fn extended_eve_angles(k: usize) -> Vec<f64> {
    let base = [
        -PI / 12.0,
        PI / 12.0,
        PI / 4.0,
        5.0 * PI / 12.0,
        7.0 * PI / 12.0,
    ];
    (0..k)
        .map(|i| {
            if i < base.len() {
                base[i]
            } else {
                base[base.len() - 1] + (i + 1 - base.len()) as f64 * PI / 6.0
            }
        })
        .collect()
}

/// A complete problem instance. Powers are in watts, angles in radians,
/// distances in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub user_angles: Vec<f64>,
    pub user_distances: Vec<f64>,
    pub eve_angles: Vec<f64>,
    pub eve_distances: Vec<f64>,
    pub total_power: f64,
    pub noise_user: f64,
    pub noise_eve: f64,
    pub error_model: VonMisesParams,
}

impl Scenario {
    /// Default simulation setting: N=6, M=2, K=4, 40 dBm, -30 dBm noise,
    /// κ=100, μ=0, Δθ_max=6°, users at 80 m, eavesdroppers at 50 m,
    /// 3 GHz carrier and half-wavelength spacing.
    pub fn reference() -> Self {
        let geometry = ArrayGeometry::half_wavelength(6, DEFAULT_CARRIER_HZ).expect("valid");
        Scenario {
            geometry,
            user_angles: vec![PI / 6.0, PI / 3.0],
            user_distances: vec![80.0; 2],
            eve_angles: extended_eve_angles(4),
            eve_distances: vec![50.0; 4],
            total_power: dbm_to_watts(40.0),
            noise_user: dbm_to_watts(-30.0),
            noise_eve: dbm_to_watts(-30.0),
            error_model: VonMisesParams::new(0.0, 100.0, 6f64.to_radians()).expect("valid"),
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_angles.len()
    }

    pub fn num_eves(&self) -> usize {
        self.eve_angles.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.geometry.num_antennas()
    }

    /// Checks every invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_antennas();
        let m = self.num_users();
        let k = self.num_eves();
        if m == 0 {
            return Err(Error::invalid(
                "user_angles",
                "at least one destination user is required",
            ));
        }
        if m >= n {
            return Err(Error::invalid(
                "num_users",
                format!("M < N is required, got M={m}, N={n}"),
            ));
        }
        if self.user_distances.len() != m {
            return Err(Error::invalid(
                "user_distances",
                format!("expected {m} distances, got {}", self.user_distances.len()),
            ));
        }
        if k == 0 {
            return Err(Error::invalid("eve_angles", "K >= 1 is required"));
        }
        if self.eve_distances.len() != k {
            return Err(Error::invalid(
                "eve_distances",
                format!("expected {k} distances, got {}", self.eve_distances.len()),
            ));
        }
        for &d in self.user_distances.iter().chain(&self.eve_distances) {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid(
                    "distance",
                    format!("must be positive, got {d}"),
                ));
            }
        }
        for &a in self.user_angles.iter().chain(&self.eve_angles) {
            if !a.is_finite() {
                return Err(Error::invalid("angle", format!("must be finite, got {a}")));
            }
        }
        if !(self.total_power > 0.0 && self.total_power.is_finite()) {
            return Err(Error::invalid("transmit_power", "P_t must be positive"));
        }
        if !(self.noise_user > 0.0) {
            return Err(Error::invalid("noise_user", "σ_D² must be positive"));
        }
        if !(self.noise_eve > 0.0) {
            return Err(Error::invalid("noise_eve", "σ_E² must be positive"));
        }
        Ok(())
    }

    pub fn user_channels(&self) -> Result<Vec<ChannelVector>> {
        self.user_angles
            .iter()
            .zip(&self.user_distances)
            .map(|(&a, &d)| channel(&self.geometry, a, d))
            .collect()
    }

    /// Eavesdropper channels at the estimated angles.
    pub fn estimated_eve_channels(&self) -> Result<Vec<ChannelVector>> {
        self.eve_channels_at(&self.eve_angles)
    }

    pub fn eve_channels_at(&self, angles: &[f64]) -> Result<Vec<ChannelVector>> {
        if angles.len() != self.num_eves() {
            return Err(Error::invalid(
                "eve_angles",
                format!("expected {} angles, got {}", self.num_eves(), angles.len()),
            ));
        }
        angles
            .iter()
            .zip(&self.eve_distances)
            .map(|(&a, &d)| channel(&self.geometry, a, d))
            .collect()
    }

    pub fn with_power_dbm(mut self, dbm: f64) -> Self {
        self.total_power = dbm_to_watts(dbm);
        self
    }

    pub fn with_antennas(mut self, n: usize) -> Result<Self> {
        self.geometry = self.geometry.with_antennas(n)?;
        Ok(self)
    }

    /// Replaces the eavesdropper set with the first `k` extended angles,
    /// keeping the first configured distance for every eavesdropper.
    pub fn with_eavesdroppers(mut self, k: usize) -> Self {
        let d = self.eve_distances.first().copied().unwrap_or(50.0);
        self.eve_angles = extended_eve_angles(k);
        self.eve_distances = vec![d; k];
        self
    }

    pub fn with_error_model(mut self, params: VonMisesParams) -> Self {
        self.error_model = params;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom(n: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(n, DEFAULT_CARRIER_HZ).unwrap()
    }

    #[test]
    fn wavelength_matches_frequency() {
        let g = geom(6);
        assert_relative_eq!(
            g.wavelength() * g.carrier_frequency(),
            SPEED_OF_LIGHT,
            max_relative = 1e-12
        );
    }

    #[test]
    fn single_element_is_one() {
        let h = steering_vector(&geom(1), 0.7);
        assert_eq!(h.len(), 1);
        assert!((h[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn broadside_has_equal_phases() {
        for n in [2, 5, 8] {
            let h = steering_vector(&geom(n), PI / 2.0);
            for z in h.iter() {
                assert!((z - Complex64::new(1.0 / (n as f64).sqrt(), 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_element_endfire() {
        // Ψ = (0.25, -0.25) → (j, -j)/√2
        let h = steering_vector(&geom(2), 0.0);
        let s = 1.0 / 2f64.sqrt();
        assert!((h[0] - Complex64::new(0.0, s)).norm() < 1e-12);
        assert!((h[1] - Complex64::new(0.0, -s)).norm() < 1e-12);
    }

    #[test]
    fn path_loss_reference_points() {
        let f = 3e9;
        assert_relative_eq!(
            path_loss(SPEED_OF_LIGHT / (4.0 * PI * f), f).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        let ratio = path_loss(10.0, f).unwrap() / path_loss(20.0, f).unwrap();
        assert_relative_eq!(ratio, 4.0, max_relative = 1e-12);
        let db = path_loss_db(20.0, f).unwrap() - path_loss_db(10.0, f).unwrap();
        assert_relative_eq!(db, 6.020599913279624, max_relative = 1e-9);
        assert_relative_eq!(path_loss(50.0, f).unwrap(), 2.5295e-8, max_relative = 1e-3);
        assert!(path_loss(0.0, f).is_err());
        assert!(path_loss(-1.0, f).is_err());
        assert!(path_loss(1.0, 0.0).is_err());
    }

    #[test]
    fn reference_user_channel() {
        let h = channel(&geom(6), PI / 6.0, 80.0).unwrap();
        assert_relative_eq!(h.gain, 9.881e-9, max_relative = 1e-3);
        let m = (h.gain / 6.0).sqrt();
        for z in h.entries.iter() {
            assert_relative_eq!(z.norm(), m, max_relative = 1e-12);
        }
        assert_relative_eq!(h.norm_sqr(), h.gain, max_relative = 1e-12);
    }

    #[test]
    fn reference_is_valid_and_rejects_m_equal_n() {
        let s = Scenario::reference();
        s.validate().unwrap();
        let mut bad = s.clone();
        bad.geometry = bad.geometry.with_antennas(2).unwrap();
        match bad.validate() {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "num_users"),
            other => panic!("expected M<N violation, got {other:?}"),
        }
    }

    #[test]
    fn extended_angles_follow_sweep_layout() {
        let a = extended_eve_angles(7);
        assert_relative_eq!(a[4], 7.0 * PI / 12.0);
        assert_relative_eq!(a[5], 9.0 * PI / 12.0);
        assert_relative_eq!(a[6], 11.0 * PI / 12.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn steering_is_unit_norm_and_centre_symmetric(n in 1usize..12, theta in -10.0f64..10.0) {
                let h = steering_vector(&geom(n), theta);
                prop_assert!((h.norm() - 1.0).abs() < 1e-12);
                for p in 0..n {
                    let prod = h[p] * h[n - 1 - p];
                    prop_assert!((prod - Complex64::new(1.0 / n as f64, 0.0)).norm() < 1e-12);
                }
            }

            #[test]
            fn channel_is_2pi_periodic(theta in -4.0f64..4.0, d in 1.0f64..500.0) {
                let g = geom(5);
                let a = channel(&g, theta, d).unwrap();
                let b = channel(&g, theta + 2.0 * PI, d).unwrap();
                prop_assert!((&a.entries - &b.entries).norm() <= 1e-12 * a.entries.norm());
                prop_assert!((a.norm_sqr() - a.gain).abs() <= 1e-12 * a.gain);
            }

            #[test]
            fn path_loss_decreases(d in 1.0f64..1e4, f in 1e8f64..1e11, s in 1.001f64..3.0) {
                let g = path_loss(d, f).unwrap();
                prop_assert!(path_loss(d * s, f).unwrap() < g);
                prop_assert!(path_loss(d, f * s).unwrap() < g);
            }
        }
    }
}
