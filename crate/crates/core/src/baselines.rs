//! Zero-forcing and SLNR reference designs with a fixed signal/AN split.
//!
//! Both return rank-one signal beams with `Σ ‖w_i‖² = β P_t` and an AN
//! covariance of trace `(1-β) P_t` confined to the null space of the user
//! channels.

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, invert_hermitian, null_space_projector, outer, quadratic_form, trace_re, CMat, CVec,
};
use crate::model::Scenario;
use crate::secrecy::BeamformerSet;

/// Fraction `β` of the power budget spent on the confidential streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    signal_fraction: f64,
}

impl PowerSplit {
    pub fn new(signal_fraction: f64) -> Result<Self> {
        if !(signal_fraction > 0.0 && signal_fraction <= 1.0) {
            return Err(Error::invalid(
                "signal_fraction",
                format!("β must lie in (0, 1], got {signal_fraction}"),
            ));
        }
        Ok(Self { signal_fraction })
    }

    pub fn signal_fraction(&self) -> f64 {
        self.signal_fraction
    }

    pub fn an_fraction(&self) -> f64 {
        1.0 - self.signal_fraction
    }
}

impl Default for PowerSplit {
    fn default() -> Self {
        Self {
            signal_fraction: 0.9,
        }
    }
}

fn user_matrix(scenario: &Scenario) -> Result<CMat> {
    let users = scenario.user_channels()?;
    let n = scenario.num_antennas();
    let mut h = CMat::zeros(n, users.len());
    for (c, u) in users.iter().enumerate() {
        h.set_column(c, &u.entries);
    }
    Ok(h)
}

fn rank_deficient() -> Error {
    Error::RankDeficient("user channels are linearly dependent".into())
}

fn with_trace(m: CMat, target: f64) -> CMat {
    let t = trace_re(&m);
    if t > 0.0 {
        m.scale(target / t)
    } else {
        m
    }
}

/// Columns of `H (H^H H)^{-1}`, each scaled to `β P_t / M`, and AN spread
/// isotropically over the user null space.
pub fn zf_beamformers(scenario: &Scenario, split: PowerSplit) -> Result<BeamformerSet> {
    scenario.validate()?;
    let h = user_matrix(scenario)?;
    let m = h.ncols();
    let n = h.nrows();
    let gram_inv = invert_hermitian(&(h.adjoint() * &h)).ok_or_else(rank_deficient)?;
    let pinv = &h * gram_inv;
    let per_user = split.signal_fraction() * scenario.total_power / m as f64;
    let vectors: Vec<CVec> = (0..m)
        .map(|i| {
            let c = pinv.column(i).into_owned();
            let norm = c.norm();
            c.scale((per_user).sqrt() / norm)
        })
        .collect();
    let projector = null_space_projector(&h).ok_or_else(rank_deficient)?;
    let an_power = split.an_fraction() * scenario.total_power;
    let q = if n > m && an_power > 0.0 {
        projector.scale(an_power / (n - m) as f64)
    } else {
        CMat::zeros(n, n)
    };
    Ok(BeamformerSet::from_vectors(vectors, q))
}

/// Leakage-plus-noise matrix `Σ_{m≠i} h_m h_m^H + Σ_k H_BEk + (σ_D² M / P_t) I`.
pub fn leakage_matrix(scenario: &Scenario, eve_covariances: &[CMat], i: usize) -> Result<CMat> {
    let users = scenario.user_channels()?;
    let n = scenario.num_antennas();
    let m = users.len();
    let mut b = CMat::identity(n, n).scale(scenario.noise_user * m as f64 / scenario.total_power);
    for (mi, u) in users.iter().enumerate() {
        if mi != i {
            b += u.outer();
        }
    }
    for c in eve_covariances {
        b += c;
    }
    Ok(b)
}

/// Signal-to-leakage-and-noise ratio of beam `w` for user `i`.
pub fn slnr(scenario: &Scenario, eve_covariances: &[CMat], i: usize, w: &CVec) -> Result<f64> {
    let h = &scenario.user_channels()?[i].entries;
    let b = leakage_matrix(scenario, eve_covariances, i)?;
    Ok(quadratic_form(&outer(h), w) / quadratic_form(&b, w))
}

/// Maximum-SLNR beams `w_i ∝ B_i^{-1} h_i` scaled to `β P_t / M`, with AN
/// shaped by the eavesdropper covariances projected onto the user null
/// space (isotropic on that space when the projection vanishes).
pub fn slnr_beamformers(
    scenario: &Scenario,
    eve_covariances: &[CMat],
    split: PowerSplit,
) -> Result<BeamformerSet> {
    scenario.validate()?;
    let h = user_matrix(scenario)?;
    let m = h.ncols();
    let n = h.nrows();
    let projector = null_space_projector(&h).ok_or_else(rank_deficient)?;
    let per_user = split.signal_fraction() * scenario.total_power / m as f64;
    let mut vectors = Vec::with_capacity(m);
    for i in 0..m {
        let b = leakage_matrix(scenario, eve_covariances, i)?;
        let b_inv = invert_hermitian(&b)
            .ok_or_else(|| Error::RankDeficient("leakage matrix is singular".into()))?;
        let w = b_inv * h.column(i);
        let norm = w.norm();
        vectors.push(w.scale(per_user.sqrt() / norm));
    }
    let an_power = split.an_fraction() * scenario.total_power;
    let q = if n > m && an_power > 0.0 {
        let total: CMat = eve_covariances.iter().fold(CMat::zeros(n, n), |a, c| a + c);
        let shaped = &projector * &total * &projector;
        let shaped = crate::linalg::hermitian_part(&shaped);
        let (vals, _) = eigh(&shaped);
        if vals.last().copied().unwrap_or(0.0) > 1e-12 * trace_re(&total).max(f64::MIN_POSITIVE) {
            with_trace(crate::sca::project_psd(&shaped), an_power)
        } else {
            projector.scale(an_power / (n - m) as f64)
        }
    } else {
        CMat::zeros(n, n)
    };
    Ok(BeamformerSet::from_vectors(vectors, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vonmises::{expected_covariances, CovarianceMass, CovarianceMethod};

    fn eve_covs(s: &Scenario) -> Vec<CMat> {
        expected_covariances(s, CovarianceMethod::ClosedForm, CovarianceMass::Truncated).unwrap()
    }

    #[test]
    fn split_validation() {
        assert!(PowerSplit::new(0.0).is_err());
        assert!(PowerSplit::new(1.2).is_err());
        assert_eq!(PowerSplit::new(1.0).unwrap().an_fraction(), 0.0);
    }

    #[test]
    fn zf_nulls_interference_and_an() {
        let s = Scenario::reference();
        let b = zf_beamformers(&s, PowerSplit::default()).unwrap();
        let users = s.user_channels().unwrap();
        let w = b.signal_vectors.as_ref().unwrap();
        for (i, u) in users.iter().enumerate() {
            for (m, wm) in w.iter().enumerate() {
                let leak = (u.entries.adjoint() * wm)[(0, 0)].norm();
                if i != m {
                    assert!(leak < 1e-10 * wm.norm() * u.entries.norm());
                }
            }
            assert!(
                quadratic_form(&b.an_matrix, &u.entries)
                    < 1e-10 * trace_re(&b.an_matrix) * u.norm_sqr()
            );
        }
        assert!((b.power() - s.total_power).abs() < 1e-9 * s.total_power);
        b.check(s.total_power).unwrap();
    }

    #[test]
    fn single_user_zf_is_matched_filter() {
        let mut s = Scenario::reference();
        s.user_angles.truncate(1);
        s.user_distances.truncate(1);
        let b = zf_beamformers(&s, PowerSplit::default()).unwrap();
        let h = &s.user_channels().unwrap()[0].entries;
        let w = &b.signal_vectors.unwrap()[0];
        let cos = (h.adjoint() * w)[(0, 0)].norm() / (h.norm() * w.norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slnr_matched_filter_without_leakage() {
        let mut s = Scenario::reference();
        s.user_angles.truncate(1);
        s.user_distances.truncate(1);
        let b = slnr_beamformers(&s, &[], PowerSplit::default()).unwrap();
        let h = &s.user_channels().unwrap()[0].entries;
        let w = &b.signal_vectors.unwrap()[0];
        let cos = (h.adjoint() * w)[(0, 0)].norm() / (h.norm() * w.norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slnr_dominates_zf_in_slnr() {
        let s = Scenario::reference();
        let covs = eve_covs(&s);
        let sl = slnr_beamformers(&s, &covs, PowerSplit::default()).unwrap();
        let zf = zf_beamformers(&s, PowerSplit::default()).unwrap();
        for i in 0..2 {
            let a = slnr(&s, &covs, i, &sl.signal_vectors.as_ref().unwrap()[i]).unwrap();
            let z = slnr(&s, &covs, i, &zf.signal_vectors.as_ref().unwrap()[i]).unwrap();
            assert!(a >= z * (1.0 - 1e-12));
            // generalized-eigenvalue oracle: max eigenvalue of B^{-1/2} h h^H B^{-1/2} = h^H B^{-1} h
            let h = &s.user_channels().unwrap()[i].entries;
            let b = leakage_matrix(&s, &covs, i).unwrap();
            let top = quadratic_form(&invert_hermitian(&b).unwrap(), h);
            assert!((a - top).abs() < 1e-9 * top);
        }
        let signal: f64 = sl
            .signal_vectors
            .as_ref()
            .unwrap()
            .iter()
            .map(|w| w.norm_squared())
            .sum();
        assert!((signal - 0.9 * s.total_power).abs() < 1e-8);
        assert!((sl.power() - s.total_power).abs() < 1e-9 * s.total_power);
        sl.check(s.total_power).unwrap();
        let users = s.user_channels().unwrap();
        for u in &users {
            assert!(
                quadratic_form(&sl.an_matrix, &u.entries)
                    < 1e-10 * trace_re(&sl.an_matrix) * u.norm_sqr()
            );
        }
    }

    #[test]
    fn dependent_users_are_rejected() {
        let mut s = Scenario::reference();
        s.user_angles = vec![0.5, 0.5];
        assert!(matches!(
            zf_beamformers(&s, PowerSplit::default()),
            Err(Error::RankDeficient(_))
        ));
    }
}
