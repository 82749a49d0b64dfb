//! Closed-form expected eavesdropper covariance under a truncated Von Mises
//! angle error, compared with quadrature of the exact integrand.

use robust_dm::vonmises::{expected_covariance, truncated_mass, CovarianceMethod};
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let s = Scenario::reference();
    println!(
        "in-interval probability mass = {:.4}",
        truncated_mass(&s.error_model)
    );
    for k in 0..s.num_eves() {
        let closed = expected_covariance(&s, k, CovarianceMethod::ClosedForm)?;
        let exact = expected_covariance(&s, k, CovarianceMethod::Quadrature)?;
        let g = s.eve_channels_at(&s.eve_angles)?[k].gain;
        let diff = (&closed.matrix - &exact.matrix).map(|z| z.norm()).max() / g;
        println!(
            "eve {k} at {:5.1} deg: max |closed - exact| / g = {diff:.3e}",
            s.eve_angles[k].to_degrees()
        );
    }
    Ok(())
}
