//! Steering vectors, path loss and line-of-sight channels for the default
//! scenario.

use robust_dm::model::{self, channel, path_loss_db, steering_vector};
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let s = Scenario::reference();
    let g = &s.geometry;
    println!(
        "N = {}, f = {:.1} GHz, spacing = {:.4} m",
        g.num_antennas(),
        g.carrier_frequency() / 1e9,
        g.spacing()
    );

    let a = steering_vector(g, s.user_angles[0]);
    println!("|a(theta_1)|^2 = {:.6} (unit norm)", a.norm_squared());

    for (i, (&theta, &d)) in s.user_angles.iter().zip(&s.user_distances).enumerate() {
        let h = channel(g, theta, d)?;
        println!(
            "user {i}: theta = {:6.1} deg, d = {d} m, loss = {:.2} dB, |h|^2 = {:.3e}",
            theta.to_degrees(),
            path_loss_db(d, g.carrier_frequency())?,
            h.norm_sqr()
        );
    }
    for (k, theta) in model::extended_eve_angles(6).iter().enumerate() {
        println!("eavesdropper slot {k}: {:6.1} deg", theta.to_degrees());
    }
    Ok(())
}
