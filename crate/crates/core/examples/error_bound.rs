//! Norm bound on the channel error implied by a maximum angle error, and an
//! empirical check with sampled errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robust_dm::error_bound::{channel_perturbation, scenario_bounds};
use robust_dm::vonmises::sample_truncated_vonmises;
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let s = Scenario::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for b in scenario_bounds(&s)? {
        let k = b.eve_index;
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let d = sample_truncated_vonmises(&s.error_model, &mut rng)?;
            let e = channel_perturbation(s.eve_angles[k], d, &s.geometry, s.eve_distances[k])?;
            worst = worst.max(e.norm());
        }
        println!(
            "eve {k}: epsilon = {:.4e}, max sampled |e| = {worst:.4e} ({:.2} eps)",
            b.epsilon,
            worst / b.epsilon
        );
    }
    Ok(())
}
