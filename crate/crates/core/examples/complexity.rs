//! Interior-point cost estimate of one SCA subproblem as N grows.

use robust_dm::experiments::{complexity_estimate, ComplexityParams};

fn main() -> robust_dm::Result<()> {
    for n in [4, 6, 8, 12, 16] {
        let e = complexity_estimate(&ComplexityParams {
            num_antennas: n,
            num_users: 2,
            num_eavesdroppers: 4,
            accuracy: 1e-6,
            iterations: 20,
        })?;
        println!(
            "N = {n:>2}: n_o = {:>4}, per iteration = {:.3e}, total = {:.3e}",
            e.n_o, e.per_iteration, e.total
        );
    }
    Ok(())
}
