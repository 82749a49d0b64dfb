//! Robust design with the expected eavesdropper covariance (SCA), with the
//! per-iteration objective trace.

use robust_dm::sca::{sca_vmd, ScaOptions};
use robust_dm::secrecy::monte_carlo_secrecy;
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let s = Scenario::reference();
    let out = sca_vmd(&s, &ScaOptions::default().with_seed(1))?;
    for r in &out.trace {
        println!(
            "iter {:2}: objective = {:.5} bit/s/Hz, power = {:.3}",
            r.iteration, r.objective, r.power
        );
    }
    println!(
        "converged = {}, iterations = {}",
        out.converged, out.iterations
    );
    let report = monte_carlo_secrecy(&s, &out.beams.transmit(), 1000, 7)?;
    println!(
        "Monte Carlo sum secrecy rate = {:.4} +/- {:.4}",
        report.sum_rate, report.confidence_halfwidth
    );
    Ok(())
}
