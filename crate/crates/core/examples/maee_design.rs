//! Worst-case design over a norm-bounded eavesdropper channel error.

use robust_dm::sca::{sca_maee, ScaOptions};
use robust_dm::secrecy::monte_carlo_secrecy;
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let s = Scenario::reference();
    let out = sca_maee(&s, &ScaOptions::default().with_seed(1))?;
    println!(
        "worst-case objective = {:.5} after {} iterations",
        out.objective, out.iterations
    );
    let report = monte_carlo_secrecy(&s, &out.beams.transmit(), 1000, 7)?;
    println!(
        "Monte Carlo sum secrecy rate = {:.4} +/- {:.4}",
        report.sum_rate, report.confidence_halfwidth
    );
    Ok(())
}
