//! Zero-forcing and SLNR reference designs with artificial noise.

use robust_dm::baselines::{slnr_beamformers, zf_beamformers, PowerSplit};
use robust_dm::secrecy::monte_carlo_secrecy;
use robust_dm::vonmises::{expected_covariances, CovarianceMass, CovarianceMethod};
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let s = Scenario::reference();
    let split = PowerSplit::default();
    let covs = expected_covariances(&s, CovarianceMethod::ClosedForm, CovarianceMass::Truncated)?;
    let zf = zf_beamformers(&s, split)?;
    let slnr = slnr_beamformers(&s, &covs, split)?;
    for (name, beams) in [("ZF", zf), ("SLNR", slnr)] {
        let r = monte_carlo_secrecy(&s, &beams, 1000, 7)?;
        println!(
            "{name:>4}: R_s = {:.4} +/- {:.4}, power = {:.2} W",
            r.sum_rate,
            r.confidence_halfwidth,
            beams.power()
        );
    }
    Ok(())
}
