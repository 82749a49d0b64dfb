//! Small transmit-power sweep comparing all four designs; writes CSV to stdout.

use robust_dm::experiments::{run_sweep, Axis, Method, SweepSpec};
use robust_dm::sca::ScaOptions;
use robust_dm::Scenario;

fn main() -> robust_dm::Result<()> {
    let mut spec = SweepSpec::new(
        Axis::TransmitPowerDbm,
        vec![30.0, 40.0],
        vec![Method::Vmd, Method::Maee, Method::Zf, Method::Slnr],
        200,
        5,
    );
    spec.sca = ScaOptions {
        max_iterations: 20,
        ..ScaOptions::default()
    };
    let table = run_sweep(&Scenario::reference(), &spec)?;
    print!("{}", table.to_csv_string()?);
    Ok(())
}
