//! Loading a scenario from a TOML config with unit-suffixed values.

use robust_dm::config::load_scenario;

const CONFIG: &str = r#"
num_antennas = 8
user_angles = ["30 deg", "pi/3"]
eve_angles = ["pi/4", "5pi/12", "7pi/12"]
transmit_power = "35 dBm"
noise_power = "-30 dBm"
kappa = 50
delta_theta_max = "4 deg"
carrier_frequency = "3 GHz"
spacing = "0.5 lambda"
"#;

fn main() -> robust_dm::Result<()> {
    let s = load_scenario(CONFIG)?;
    println!(
        "N = {}, M = {}, K = {}",
        s.num_antennas(),
        s.num_users(),
        s.num_eves()
    );
    println!(
        "P_t = {:.3} W, kappa = {}, max error = {:.2} deg",
        s.total_power,
        s.error_model.concentration(),
        s.error_model.max_error().to_degrees()
    );
    Ok(())
}
