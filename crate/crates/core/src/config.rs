//! Flat key/value scenario documents (TOML syntax).
//!
//! Every key is optional and falls back to the default scenario. Unknown
//! keys are rejected.
//!
//! ```toml
//! num_antennas = 8
//! transmit_power = "30 dBm"
//! noise_power = "-30 dBm"
//! user_angles = ["pi/6", "pi/3"]
//! eve_angles = ["-15 deg", "15 deg", "45 deg"]
//! delta_theta_max = "4 deg"
//! kappa = 100
//! ```
//!
//! Powers are watts when bare numbers, or strings with a `W`, `mW` or `dBm`
//! unit. Angles are radians when bare numbers, or strings in `deg`, `rad` or
//! a multiple of `pi` (`"5pi/12"`, `"-pi/12"`). Frequencies take `Hz`,
//! `kHz`, `MHz` or `GHz`; spacing takes metres or a multiple of `lambda`.

use std::f64::consts::PI;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, extended_eve_angles, ArrayGeometry, Scenario, SPEED_OF_LIGHT};
use crate::vonmises::VonMisesParams;

const KEYS: &[&str] = &[
    "num_antennas",
    "num_users",
    "num_eavesdroppers",
    "user_angles",
    "user_distance",
    "user_distances",
    "eve_angles",
    "eve_distance",
    "eve_distances",
    "transmit_power",
    "noise_power",
    "noise_user",
    "noise_eve",
    "delta_theta_max",
    "mu",
    "kappa",
    "carrier_frequency",
    "spacing",
];

fn bad(key: &str, what: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {what}"))
}

/// Splits `"40 dBm"` into `("40", "dBm")` at the longest numeric prefix.
fn split_unit(s: &str) -> (&str, &str) {
    let s = s.trim();
    let cut = s
        .char_indices()
        .map(|(i, c)| i + c.len_utf8())
        .rfind(|&end| s[..end].parse::<f64>().is_ok())
        .unwrap_or(0);
    (s[..cut].trim(), s[cut..].trim())
}

fn number(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        other => Err(bad(key, format!("expected a number, got {other}"))),
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| bad(key, format!("cannot parse `{s}` as a number")))
}

/// Watts from a bare number or a `W`/`mW`/`dBm` string.
pub fn parse_power(key: &str, v: &Value) -> Result<f64> {
    let w = match v {
        Value::String(s) => {
            let (num, unit) = split_unit(s);
            let x = parse_f64(key, num)?;
            match unit.to_ascii_lowercase().as_str() {
                "dbm" => dbm_to_watts(x),
                "w" | "" => x,
                "mw" => x * 1e-3,
                u => return Err(bad(key, format!("unknown power unit `{u}`"))),
            }
        }
        other => number(key, other)?,
    };
    if !(w > 0.0 && w.is_finite()) {
        return Err(bad(key, format!("power must be positive, got {w} W")));
    }
    Ok(w)
}

/// Radians from a bare number or a `deg`/`rad`/`pi` string.
pub fn parse_angle(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::String(s) => {
            let t = s.trim().replace(' ', "");
            let lower = t.to_ascii_lowercase();
            if let Some(pos) = lower.find("pi") {
                let (pre, post) = (&lower[..pos], &lower[pos + 2..]);
                let coef = match pre.trim_end_matches('*') {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    c => parse_f64(key, c)?,
                };
                let div = match post.strip_prefix('/') {
                    Some(d) => parse_f64(key, d)?,
                    None if post.is_empty() => 1.0,
                    None => return Err(bad(key, format!("cannot parse angle `{s}`"))),
                };
                return Ok(coef * PI / div);
            }
            let (num, unit) = split_unit(&lower);
            let x = parse_f64(key, num)?;
            match unit {
                "deg" | "°" | "degrees" => Ok(x.to_radians()),
                "rad" | "" => Ok(x),
                u => Err(bad(key, format!("unknown angle unit `{u}`"))),
            }
        }
        other => number(key, other),
    }
}

fn parse_frequency(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::String(s) => {
            let (num, unit) = split_unit(s);
            let x = parse_f64(key, num)?;
            let scale = match unit.to_ascii_lowercase().as_str() {
                "hz" | "" => 1.0,
                "khz" => 1e3,
                "mhz" => 1e6,
                "ghz" => 1e9,
                u => return Err(bad(key, format!("unknown frequency unit `{u}`"))),
            };
            Ok(x * scale)
        }
        other => number(key, other),
    }
}

/// Spacing in metres (`"0.5 lambda"` is resolved against `frequency`).
fn parse_spacing(key: &str, v: &Value, frequency: f64) -> Result<f64> {
    match v {
        Value::String(s) => {
            let (num, unit) = split_unit(s);
            let x = parse_f64(key, num)?;
            match unit.to_ascii_lowercase().as_str() {
                "lambda" | "λ" | "wavelength" => Ok(x * SPEED_OF_LIGHT / frequency),
                "m" | "" => Ok(x),
                "cm" => Ok(x * 1e-2),
                "mm" => Ok(x * 1e-3),
                u => Err(bad(key, format!("unknown length unit `{u}`"))),
            }
        }
        other => number(key, other),
    }
}

fn count(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(bad(
            key,
            format!("expected a nonnegative integer, got {other}"),
        )),
    }
}

fn list<T>(key: &str, v: &Value, f: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        Value::Array(items) => items.iter().map(|x| f(key, x)).collect(),
        other => Err(bad(key, format!("expected an array, got {other}"))),
    }
}

/// Parses a scenario document; omitted keys keep the default scenario.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    let get = |k: &str| table.get(k);
    let mut s = Scenario::reference();

    let frequency = match get("carrier_frequency") {
        Some(v) => parse_frequency("carrier_frequency", v)?,
        None => s.geometry.carrier_frequency(),
    };
    let n = match get("num_antennas") {
        Some(v) => count("num_antennas", v)?,
        None => s.num_antennas(),
    };
    s.geometry = match get("spacing") {
        Some(v) => ArrayGeometry::new(n, parse_spacing("spacing", v, frequency)?, frequency)?,
        None => ArrayGeometry::half_wavelength(n, frequency)?,
    };

    if let Some(v) = get("user_angles") {
        s.user_angles = list("user_angles", v, parse_angle)?;
    }
    if let Some(v) = get("num_users") {
        let m = count("num_users", v)?;
        if get("user_angles").is_some() {
            if m != s.user_angles.len() {
                return Err(bad(
                    "num_users",
                    format!("{m} disagrees with {} user angles", s.user_angles.len()),
                ));
            }
        } else if m <= s.user_angles.len() {
            s.user_angles.truncate(m);
        } else {
            return Err(bad(
                "num_users",
                "more than two users require explicit `user_angles`",
            ));
        }
    }
    if let Some(v) = get("eve_angles") {
        s.eve_angles = list("eve_angles", v, parse_angle)?;
    }
    if let Some(v) = get("num_eavesdroppers") {
        let k = count("num_eavesdroppers", v)?;
        if get("eve_angles").is_some() {
            if k != s.eve_angles.len() {
                return Err(bad(
                    "num_eavesdroppers",
                    format!("{k} disagrees with {} eve angles", s.eve_angles.len()),
                ));
            }
        } else {
            s.eve_angles = extended_eve_angles(k);
        }
    }
    let m = s.num_users();
    let k = s.num_eves();
    s.user_distances = distances(
        &table,
        "user_distance",
        "user_distances",
        s.user_distances[0],
        m,
    )?;
    s.eve_distances = distances(
        &table,
        "eve_distance",
        "eve_distances",
        s.eve_distances[0],
        k,
    )?;

    if let Some(v) = get("transmit_power") {
        s.total_power = parse_power("transmit_power", v)?;
    }
    if let Some(v) = get("noise_power") {
        let p = parse_power("noise_power", v)?;
        s.noise_user = p;
        s.noise_eve = p;
    }
    if let Some(v) = get("noise_user") {
        s.noise_user = parse_power("noise_user", v)?;
    }
    if let Some(v) = get("noise_eve") {
        s.noise_eve = parse_power("noise_eve", v)?;
    }
    let mu = match get("mu") {
        Some(v) => parse_angle("mu", v)?,
        None => s.error_model.mean(),
    };
    let kappa = match get("kappa") {
        Some(v) => number("kappa", v)?,
        None => s.error_model.concentration(),
    };
    let delta = match get("delta_theta_max") {
        Some(v) => parse_angle("delta_theta_max", v)?,
        None => s.error_model.max_error(),
    };
    s.error_model = VonMisesParams::new(mu, kappa, delta)?;
    s.validate()?;
    Ok(s)
}

fn distances(
    table: &Table,
    single: &str,
    plural: &str,
    default: f64,
    len: usize,
) -> Result<Vec<f64>> {
    match (table.get(single), table.get(plural)) {
        (Some(_), Some(_)) => Err(bad(
            plural,
            format!("give either `{single}` or `{plural}`, not both"),
        )),
        (Some(v), None) => Ok(vec![number(single, v)?; len]),
        (None, Some(v)) => {
            let d = list(plural, v, number)?;
            if d.len() != len {
                return Err(bad(
                    plural,
                    format!("expected {len} entries, got {}", d.len()),
                ));
            }
            Ok(d)
        }
        (None, None) => Ok(vec![default; len]),
    }
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(load_scenario("").unwrap(), Scenario::reference());
    }

    #[test]
    fn dbm_power_is_converted() {
        let s = load_scenario("transmit_power = \"40 dBm\"").unwrap();
        assert!((s.total_power - 10.0).abs() < 1e-12);
        let s = load_scenario("transmit_power = \"250 mW\"\nnoise_power = 1e-3").unwrap();
        assert!((s.total_power - 0.25).abs() < 1e-15);
        assert_eq!(s.noise_user, 1e-3);
    }

    #[test]
    fn users_must_be_fewer_than_antennas() {
        let e = load_scenario("num_antennas = 2\nuser_angles = [0.3, 0.9]").unwrap_err();
        assert!(
            matches!(
                e,
                Error::Invalid {
                    field: "num_users",
                    ..
                }
            ),
            "{e}"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(
            matches!(load_scenario("antennas = 4"), Err(Error::UnknownKey(k)) if k == "antennas")
        );
    }

    #[test]
    fn angle_forms() {
        let v = |s: &str| parse_angle("a", &Value::String(s.into())).unwrap();
        assert!((v("pi/6") - PI / 6.0).abs() < 1e-15);
        assert!((v("-pi/12") + PI / 12.0).abs() < 1e-15);
        assert!((v("5pi/12") - 5.0 * PI / 12.0).abs() < 1e-15);
        assert!((v("6 deg") - 6f64.to_radians()).abs() < 1e-15);
        assert!((v("0.25 rad") - 0.25).abs() < 1e-15);
        assert!((v("30°") - 30f64.to_radians()).abs() < 1e-15);
        assert!(parse_angle("a", &Value::String("3 furlongs".into())).is_err());
    }

    #[test]
    fn eavesdropper_count_extends_angles() {
        let s = load_scenario("num_eavesdroppers = 5").unwrap();
        assert_eq!(s.eve_angles, extended_eve_angles(5));
        assert_eq!(s.eve_distances, vec![50.0; 5]);
        assert!(load_scenario("num_eavesdroppers = 2\neve_angles = [0.1]").is_err());
    }

    #[test]
    fn geometry_keys() {
        let s = load_scenario(
            "carrier_frequency = \"2.4 GHz\"\nspacing = \"0.4 lambda\"\nnum_antennas = 8",
        )
        .unwrap();
        assert_eq!(s.num_antennas(), 8);
        assert!((s.geometry.spacing() / s.geometry.wavelength() - 0.4).abs() < 1e-12);
        assert!((s.geometry.carrier_frequency() - 2.4e9).abs() < 1e-3);
    }

    #[test]
    fn distances_and_error_model() {
        let s = load_scenario("user_distances = [60, 90]\neve_distance = 40\ndelta_theta_max = \"4 deg\"\nkappa = 50\nmu = \"1 deg\"").unwrap();
        assert_eq!(s.user_distances, vec![60.0, 90.0]);
        assert_eq!(s.eve_distances, vec![40.0; 4]);
        assert_eq!(s.error_model.concentration(), 50.0);
        assert!(load_scenario("user_distances = [60]").is_err());
        assert!(load_scenario("mu = \"10 deg\"").is_err());
    }
}
