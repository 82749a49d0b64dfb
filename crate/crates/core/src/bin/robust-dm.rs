//! Command-line front end: `design`, `evaluate`, `sweep`, `complexity`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use robust_dm::baselines::PowerSplit;
use robust_dm::config::load_scenario_file;
use robust_dm::experiments::{
    complexity_estimate, design, emit_results, run_sweep, Axis, ComplexityParams, Method, SweepSpec,
};
use robust_dm::sca::{sca_maee, sca_vmd, write_trace_csv, ScaOptions};
use robust_dm::secrecy::{monte_carlo_secrecy, sum_secrecy_rate, BeamformerRecord};
use robust_dm::vonmises::CovarianceMass;
use robust_dm::{BeamformerSet, Result, Scenario};

#[derive(Parser)]
#[command(version, about = "Robust directional-modulation beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (flat TOML); defaults apply to omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    power_dbm: Option<f64>,
    #[arg(long)]
    antennas: Option<usize>,
    #[arg(long)]
    eavesdroppers: Option<usize>,
    #[arg(long)]
    delta_theta_max_deg: Option<f64>,
    /// Weight the expected eavesdropper covariance by the conditional
    /// (renormalized) truncated density.
    #[arg(long)]
    renormalize: bool,
}

impl ScenarioArgs {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(p) => load_scenario_file(p)?,
            None => Scenario::reference(),
        };
        if let Some(p) = self.power_dbm {
            s = Axis::TransmitPowerDbm.apply(&s, p)?;
        }
        if let Some(n) = self.antennas {
            s = Axis::NumAntennas.apply(&s, n as f64)?;
        }
        if let Some(k) = self.eavesdroppers {
            s = Axis::NumEavesdroppers.apply(&s, k as f64)?;
        }
        if let Some(d) = self.delta_theta_max_deg {
            s = Axis::DeltaThetaMaxDeg.apply(&s, d)?;
        }
        s.validate()?;
        Ok(s)
    }

    fn options(&self, seed: u64) -> ScaOptions {
        let mut o = ScaOptions::default().with_seed(seed);
        if self.renormalize {
            o.covariance_mass = CovarianceMass::Renormalized;
        }
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Design beams with one method and write them as JSON.
    Design {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "vmd")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// SCA iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate a design file at the estimated angles and by Monte Carlo.
    Evaluate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep one axis for several methods and write CSV + TSV files.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        axis: String,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "vmd,maee,zf,slnr")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Record wall time per cell (output is then not reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Per-iteration interior-point cost estimate.
    Complexity {
        #[arg(long, default_value_t = 6)]
        antennas: usize,
        #[arg(long, default_value_t = 2)]
        users: usize,
        #[arg(long, default_value_t = 4)]
        eavesdroppers: usize,
        #[arg(long, default_value_t = 1e-6)]
        accuracy: f64,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
    },
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| robust_dm::Error::Io {
            path: p.clone(),
            source: e,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Design {
            scenario,
            method,
            seed,
            out,
            trace,
        } => {
            let s = scenario.scenario()?;
            let method: Method = method.parse()?;
            let options = scenario.options(seed);
            let (beams, summary) = match method {
                Method::Vmd | Method::Maee => {
                    let o = if method == Method::Vmd {
                        sca_vmd(&s, &options)?
                    } else {
                        sca_maee(&s, &options)?
                    };
                    if let Some(p) = &trace {
                        let f = std::fs::File::create(p).map_err(|e| robust_dm::Error::Io {
                            path: p.clone(),
                            source: e,
                        })?;
                        write_trace_csv(&o.trace, f)?;
                    }
                    let summary = json!({
                        "design_objective": o.objective,
                        "iterations": o.iterations,
                        "converged": o.converged,
                        "restarts": o.restarts,
                    });
                    (o.beams, summary)
                }
                _ => (
                    design(&s, method, &options, PowerSplit::default())?.0,
                    json!({}),
                ),
            };
            let doc = json!({
                "method": method.name(),
                "seed": seed,
                "power": beams.power(),
                "summary": summary,
                "beams": beams.to_record(),
            });
            write_out(&out, &serde_json::to_string_pretty(&doc)?)?;
        }
        Command::Evaluate {
            scenario,
            design,
            trials,
            seed,
        } => {
            let s = scenario.scenario()?;
            let text = std::fs::read_to_string(&design).map_err(|e| robust_dm::Error::Io {
                path: design.clone(),
                source: e,
            })?;
            let doc: serde_json::Value = serde_json::from_str(&text)?;
            let rec: BeamformerRecord =
                serde_json::from_value(doc.get("beams").cloned().unwrap_or(doc))?;
            let relaxed = BeamformerSet::from_record(&rec)?;
            let relaxed_only = BeamformerSet::from_matrices(
                relaxed.signal_matrices.clone(),
                relaxed.an_matrix.clone(),
            );
            let sent = relaxed.transmit();
            let out = json!({
                "transmitted": {
                    "estimated_angles": sum_secrecy_rate(&s, &s.eve_angles, &sent)?,
                    "monte_carlo": monte_carlo_secrecy(&s, &sent, trials, seed)?,
                },
                "relaxed_matrices": {
                    "estimated_angles": sum_secrecy_rate(&s, &s.eve_angles, &relaxed_only)?,
                    "monte_carlo": monte_carlo_secrecy(&s, &relaxed_only, trials, seed)?,
                },
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            methods,
            trials,
            seed,
            out,
            timing,
            threads,
        } => {
            let base = scenario.scenario()?;
            let methods = methods
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<Method>>>()?;
            let mut spec = SweepSpec::new(axis.parse()?, values, methods, trials, seed);
            spec.sca = scenario.options(seed);
            spec.timing = timing;
            if let Some(t) = threads {
                spec.threads = t;
            }
            let table = run_sweep(&base, &spec)?;
            for p in emit_results(&table, &out)? {
                eprintln!("wrote {}", p.display());
            }
            for r in table.rows.iter().filter(|r| !r.is_ok()) {
                eprintln!("{}={} {}: {}", table.axis, r.axis_value, r.method, r.status);
            }
            if table.failures() > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Complexity {
            antennas,
            users,
            eavesdroppers,
            accuracy,
            iterations,
        } => {
            let e = complexity_estimate(&ComplexityParams {
                num_antennas: antennas,
                num_users: users,
                num_eavesdroppers: eavesdroppers,
                accuracy,
                iterations,
            })?;
            println!("{}", serde_json::to_string_pretty(&e)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
