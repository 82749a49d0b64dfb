//! Parameter sweeps, the per-iteration complexity estimate and result files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{slnr_beamformers, zf_beamformers, PowerSplit};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::sca::{sca_maee, sca_vmd, ScaOptions};
use crate::secrecy::{monte_carlo_secrecy, BeamformerSet};
use crate::vonmises::expected_covariances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    TransmitPowerDbm,
    NumAntennas,
    DeltaThetaMaxDeg,
    NumEavesdroppers,
}

impl Axis {
    pub const ALL: [Axis; 4] = [
        Axis::TransmitPowerDbm,
        Axis::NumAntennas,
        Axis::DeltaThetaMaxDeg,
        Axis::NumEavesdroppers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::TransmitPowerDbm => "transmit_power_dbm",
            Axis::NumAntennas => "num_antennas",
            Axis::DeltaThetaMaxDeg => "delta_theta_max_deg",
            Axis::NumEavesdroppers => "num_eavesdroppers",
        }
    }

    /// Label of the matching published figure.
    pub fn figure(self) -> &'static str {
        match self {
            Axis::TransmitPowerDbm => "fig4_transmit_power",
            Axis::NumAntennas => "fig5_num_antennas",
            Axis::DeltaThetaMaxDeg => "fig6_delta_theta_max",
            Axis::NumEavesdroppers => "fig7_num_eavesdroppers",
        }
    }

    /// The scenario at one axis value.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let integral = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::invalid(
                    "values",
                    format!("{} needs positive integers, got {v}", self.name()),
                ))
            }
        };
        let s = match self {
            Axis::TransmitPowerDbm => base.clone().with_power_dbm(value),
            Axis::NumAntennas => base.clone().with_antennas(integral(value)?)?,
            Axis::DeltaThetaMaxDeg => {
                let params = base.error_model.with_max_error(value.to_radians())?;
                base.clone().with_error_model(params)
            }
            Axis::NumEavesdroppers => base.clone().with_eavesdroppers(integral(value)?),
        };
        s.validate()?;
        Ok(s)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid("axis", format!("unknown axis `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Vmd,
    Maee,
    Zf,
    Slnr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Vmd, Method::Maee, Method::Zf, Method::Slnr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vmd => "vmd",
            Method::Maee => "maee",
            Method::Zf => "zf",
            Method::Slnr => "slnr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid("methods", format!("unknown method `{s}`")))
    }
}

/// A designed beam set and its SCA iteration count (0 for baselines).
pub fn design(
    scenario: &Scenario,
    method: Method,
    options: &ScaOptions,
    split: PowerSplit,
) -> Result<(BeamformerSet, usize)> {
    match method {
        Method::Vmd => sca_vmd(scenario, options).map(|o| (o.beams, o.iterations)),
        Method::Maee => sca_maee(scenario, options).map(|o| (o.beams, o.iterations)),
        Method::Zf => zf_beamformers(scenario, split).map(|b| (b, 0)),
        Method::Slnr => {
            let covs =
                expected_covariances(scenario, options.covariance_method, options.covariance_mass)?;
            slnr_beamformers(scenario, &covs, split).map(|b| (b, 0))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    pub sca: ScaOptions,
    pub split: PowerSplit,
    /// Record wall time per cell. Off by default so output is reproducible
    /// byte for byte.
    pub timing: bool,
    /// Worker threads; cells are independent and results keep their order.
    pub threads: usize,
}

impl SweepSpec {
    pub fn new(
        axis: Axis,
        values: Vec<f64>,
        methods: Vec<Method>,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            axis,
            values,
            methods,
            trials,
            seed,
            sca: ScaOptions::default(),
            split: PowerSplit::default(),
            timing: false,
            threads: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid(
                "values",
                "at least one axis value is required",
            ));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "values",
                "axis values must be strictly increasing",
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods", "at least one method is required"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        self.sca.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    pub method: Method,
    pub mean_rate: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_ms: Option<f64>,
    pub seed: u64,
    /// `ok` or a failure description.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub axis: Axis,
    pub rows: Vec<ResultRow>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn parse_opt<T: FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("cannot parse {what} `{s}`")))
    }
}

impl ResultTable {
    pub fn header(&self) -> [&'static str; 8] {
        [
            self.axis.name(),
            "method",
            "mean_rate",
            "ci_halfwidth",
            "iterations",
            "wall_ms",
            "seed",
            "status",
        ]
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    /// Row for one cell.
    pub fn get(&self, axis_value: f64, method: Method) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.method == method)
    }

    /// `(axis value, mean, halfwidth)` for one method, in axis order.
    pub fn series(&self, method: Method) -> Vec<(f64, f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| Some((r.axis_value, r.mean_rate?, r.ci_halfwidth?)))
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            w.write_record([
                r.axis_value.to_string(),
                r.method.to_string(),
                opt(&r.mean_rate),
                opt(&r.ci_halfwidth),
                opt(&r.iterations),
                opt(&r.wall_ms),
                r.seed.to_string(),
                r.status.clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let axis: Axis = rd.headers()?.get(0).unwrap_or_default().parse()?;
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or_default();
            rows.push(ResultRow {
                axis_value: parse_opt(field(0), "axis value")?
                    .ok_or_else(|| Error::Config("missing axis value".into()))?,
                method: field(1).parse()?,
                mean_rate: parse_opt(field(2), "mean_rate")?,
                ci_halfwidth: parse_opt(field(3), "ci_halfwidth")?,
                iterations: parse_opt(field(4), "iterations")?,
                wall_ms: parse_opt(field(5), "wall_ms")?,
                seed: parse_opt(field(6), "seed")?
                    .ok_or_else(|| Error::Config("missing seed".into()))?,
                status: field(7).to_string(),
            });
        }
        Ok(Self { axis, rows })
    }
}

fn run_cell(base: &Scenario, spec: &SweepSpec, value: f64, method: Method) -> ResultRow {
    let start = Instant::now();
    let outcome = spec.axis.apply(base, value).and_then(|s| {
        let (beams, iterations) = design(
            &s,
            method,
            &spec.sca.clone().with_seed(spec.seed),
            spec.split,
        )?;
        let report = monte_carlo_secrecy(&s, &beams.transmit(), spec.trials, spec.seed)?;
        Ok((report, iterations))
    });
    let wall_ms = spec.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    match outcome {
        Ok((report, iterations)) => ResultRow {
            axis_value: value,
            method,
            mean_rate: Some(report.sum_rate),
            ci_halfwidth: Some(report.confidence_halfwidth),
            iterations: Some(iterations),
            wall_ms,
            seed: spec.seed,
            status: "ok".into(),
        },
        Err(e) => ResultRow {
            axis_value: value,
            method,
            mean_rate: None,
            ci_halfwidth: None,
            iterations: None,
            wall_ms,
            seed: spec.seed,
            status: format!("failed: {e}"),
        },
    }
}

/// One row per `(value, method)`, in that order. Cell failures are
/// recorded in the row status and the sweep continues.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec) -> Result<ResultTable> {
    spec.validate()?;
    let cells: Vec<(f64, Method)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.methods.iter().map(move |&m| (v, m)))
        .collect();
    let threads = spec.threads.clamp(1, cells.len());
    let mut rows: Vec<Option<ResultRow>> = vec![None; cells.len()];
    std::thread::scope(|scope| {
        let chunks: Vec<_> = (0..threads)
            .map(|t| {
                let cells = &cells;
                scope.spawn(move || {
                    (t..cells.len())
                        .step_by(threads)
                        .map(|i| (i, run_cell(base, spec, cells[i].0, cells[i].1)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in chunks {
            for (i, row) in h.join().expect("sweep worker panicked") {
                rows[i] = Some(row);
            }
        }
    });
    Ok(ResultTable {
        axis: spec.axis,
        rows: rows
            .into_iter()
            .map(|r| r.expect("every cell ran"))
            .collect(),
    })
}

/// Writes `path` (CSV) and a long-format TSV next to it named after the
/// figure (`figure, x, series, y, y_low, y_high`). Returns both paths.
pub fn emit_results(table: &ResultTable, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::invalid("table", "no rows to write"));
    }
    let path = path.as_ref();
    let csv_file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    table.write_csv(std::io::BufWriter::new(csv_file))?;

    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let tsv_path = path.with_file_name(format!("{stem}_{}.tsv", table.axis.figure()));
    let mut text = String::from("figure\tx\tseries\ty\ty_low\ty_high\n");
    for r in &table.rows {
        if let (Some(y), Some(h)) = (r.mean_rate, r.ci_halfwidth) {
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                table.axis.figure(),
                r.axis_value,
                r.method,
                y,
                y - h,
                y + h
            ));
        }
    }
    std::fs::write(&tsv_path, text).map_err(|e| Error::io(&tsv_path, e))?;
    Ok(vec![path.to_path_buf(), tsv_path])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityParams {
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_eavesdroppers: usize,
    /// Interior-point accuracy `ε ∈ (0, 1)`.
    pub accuracy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityEstimate {
    /// Number of real design variables.
    pub n_o: usize,
    pub per_iteration: f64,
    pub total: f64,
}

/// Order-of-magnitude interior-point cost of one SCA subproblem, and of a
/// whole run.
pub fn complexity_estimate(p: &ComplexityParams) -> Result<ComplexityEstimate> {
    if p.num_antennas == 0 || p.num_users == 0 || p.num_eavesdroppers == 0 || p.iterations == 0 {
        return Err(Error::invalid(
            "complexity",
            "N, M, K and iterations must be positive",
        ));
    }
    if !(p.accuracy > 0.0 && p.accuracy < 1.0) {
        return Err(Error::invalid(
            "accuracy",
            format!("must lie in (0, 1), got {}", p.accuracy),
        ));
    }
    let (n, m, k) = (
        p.num_antennas as f64,
        p.num_users as f64,
        p.num_eavesdroppers as f64,
    );
    let n_o = (p.num_eavesdroppers + 3) * p.num_users
        + p.num_eavesdroppers
        + (p.num_users + 1) * p.num_antennas * p.num_antennas;
    let no = n_o as f64;
    // a: number of size-b cone blocks
    let a = k * m + k + 2.0 * m + 1.0;
    let b = 2.0 * n + 2.0;
    let barrier = (a * b + k * m + (m + 1.0) * n).sqrt();
    let inner = no * no
        + no * (a * b * b + k * m * m + (m + 1.0) * n * n)
        + a * b.powi(3)
        + k * m.powi(3)
        + (m + 1.0) * n.powi(3);
    let per_iteration = barrier * no * inner * (1.0 / p.accuracy).ln();
    Ok(ComplexityEstimate {
        n_o,
        per_iteration,
        total: per_iteration * p.iterations as f64,
    })
}
