//! Successive convex approximation designers.
//!
//! Both designers parametrize the transmit covariances `W_i`, `Q` and replace
//! every logarithm of a received power by an auxiliary variable bounded
//! through an exponential cone. The two concave-side exponentials are
//! replaced by their tangents at the current iterate, which makes each
//! subproblem a conic program whose optimum lower-bounds the true objective
//! at its solution and matches it at the expansion point. Hence the design
//! objective never decreases between iterations.
//!
//! Internally powers are normalized by `P_t` and noise variances by
//! themselves, so the solver sees `O(1)` data; the objective is invariant
//! under that rescaling.

use std::f64::consts::LN_2;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::conic::{
    solve_conic, ConicProgram, Constraint, HermitianVar, LinExpr, SolveStatus, SolverSettings,
    VarId,
};
use crate::error::{Error, Result};
use crate::error_bound::scenario_bounds;
use crate::linalg::{eigh, outer, quadratic_form, trace_product, trace_re, CMat, CVec};
use crate::model::Scenario;
use crate::secrecy::{sum_secrecy_rate, sum_secrecy_rate_with_covariances, BeamformerSet};
use crate::vonmises::{expected_covariances, CovarianceMass, CovarianceMethod};

/// Objective magnitude below which the relative convergence test becomes
/// absolute, so that a design stuck near zero rate still terminates.
const CONVERGENCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScaOptions {
    pub max_iterations: usize,
    /// Stop when `|Δ objective| ≤ rel_tolerance · max(|objective|, 1)`.
    pub rel_tolerance: f64,
    pub solver_tolerance: f64,
    pub randomization_trials: usize,
    pub seed: u64,
    /// Fresh initializations tried after a failed subproblem.
    pub max_restarts: usize,
    pub covariance_method: CovarianceMethod,
    pub covariance_mass: CovarianceMass,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            rel_tolerance: 1e-4,
            solver_tolerance: 1e-8,
            randomization_trials: 200,
            seed: 0,
            max_restarts: 5,
            covariance_method: CovarianceMethod::ClosedForm,
            covariance_mass: CovarianceMass::Truncated,
        }
    }
}

impl ScaOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.rel_tolerance > 0.0) || !(self.solver_tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "tolerances must be positive"));
        }
        Ok(())
    }
}

/// One SCA step. Iteration 0 is the initialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub restart: usize,
    pub iteration: usize,
    /// Design objective at the iterate, bit/s/Hz.
    pub objective: f64,
    /// Optimal value of the subproblem that produced the iterate, bit/s/Hz.
    pub subproblem_objective: Option<f64>,
    /// `Tr(Q) + Σ Tr(W_i)` in watts.
    pub power: f64,
    pub status: String,
}

/// Writes `restart,iteration,objective,subproblem_objective,power,status`.
pub fn write_trace_csv<W: Write>(trace: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ScaOutcome {
    /// Relaxed matrices plus the extracted beam vectors.
    pub beams: BeamformerSet,
    pub trace: Vec<IterationRecord>,
    /// SCA iterations of the successful run.
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    /// Final design objective, bit/s/Hz.
    pub objective: f64,
}

/// Data of the expected-covariance design.
#[derive(Debug, Clone, PartialEq)]
pub struct VmdModel {
    pub user_covariances: Vec<CMat>,
    pub eve_covariances: Vec<CMat>,
    pub noise_user: f64,
    pub noise_eve: f64,
    pub total_power: f64,
}

impl VmdModel {
    pub fn from_scenario(
        scenario: &Scenario,
        method: CovarianceMethod,
        mass: CovarianceMass,
    ) -> Result<Self> {
        Ok(Self {
            user_covariances: user_covariances(scenario)?,
            eve_covariances: expected_covariances(scenario, method, mass)?,
            noise_user: scenario.noise_user,
            noise_eve: scenario.noise_eve,
            total_power: scenario.total_power,
        })
    }

    /// Eavesdroppers described by `ĥ ĥ^H` at the estimated angles.
    pub fn point_estimate(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            user_covariances: user_covariances(scenario)?,
            eve_covariances: scenario
                .estimated_eve_channels()?
                .iter()
                .map(|h| h.outer())
                .collect(),
            noise_user: scenario.noise_user,
            noise_eve: scenario.noise_eve,
            total_power: scenario.total_power,
        })
    }

    fn normalized(&self) -> Self {
        let su = self.total_power / self.noise_user;
        let se = self.total_power / self.noise_eve;
        Self {
            user_covariances: self.user_covariances.iter().map(|c| c.scale(su)).collect(),
            eve_covariances: self.eve_covariances.iter().map(|c| c.scale(se)).collect(),
            noise_user: 1.0,
            noise_eve: 1.0,
            total_power: 1.0,
        }
    }
}

/// Data of the norm-bounded design.
#[derive(Debug, Clone, PartialEq)]
pub struct MaeeModel {
    pub user_covariances: Vec<CMat>,
    pub eve_channels: Vec<CVec>,
    pub epsilons: Vec<f64>,
    pub noise_user: f64,
    pub noise_eve: f64,
    pub total_power: f64,
}

impl MaeeModel {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        Ok(Self {
            user_covariances: user_covariances(scenario)?,
            eve_channels: scenario
                .estimated_eve_channels()?
                .into_iter()
                .map(|h| h.entries)
                .collect(),
            epsilons: scenario_bounds(scenario)?
                .iter()
                .map(|b| b.epsilon)
                .collect(),
            noise_user: scenario.noise_user,
            noise_eve: scenario.noise_eve,
            total_power: scenario.total_power,
        })
    }

    /// Same model with every `ε_k` replaced.
    pub fn with_epsilons(mut self, epsilons: Vec<f64>) -> Self {
        self.epsilons = epsilons;
        self
    }

    fn normalized(&self) -> Self {
        let su = self.total_power / self.noise_user;
        let root = (self.total_power / self.noise_eve).sqrt();
        Self {
            user_covariances: self.user_covariances.iter().map(|c| c.scale(su)).collect(),
            eve_channels: self.eve_channels.iter().map(|h| h.scale(root)).collect(),
            epsilons: self.epsilons.iter().map(|e| e * root).collect(),
            noise_user: 1.0,
            noise_eve: 1.0,
            total_power: 1.0,
        }
    }
}

fn user_covariances(scenario: &Scenario) -> Result<Vec<CMat>> {
    Ok(scenario
        .user_channels()?
        .iter()
        .map(|h| h.outer())
        .collect())
}

/// `Σ_{m ∈ streams} Tr(C W_m) + Tr(C Q) + σ²`.
fn received(c: &CMat, beams: &BeamformerSet, skip: Option<usize>, noise: f64) -> f64 {
    beams
        .signal_matrices
        .iter()
        .enumerate()
        .filter(|&(m, _)| Some(m) != skip)
        .map(|(_, w)| trace_product(c, w))
        .sum::<f64>()
        + trace_product(c, &beams.an_matrix)
        + noise
}

/// Expansion points `q̄_i` (user interference) and `c̄_k` (eavesdropper total),
/// natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct VmdPoints {
    pub q_bar: Vec<f64>,
    pub c_bar: Vec<f64>,
}

pub fn linearization_points_vmd(model: &VmdModel, beams: &BeamformerSet) -> VmdPoints {
    VmdPoints {
        q_bar: model
            .user_covariances
            .iter()
            .enumerate()
            .map(|(i, c)| received(c, beams, Some(i), model.noise_user).ln())
            .collect(),
        c_bar: model
            .eve_covariances
            .iter()
            .map(|c| received(c, beams, None, model.noise_eve).ln())
            .collect(),
    }
}

/// Expected-covariance design objective in bit/s/Hz.
pub fn vmd_objective(model: &VmdModel, beams: &BeamformerSet) -> f64 {
    sum_secrecy_rate_with_covariances(
        &model.user_covariances,
        &model.eve_covariances,
        beams,
        model.noise_user,
        model.noise_eve,
    )
    .sum_rate
}

/// `‖W h‖`.
fn apply_norm(w: &CMat, h: &CVec) -> f64 {
    (w * h).norm()
}

/// Upper bound `A_k` on eavesdropper `k`'s total received power.
fn maee_upper(model: &MaeeModel, k: usize, beams: &BeamformerSet) -> f64 {
    let h = &model.eve_channels[k];
    let e = model.epsilons[k];
    let mats = beams
        .signal_matrices
        .iter()
        .chain(std::iter::once(&beams.an_matrix));
    mats.map(|w| quadratic_form(w, h) + 2.0 * e * apply_norm(w, h))
        .sum::<f64>()
        + model.noise_eve
}

/// Lower bound `B_ik` on eavesdropper `k`'s interference for stream `i`.
fn maee_lower(model: &MaeeModel, i: usize, k: usize, beams: &BeamformerSet) -> f64 {
    let h = &model.eve_channels[k];
    let e = model.epsilons[k];
    let mats = beams
        .signal_matrices
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != i)
        .map(|(_, w)| w)
        .chain(std::iter::once(&beams.an_matrix));
    mats.map(|w| quadratic_form(w, h) - 2.0 * e * apply_norm(w, h))
        .sum::<f64>()
        + model.noise_eve
}

/// Expansion points `t̄_i` and `ā_k`, natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct MaeePoints {
    pub t_bar: Vec<f64>,
    pub a_bar: Vec<f64>,
}

pub fn linearization_points_maee(model: &MaeeModel, beams: &BeamformerSet) -> MaeePoints {
    MaeePoints {
        t_bar: model
            .user_covariances
            .iter()
            .enumerate()
            .map(|(i, c)| received(c, beams, Some(i), model.noise_user).ln())
            .collect(),
        a_bar: (0..model.eve_channels.len())
            .map(|k| maee_upper(model, k, beams).ln())
            .collect(),
    }
}

/// Lower-bound design objective in bit/s/Hz; `-∞` when some lower bound
/// `B_ik` is not positive.
pub fn maee_objective(model: &MaeeModel, beams: &BeamformerSet) -> f64 {
    let mut total = 0.0;
    for (i, c) in model.user_covariances.iter().enumerate() {
        let own = received(c, beams, None, model.noise_user).ln()
            - received(c, beams, Some(i), model.noise_user).ln();
        let mut worst = f64::NEG_INFINITY;
        for k in 0..model.eve_channels.len() {
            let lower = maee_lower(model, i, k, beams);
            if lower <= 0.0 {
                return f64::NEG_INFINITY;
            }
            worst = worst.max(maee_upper(model, k, beams).ln() - lower.ln());
        }
        total += own - worst;
    }
    total / LN_2
}

/// Variables of a subproblem, for reading a solution back.
#[derive(Debug, Clone)]
pub struct SubproblemVars {
    pub signal: Vec<HermitianVar>,
    pub an: HermitianVar,
    /// `p_i` or `s_i`.
    pub numerator: Vec<VarId>,
    /// `q_i` or `t_i`.
    pub denominator: Vec<VarId>,
    /// `c_k` or `a_k`.
    pub eve_total: Vec<VarId>,
    /// `d_ik` or `b_ik`, indexed `[i][k]`.
    pub eve_interference: Vec<Vec<VarId>>,
    pub epigraph: Vec<VarId>,
    /// `n_mk ≥ ‖W_m ĥ_k‖`, `m = M` for `Q`; empty for the expected-covariance design.
    pub norms: Vec<Vec<VarId>>,
}

impl SubproblemVars {
    fn beams(&self, x: &[f64]) -> BeamformerSet {
        BeamformerSet::from_matrices(
            self.signal.iter().map(|w| w.value(x)).collect(),
            self.an.value(x),
        )
    }

    /// Coordinates of `beams` with the scalar blocks left at zero.
    pub fn embed(&self, beams: &BeamformerSet, x: &mut [f64]) {
        for (var, w) in self.signal.iter().zip(&beams.signal_matrices) {
            var.coordinates(w, x);
        }
        self.an.coordinates(&beams.an_matrix, x);
    }
}

struct Common {
    program: ConicProgram,
    signal: Vec<HermitianVar>,
    an: HermitianVar,
    numerator: Vec<VarId>,
    denominator: Vec<VarId>,
    epigraph: Vec<VarId>,
}

/// Matrix variables, the user-side constraints, power and PSD.
fn common_block(
    user_covariances: &[CMat],
    n: usize,
    noise_user: f64,
    total_power: f64,
    bars: &[f64],
) -> Common {
    let m = user_covariances.len();
    let mut program = ConicProgram::new();
    let signal: Vec<HermitianVar> = (0..m)
        .map(|i| program.add_hermitian(&format!("W{i}"), n))
        .collect();
    let an = program.add_hermitian("Q", n);
    let numerator: Vec<VarId> = (0..m).map(|i| program.add_var(format!("num{i}"))).collect();
    let denominator: Vec<VarId> = (0..m).map(|i| program.add_var(format!("den{i}"))).collect();
    let epigraph: Vec<VarId> = (0..m).map(|i| program.add_var(format!("r{i}"))).collect();
    for (i, c) in user_covariances.iter().enumerate() {
        let mut total = LinExpr::constant(noise_user) + an.trace_product(c);
        let mut interference = total.clone();
        for (mi, w) in signal.iter().enumerate() {
            let t = w.trace_product(c);
            if mi != i {
                interference += t.clone();
            }
            total += t;
        }
        program.push("user_signal", Constraint::exp_le(numerator[i], total));
        program.push(
            "user_interference",
            Constraint::le(interference, tangent(denominator[i], bars[i])),
        );
    }
    let mut power = an.trace();
    for w in &signal {
        power += w.trace();
    }
    program.push("power", Constraint::le(power, total_power));
    for w in &signal {
        program.push("psd", Constraint::Psd(w.clone()));
    }
    program.push("psd", Constraint::Psd(an.clone()));
    let mut objective = LinExpr::default();
    for i in 0..m {
        objective = objective + numerator[i] - denominator[i] - epigraph[i];
    }
    program.set_objective(objective);
    Common {
        program,
        signal,
        an,
        numerator,
        denominator,
        epigraph,
    }
}

/// `e^{x̄}(x - x̄ + 1)`.
fn tangent(x: VarId, bar: f64) -> LinExpr {
    let e = bar.exp();
    LinExpr::term(x, e) + e * (1.0 - bar)
}

/// Expected-covariance subproblem at the expansion points.
pub fn build_vmd_subproblem(
    model: &VmdModel,
    points: &VmdPoints,
) -> (ConicProgram, SubproblemVars) {
    let n = model.user_covariances[0].nrows();
    let m = model.user_covariances.len();
    let mut c = common_block(
        &model.user_covariances,
        n,
        model.noise_user,
        model.total_power,
        &points.q_bar,
    );
    let program = &mut c.program;
    let eve_total: Vec<VarId> = (0..model.eve_covariances.len())
        .map(|k| program.add_var(format!("c{k}")))
        .collect();
    let eve_interference: Vec<Vec<VarId>> = (0..m)
        .map(|i| {
            (0..eve_total.len())
                .map(|k| program.add_var(format!("d{i},{k}")))
                .collect()
        })
        .collect();
    for (k, h) in model.eve_covariances.iter().enumerate() {
        let an = c.an.trace_product(h);
        let traces: Vec<LinExpr> = c.signal.iter().map(|w| w.trace_product(h)).collect();
        let mut total = LinExpr::constant(model.noise_eve) + an.clone();
        for t in &traces {
            total += t.clone();
        }
        program.push(
            "eve_total",
            Constraint::le(total, tangent(eve_total[k], points.c_bar[k])),
        );
        for i in 0..m {
            let mut interference = LinExpr::constant(model.noise_eve) + an.clone();
            for (mi, t) in traces.iter().enumerate() {
                if mi != i {
                    interference += t.clone();
                }
            }
            program.push(
                "eve_interference",
                Constraint::exp_le(eve_interference[i][k], interference),
            );
            program.push(
                "epigraph",
                Constraint::ge(
                    c.epigraph[i],
                    LinExpr::from(eve_total[k]) - eve_interference[i][k],
                ),
            );
        }
    }
    let vars = SubproblemVars {
        signal: c.signal,
        an: c.an,
        numerator: c.numerator,
        denominator: c.denominator,
        eve_total,
        eve_interference,
        epigraph: c.epigraph,
        norms: Vec::new(),
    };
    (c.program, vars)
}

/// Norm-bounded subproblem at the expansion points.
pub fn build_maee_subproblem(
    model: &MaeeModel,
    points: &MaeePoints,
) -> (ConicProgram, SubproblemVars) {
    let n = model.user_covariances[0].nrows();
    let m = model.user_covariances.len();
    let k_count = model.eve_channels.len();
    let mut c = common_block(
        &model.user_covariances,
        n,
        model.noise_user,
        model.total_power,
        &points.t_bar,
    );
    let program = &mut c.program;
    let eve_total: Vec<VarId> = (0..k_count)
        .map(|k| program.add_var(format!("a{k}")))
        .collect();
    let eve_interference: Vec<Vec<VarId>> = (0..m)
        .map(|i| {
            (0..k_count)
                .map(|k| program.add_var(format!("b{i},{k}")))
                .collect()
        })
        .collect();
    // norms[mat][k], mat = M is Q
    let mats: Vec<HermitianVar> = c
        .signal
        .iter()
        .cloned()
        .chain(std::iter::once(c.an.clone()))
        .collect();
    let norms: Vec<Vec<VarId>> = (0..=m)
        .map(|mi| {
            (0..k_count)
                .map(|k| program.add_var(format!("n{mi},{k}")))
                .collect()
        })
        .collect();
    for (k, h) in model.eve_channels.iter().enumerate() {
        let cov = outer(h);
        let eps2 = 2.0 * model.epsilons[k];
        for (mi, w) in mats.iter().enumerate() {
            program.push(
                "norm",
                Constraint::SecondOrder {
                    t: norms[mi][k].into(),
                    x: w.times_vector(h),
                },
            );
        }
        let traces: Vec<LinExpr> = mats.iter().map(|w| w.trace_product(&cov)).collect();
        let mut upper = LinExpr::constant(model.noise_eve);
        for (mi, t) in traces.iter().enumerate() {
            upper += t.clone() + LinExpr::term(norms[mi][k], eps2);
        }
        program.push(
            "eve_total",
            Constraint::le(upper, tangent(eve_total[k], points.a_bar[k])),
        );
        for i in 0..m {
            let mut lower = LinExpr::constant(model.noise_eve);
            for (mi, t) in traces.iter().enumerate() {
                if mi != i {
                    lower += t.clone() + LinExpr::term(norms[mi][k], -eps2);
                }
            }
            program.push(
                "eve_interference",
                Constraint::exp_le(eve_interference[i][k], lower),
            );
            program.push(
                "epigraph",
                Constraint::ge(
                    c.epigraph[i],
                    LinExpr::from(eve_total[k]) - eve_interference[i][k],
                ),
            );
        }
    }
    let vars = SubproblemVars {
        signal: c.signal,
        an: c.an,
        numerator: c.numerator,
        denominator: c.denominator,
        eve_total,
        eve_interference,
        epigraph: c.epigraph,
        norms,
    };
    (c.program, vars)
}

pub use crate::linalg::psd_part as project_psd;

/// Clip solver round-off: PSD projection, then rescale into the power budget.
fn clean(beams: BeamformerSet, total_power: f64) -> BeamformerSet {
    let b = BeamformerSet::from_matrices(
        beams.signal_matrices.iter().map(project_psd).collect(),
        project_psd(&beams.an_matrix),
    );
    let p = b.power();
    if p > total_power {
        b.scaled(total_power / p)
    } else {
        b
    }
}

/// Random start: Gaussian vectors, total power `0.9·P_t` split equally
/// between the `M` streams and an `N`-vector AN covariance.
pub fn random_initialization(
    m: usize,
    n: usize,
    total_power: f64,
    rng: &mut ChaCha8Rng,
) -> BeamformerSet {
    let share = 0.9 * total_power / (m as f64 + 1.0);
    let mut draw = || {
        CVec::from_fn(n, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    };
    let signal: Vec<CMat> = (0..m)
        .map(|_| {
            let w = draw();
            outer(&w).scale(share / w.norm_squared())
        })
        .collect();
    let mut q = CMat::zeros(n, n);
    for _ in 0..n {
        q += outer(&draw());
    }
    let q = q.scale(share / trace_re(&q));
    BeamformerSet::from_matrices(signal, q)
}

/// One family of subproblems: expected-covariance or norm-bounded.
trait Family {
    fn num_users(&self) -> usize;
    fn num_antennas(&self) -> usize;
    /// Design objective, bit/s/Hz.
    fn objective(&self, beams: &BeamformerSet) -> f64;
    fn step(
        &self,
        beams: &BeamformerSet,
        settings: &SolverSettings,
    ) -> Result<(BeamformerSet, f64, SolveStatus)>;
}

impl Family for VmdModel {
    fn num_users(&self) -> usize {
        self.user_covariances.len()
    }
    fn num_antennas(&self) -> usize {
        self.user_covariances[0].nrows()
    }
    fn objective(&self, beams: &BeamformerSet) -> f64 {
        vmd_objective(self, beams)
    }
    fn step(
        &self,
        beams: &BeamformerSet,
        settings: &SolverSettings,
    ) -> Result<(BeamformerSet, f64, SolveStatus)> {
        let (program, vars) = build_vmd_subproblem(self, &linearization_points_vmd(self, beams));
        let sol = solve_conic(&program, settings)?;
        Ok((vars.beams(&sol.values), sol.objective / LN_2, sol.status))
    }
}

impl Family for MaeeModel {
    fn num_users(&self) -> usize {
        self.user_covariances.len()
    }
    fn num_antennas(&self) -> usize {
        self.user_covariances[0].nrows()
    }
    fn objective(&self, beams: &BeamformerSet) -> f64 {
        maee_objective(self, beams)
    }
    fn step(
        &self,
        beams: &BeamformerSet,
        settings: &SolverSettings,
    ) -> Result<(BeamformerSet, f64, SolveStatus)> {
        let (program, vars) = build_maee_subproblem(self, &linearization_points_maee(self, beams));
        let sol = solve_conic(&program, settings)?;
        Ok((vars.beams(&sol.values), sol.objective / LN_2, sol.status))
    }
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::NumericalLimit => "numerical_limit",
    }
}

/// Runs the SCA loop on a normalized family; returns normalized beams.
fn run_sca<F: Family>(
    family: &F,
    options: &ScaOptions,
    power_scale: f64,
) -> Result<(BeamformerSet, Vec<IterationRecord>, usize, bool, usize)> {
    options.validate()?;
    let settings = SolverSettings {
        tolerance: options.solver_tolerance,
        ..SolverSettings::default()
    };
    let mut trace = Vec::new();
    let mut last_reason = String::new();
    for restart in 0..=options.max_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(restart as u64);
        let mut beams =
            random_initialization(family.num_users(), family.num_antennas(), 1.0, &mut rng);
        let mut prev = family.objective(&beams);
        trace.push(IterationRecord {
            restart,
            iteration: 0,
            objective: prev,
            subproblem_objective: None,
            power: beams.power() * power_scale,
            status: "initial".into(),
        });
        if !prev.is_finite() {
            last_reason = "initial point has a nonpositive lower bound".into();
            continue;
        }
        let mut failed = false;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=options.max_iterations {
            let (next, sub, status) = match family.step(&beams, &settings) {
                Ok(v) => v,
                Err(e) => {
                    last_reason = e.to_string();
                    trace.push(IterationRecord {
                        restart,
                        iteration: it,
                        objective: f64::NAN,
                        subproblem_objective: None,
                        power: f64::NAN,
                        status: format!("failed: {e}"),
                    });
                    failed = true;
                    break;
                }
            };
            let next = clean(next, 1.0);
            let obj = family.objective(&next);
            trace.push(IterationRecord {
                restart,
                iteration: it,
                objective: obj,
                subproblem_objective: Some(sub),
                power: next.power() * power_scale,
                status: status_name(status).into(),
            });
            iterations = it;
            if !obj.is_finite() {
                last_reason = "iterate left the domain of the objective".into();
                failed = true;
                break;
            }
            let change = (obj - prev).abs();
            // keep the better of the two when the solver stalls
            if obj >= prev {
                beams = next;
            }
            if change <= options.rel_tolerance * prev.abs().max(CONVERGENCE_FLOOR) {
                converged = true;
                break;
            }
            prev = prev.max(obj);
        }
        if !failed {
            return Ok((beams, trace, iterations, converged, restart));
        }
    }
    Err(Error::DesignFailed {
        restarts: options.max_restarts,
        reason: last_reason,
    })
}

/// Rank-one factor of `W`: the scaled dominant eigenvector when
/// `λ₂/λ₁ < 1e-6`, otherwise the best of `trials` Gaussian draws
/// `ξ ~ CN(0, W)` rescaled to `Tr(W)`. The flag reports the exact case.
pub fn extract_rank_one(
    w: &CMat,
    mut evaluate: impl FnMut(&CVec) -> f64,
    trials: usize,
    seed: u64,
) -> (CVec, bool) {
    let n = w.nrows();
    let (vals, vecs) = eigh(w);
    let l1 = vals[n - 1];
    if l1 <= 0.0 {
        return (CVec::zeros(n), true);
    }
    let l2 = if n > 1 { vals[n - 2].max(0.0) } else { 0.0 };
    if l2 / l1 < 1e-6 {
        return (vecs.column(n - 1).scale(l1.sqrt()), true);
    }
    // W = V Λ V^H, so ξ = V Λ^{1/2} z with z ~ CN(0, I)
    let root = CMat::from_fn(n, n, |r, c| vecs[(r, c)] * vals[c].max(0.0).sqrt());
    let power = trace_re(w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, CVec)> = None;
    for _ in 0..trials.max(1) {
        let z = CVec::from_fn(n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let xi = &root * z;
        let norm2 = xi.norm_squared();
        if norm2 == 0.0 {
            continue;
        }
        let cand = xi.scale((power / norm2).sqrt());
        let v = evaluate(&cand);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, cand));
        }
    }
    (
        best.map(|(_, c)| c)
            .unwrap_or_else(|| vecs.column(n - 1).scale(l1.sqrt())),
        false,
    )
}

/// Extracts beam vectors stream by stream, scoring each candidate by the
/// sum secrecy rate at the estimated eavesdropper angles.
pub fn extract_beams(
    scenario: &Scenario,
    relaxed: BeamformerSet,
    trials: usize,
    seed: u64,
) -> BeamformerSet {
    let m = relaxed.num_users();
    let mut current = relaxed.clone();
    let mut vectors = Vec::with_capacity(m);
    let mut exact = Vec::with_capacity(m);
    for i in 0..m {
        let base = current.clone();
        let evaluate = |cand: &CVec| {
            let mut b = base.clone();
            b.signal_matrices[i] = outer(cand);
            sum_secrecy_rate(scenario, &scenario.eve_angles, &b)
                .map(|r| r.sum_rate)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (v, ok) = extract_rank_one(
            &relaxed.signal_matrices[i],
            evaluate,
            trials,
            seed.wrapping_add(i as u64),
        );
        current.signal_matrices[i] = outer(&v);
        vectors.push(v);
        exact.push(ok);
    }
    BeamformerSet {
        signal_matrices: relaxed.signal_matrices,
        an_matrix: relaxed.an_matrix,
        signal_vectors: Some(vectors),
        rank_one_exact: exact,
    }
}

fn finish<F: Family>(
    scenario: &Scenario,
    family_normalized: &F,
    options: &ScaOptions,
) -> Result<ScaOutcome> {
    scenario.validate()?;
    let pt = scenario.total_power;
    let (beams, trace, iterations, converged, restarts) = run_sca(family_normalized, options, pt)?;
    let objective = family_normalized.objective(&beams);
    let relaxed = beams.scaled(pt);
    let beams = extract_beams(
        scenario,
        relaxed,
        options.randomization_trials,
        options.seed,
    );
    Ok(ScaOutcome {
        beams,
        trace,
        iterations,
        converged,
        restarts,
        objective,
    })
}

/// Expected-covariance (Von Mises) robust design.
pub fn sca_vmd(scenario: &Scenario, options: &ScaOptions) -> Result<ScaOutcome> {
    let model =
        VmdModel::from_scenario(scenario, options.covariance_method, options.covariance_mass)?;
    sca_vmd_with(scenario, &model, options)
}

/// [`sca_vmd`] with caller-supplied covariances.
pub fn sca_vmd_with(
    scenario: &Scenario,
    model: &VmdModel,
    options: &ScaOptions,
) -> Result<ScaOutcome> {
    finish(scenario, &model.normalized(), options)
}

/// Norm-bounded (maximum angle error) robust design.
pub fn sca_maee(scenario: &Scenario, options: &ScaOptions) -> Result<ScaOutcome> {
    sca_maee_with(scenario, &MaeeModel::from_scenario(scenario)?, options)
}

/// [`sca_maee`] with a caller-supplied model (e.g. overridden `ε_k`).
pub fn sca_maee_with(
    scenario: &Scenario,
    model: &MaeeModel,
    options: &ScaOptions,
) -> Result<ScaOutcome> {
    finish(scenario, &model.normalized(), options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::channel;
    use crate::vonmises::VonMisesParams;

    fn tiny() -> Scenario {
        let mut s = Scenario::reference();
        s.geometry = s.geometry.with_antennas(2).unwrap();
        s.user_angles = vec![std::f64::consts::FRAC_PI_6];
        s.user_distances = vec![80.0];
        s.eve_angles = vec![std::f64::consts::FRAC_PI_4];
        s.eve_distances = vec![50.0];
        s
    }

    fn random_beams(s: &Scenario, seed: u64) -> BeamformerSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_initialization(s.num_users(), s.num_antennas(), s.total_power, &mut rng)
    }

    #[test]
    fn zero_beams_expand_at_noise() {
        let s = Scenario::reference();
        let model = VmdModel::point_estimate(&s).unwrap();
        let p = linearization_points_vmd(&model, &BeamformerSet::zeros(2, 6));
        assert!(p
            .q_bar
            .iter()
            .all(|&q| (q - s.noise_user.ln()).abs() < 1e-15));
        assert!(p
            .c_bar
            .iter()
            .all(|&c| (c - s.noise_eve.ln()).abs() < 1e-15));
        let mm = MaeeModel::from_scenario(&s).unwrap();
        let p = linearization_points_maee(&mm, &BeamformerSet::zeros(2, 6));
        assert!(p
            .t_bar
            .iter()
            .all(|&q| (q - s.noise_user.ln()).abs() < 1e-15));
        assert!(p
            .a_bar
            .iter()
            .all(|&c| (c - s.noise_eve.ln()).abs() < 1e-15));
    }

    #[test]
    fn points_match_direct_transcription() {
        let s = Scenario::reference();
        let model =
            VmdModel::from_scenario(&s, CovarianceMethod::ClosedForm, CovarianceMass::Truncated)
                .unwrap();
        let b = random_beams(&s, 4);
        let p = linearization_points_vmd(&model, &b);
        let users = s.user_channels().unwrap();
        for i in 0..2 {
            let h = &users[i].entries;
            let direct = (quadratic_form(&b.signal_matrices[1 - i], h)
                + quadratic_form(&b.an_matrix, h)
                + s.noise_user)
                .ln();
            assert!((p.q_bar[i] - direct).abs() < 1e-12);
        }
        for k in 0..4 {
            let c = &model.eve_covariances[k];
            let direct = (trace_product(c, &b.signal_matrices[0])
                + trace_product(c, &b.signal_matrices[1])
                + trace_product(c, &b.an_matrix)
                + s.noise_eve)
                .ln();
            assert!((p.c_bar[k] - direct).abs() < 1e-12);
        }
        // adding interference power raises q̄ for the other user
        let mut more = b.clone();
        more.signal_matrices[1] = more.signal_matrices[1].scale(2.0);
        let p2 = linearization_points_vmd(&model, &more);
        assert!(p2.q_bar[0] > p.q_bar[0]);
        let mm = MaeeModel::from_scenario(&s).unwrap();
        let a = linearization_points_maee(&mm, &b);
        let a2 = linearization_points_maee(&mm, &more);
        assert!(a2.t_bar[0] > a.t_bar[0]);
        assert!(a2.a_bar.iter().zip(&a.a_bar).all(|(x, y)| x > y));
        for (k, h) in mm.eve_channels.iter().enumerate() {
            let e = mm.epsilons[k];
            let direct: f64 = b
                .signal_matrices
                .iter()
                .chain(std::iter::once(&b.an_matrix))
                .map(|w| quadratic_form(w, h) + 2.0 * e * (w * h).norm())
                .sum::<f64>()
                + s.noise_eve;
            assert!((a.a_bar[k] - direct.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_count_tiny_vmd() {
        let s = tiny();
        let model = VmdModel::point_estimate(&s).unwrap();
        let b = random_beams(&s, 1);
        let (prog, _) = build_vmd_subproblem(&model, &linearization_points_vmd(&model, &b));
        let c = prog.counts();
        assert_eq!(c.exponential, 2);
        assert_eq!(c.psd, 2);
        assert_eq!(c.second_order, 0);
        // 29c, 29d, power, epigraph
        assert_eq!(c.linear, 4);
        for (tag, n) in [
            ("user_signal", 1),
            ("user_interference", 1),
            ("eve_total", 1),
            ("eve_interference", 1),
            ("power", 1),
            ("psd", 2),
            ("epigraph", 1),
        ] {
            assert_eq!(prog.count_tagged(tag), n, "{tag}");
        }
    }

    #[test]
    fn maee_norm_epigraph_count() {
        let s = Scenario::reference();
        let model = MaeeModel::from_scenario(&s).unwrap();
        let b = random_beams(&s, 1);
        let (prog, vars) = build_maee_subproblem(&model, &linearization_points_maee(&model, &b));
        assert_eq!(prog.counts().second_order, 4 * 3);
        assert_eq!(vars.norms.iter().flatten().count(), 12);
        assert!(prog.is_well_formed());
    }

    /// The current iterate with tight auxiliary values is feasible for the
    /// subproblem built at it (tangency).
    #[test]
    fn expansion_point_is_feasible() {
        let s = Scenario::reference();
        let model =
            VmdModel::from_scenario(&s, CovarianceMethod::ClosedForm, CovarianceMass::Truncated)
                .unwrap()
                .normalized();
        let b = random_beams(&s, 2).scaled(1.0 / s.total_power);
        let pts = linearization_points_vmd(&model, &b);
        let (prog, vars) = build_vmd_subproblem(&model, &pts);
        let mut x = vec![0.0; prog.num_vars()];
        vars.embed(&b, &mut x);
        for i in 0..2 {
            x[vars.numerator[i].index()] = received(&model.user_covariances[i], &b, None, 1.0).ln();
            x[vars.denominator[i].index()] = pts.q_bar[i];
        }
        for k in 0..4 {
            x[vars.eve_total[k].index()] = pts.c_bar[k];
            for i in 0..2 {
                x[vars.eve_interference[i][k].index()] =
                    received(&model.eve_covariances[k], &b, Some(i), 1.0).ln();
            }
        }
        for i in 0..2 {
            x[vars.epigraph[i].index()] = (0..4)
                .map(|k| x[vars.eve_total[k].index()] - x[vars.eve_interference[i][k].index()])
                .fold(f64::MIN, f64::max);
        }
        assert!(prog.max_violation(&x) < 1e-9, "{}", prog.max_violation(&x));
        // objective equals the design objective at the expansion point
        let obj = prog.objective().eval(&x) / LN_2;
        assert!((obj - vmd_objective(&model, &b)).abs() < 1e-9);

        let mm = MaeeModel::from_scenario(&s).unwrap().normalized();
        let pts = linearization_points_maee(&mm, &b);
        let (prog, vars) = build_maee_subproblem(&mm, &pts);
        let mut x = vec![0.0; prog.num_vars()];
        vars.embed(&b, &mut x);
        let mats: Vec<&CMat> = b
            .signal_matrices
            .iter()
            .chain(std::iter::once(&b.an_matrix))
            .collect();
        for (mi, w) in mats.iter().enumerate() {
            for (k, h) in mm.eve_channels.iter().enumerate() {
                x[vars.norms[mi][k].index()] = (*w * h).norm();
            }
        }
        for i in 0..2 {
            x[vars.numerator[i].index()] = received(&mm.user_covariances[i], &b, None, 1.0).ln();
            x[vars.denominator[i].index()] = pts.t_bar[i];
        }
        for k in 0..4 {
            x[vars.eve_total[k].index()] = pts.a_bar[k];
            for i in 0..2 {
                x[vars.eve_interference[i][k].index()] = maee_lower(&mm, i, k, &b).ln();
            }
        }
        for i in 0..2 {
            x[vars.epigraph[i].index()] = (0..4)
                .map(|k| x[vars.eve_total[k].index()] - x[vars.eve_interference[i][k].index()])
                .fold(f64::MIN, f64::max);
        }
        assert!(prog.max_violation(&x) < 1e-9, "{}", prog.max_violation(&x));
        let obj = prog.objective().eval(&x) / LN_2;
        assert!((obj - maee_objective(&mm, &b)).abs() < 1e-9);
    }

    #[test]
    fn zero_epsilon_collapses_to_point_estimate() {
        let s = Scenario::reference();
        let b = random_beams(&s, 3);
        let mm = MaeeModel::from_scenario(&s)
            .unwrap()
            .with_epsilons(vec![0.0; 4]);
        let vm = VmdModel::point_estimate(&s).unwrap();
        assert!((maee_objective(&mm, &b) - vmd_objective(&vm, &b)).abs() < 1e-12);
        let sol_m = {
            let (p, _) = build_maee_subproblem(
                &mm.normalized(),
                &linearization_points_maee(&mm.normalized(), &b.scaled(0.1)),
            );
            solve_conic(&p, &SolverSettings::default())
                .unwrap()
                .objective
        };
        let sol_v = {
            let (p, _) = build_vmd_subproblem(
                &vm.normalized(),
                &linearization_points_vmd(&vm.normalized(), &b.scaled(0.1)),
            );
            solve_conic(&p, &SolverSettings::default())
                .unwrap()
                .objective
        };
        assert!((sol_m - sol_v).abs() < 1e-6, "{sol_m} vs {sol_v}");
    }

    #[test]
    fn rank_one_input_returns_its_factor() {
        let h = channel(
            &crate::ArrayGeometry::half_wavelength(6, 3e9).unwrap(),
            0.4,
            1.0,
        )
        .unwrap()
        .entries
        .scale(3.0);
        let w = outer(&h);
        let (v, exact) = extract_rank_one(&w, |_| 0.0, 10, 0);
        assert!(exact);
        assert!((outer(&v) - &w).norm() <= 1e-10 * trace_re(&w));
    }

    #[test]
    fn randomization_preserves_power() {
        let w = CMat::identity(4, 4).scale(2.5);
        let (v, exact) = extract_rank_one(&w, |c| c[0].re, 200, 1);
        assert!(!exact);
        assert!((v.norm_squared() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn randomization_beats_dominant_eigenvector_on_average() {
        let s = Scenario::reference();
        let b = random_beams(&s, 8);
        let w = &b.signal_matrices[0] + b.an_matrix.scale(0.3);
        let score = |c: &CVec| {
            let mut bb = b.clone();
            bb.signal_matrices[0] = outer(c);
            sum_secrecy_rate(&s, &s.eve_angles, &bb).unwrap().sum_rate
        };
        let (vals, vecs) = eigh(&w);
        let dominant = vecs.column(5).scale(trace_re(&w).sqrt());
        let _ = vals;
        let base = score(&dominant);
        let mut wins = 0;
        for seed in 0..20 {
            let (v, _) = extract_rank_one(&w, score, 200, seed);
            if score(&v) >= base - 1e-3 {
                wins += 1;
            }
        }
        assert!(wins >= 15, "{wins}");
    }

    #[test]
    fn tiny_vmd_converges_monotonically() {
        let s = tiny();
        let out = sca_vmd(&s, &ScaOptions::default().with_seed(3)).unwrap();
        assert!(out.converged);
        let objs: Vec<f64> = out
            .trace
            .iter()
            .filter(|r| r.restart == out.restarts)
            .map(|r| r.objective)
            .collect();
        for w in objs.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "{objs:?}");
        }
        out.beams.check(s.total_power).unwrap();
        assert!(out
            .trace
            .iter()
            .all(|r| r.power.is_nan() || r.power <= s.total_power * (1.0 + 1e-6)));
    }

    #[test]
    fn trace_csv_has_header() {
        let s = tiny();
        let out = sca_vmd(
            &s,
            &ScaOptions {
                max_iterations: 2,
                ..ScaOptions::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&out.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("restart,iteration,objective,subproblem_objective,power,status"));
        assert_eq!(text.lines().count(), out.trace.len() + 1);
    }

    #[test]
    fn options_validation() {
        assert!(ScaOptions {
            max_iterations: 0,
            ..ScaOptions::default()
        }
        .validate()
        .is_err());
        assert!(ScaOptions {
            rel_tolerance: 0.0,
            ..ScaOptions::default()
        }
        .validate()
        .is_err());
        let _ = VonMisesParams::new(0.0, 1.0, 0.1).unwrap();
    }
}
