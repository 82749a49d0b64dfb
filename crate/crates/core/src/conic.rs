//! A small conic modelling layer: real scalar variables, Hermitian matrix
//! variables, affine expressions and four cone kinds, solved with Clarabel.
//!
//! Programs are stated as maximizations. Hermitian `N×N` variables are
//! stored as `N²` reals (diagonal, then real and imaginary parts of the
//! strict upper triangle). `W ⪰ 0` is imposed on the real embedding
//! `[[Re W, -Im W], [Im W, Re W]]`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
    SupportedConeT::{
        ExponentialConeT, NonnegativeConeT, PSDTriangleConeT, SecondOrderConeT, ZeroConeT,
    },
};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMat, CVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `Σ c_j x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(v: VarId, c: f64) -> Self {
        Self {
            terms: vec![(v, c)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarId, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Terms with duplicates merged, sorted by variable.
    pub fn canonical_terms(&self) -> Vec<(VarId, f64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(t.len());
        for (v, c) in t {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|(v, _)| v.0).max()
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        self.add_expr(&rhs.into(), 1.0);
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: T) -> LinExpr {
        self.add_expr(&rhs.into(), -1.0);
        self
    }
}

impl<T: Into<LinExpr>> AddAssign<T> for LinExpr {
    fn add_assign(&mut self, rhs: T) {
        self.add_expr(&rhs.into(), 1.0);
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, rhs: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= rhs;
        }
        self.constant *= rhs;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

/// Hermitian `N×N` matrix variable.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianVar {
    n: usize,
    diag: Vec<VarId>,
    /// Strict upper triangle, row-major over `u < v`.
    re: Vec<VarId>,
    im: Vec<VarId>,
}

impl HermitianVar {
    pub fn dim(&self) -> usize {
        self.n
    }

    fn upper_index(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < v);
        u * self.n - u * (u + 1) / 2 + (v - u - 1)
    }

    /// `(Re W_uv, Im W_uv)` as expressions.
    pub fn entry(&self, u: usize, v: usize) -> (LinExpr, LinExpr) {
        use std::cmp::Ordering::*;
        match u.cmp(&v) {
            Equal => (self.diag[u].into(), LinExpr::default()),
            Less => {
                let k = self.upper_index(u, v);
                (self.re[k].into(), self.im[k].into())
            }
            Greater => {
                let k = self.upper_index(v, u);
                (self.re[k].into(), -LinExpr::from(self.im[k]))
            }
        }
    }

    pub fn trace(&self) -> LinExpr {
        let mut e = LinExpr::default();
        for &d in &self.diag {
            e.add_term(d, 1.0);
        }
        e
    }

    /// `Re Tr(A W)` for Hermitian `A`.
    pub fn trace_product(&self, a: &CMat) -> LinExpr {
        let mut e = LinExpr::default();
        for u in 0..self.n {
            e.add_term(self.diag[u], a[(u, u)].re);
            for v in u + 1..self.n {
                let k = self.upper_index(u, v);
                e.add_term(self.re[k], 2.0 * a[(u, v)].re);
                e.add_term(self.im[k], 2.0 * a[(u, v)].im);
            }
        }
        e
    }

    /// Real and imaginary parts of `W h`, stacked as `[Re; Im]`.
    pub fn times_vector(&self, h: &CVec) -> Vec<LinExpr> {
        let n = self.n;
        let mut re_out = vec![LinExpr::default(); n];
        let mut im_out = vec![LinExpr::default(); n];
        for u in 0..n {
            for v in 0..n {
                let (a, b) = self.entry(u, v);
                let (c, d) = (h[v].re, h[v].im);
                // (a + jb)(c + jd)
                re_out[u].add_expr(&a, c);
                re_out[u].add_expr(&b, -d);
                im_out[u].add_expr(&a, d);
                im_out[u].add_expr(&b, c);
            }
        }
        re_out.extend(im_out);
        re_out
    }

    /// Entry `(r, c)` of the real `2N×2N` embedding.
    fn embedding_entry(&self, r: usize, c: usize) -> LinExpr {
        let n = self.n;
        let (br, u) = (r / n, r % n);
        let (bc, v) = (c / n, c % n);
        let (x, y) = self.entry(u, v);
        match (br, bc) {
            (0, 0) | (1, 1) => x,
            (0, 1) => -y,
            _ => y,
        }
    }

    pub fn value(&self, x: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for u in 0..self.n {
            m[(u, u)] = Complex64::new(x[self.diag[u].0], 0.0);
            for v in u + 1..self.n {
                let k = self.upper_index(u, v);
                let z = Complex64::new(x[self.re[k].0], x[self.im[k].0]);
                m[(u, v)] = z;
                m[(v, u)] = z.conj();
            }
        }
        m
    }

    /// Coordinates of a Hermitian matrix in this variable's layout.
    pub fn coordinates(&self, w: &CMat, x: &mut [f64]) {
        for u in 0..self.n {
            x[self.diag[u].0] = w[(u, u)].re;
            for v in u + 1..self.n {
                let k = self.upper_index(u, v);
                x[self.re[k].0] = w[(u, v)].re;
                x[self.im[k].0] = w[(u, v)].im;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `expr ≥ 0`.
    NonNegative,
    /// `expr = 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Linear {
        expr: LinExpr,
        sense: Sense,
    },
    /// `‖x‖₂ ≤ t`.
    SecondOrder {
        t: LinExpr,
        x: Vec<LinExpr>,
    },
    /// `e^x ≤ z`.
    Exponential {
        x: LinExpr,
        z: LinExpr,
    },
    Psd(HermitianVar),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    Linear,
    SecondOrder,
    Exponential,
    Psd,
}

impl Constraint {
    /// `lhs ≤ rhs`.
    pub fn le(lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> Self {
        Constraint::Linear {
            expr: rhs.into() - lhs.into(),
            sense: Sense::NonNegative,
        }
    }

    /// `lhs ≥ rhs`.
    pub fn ge(lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> Self {
        Self::le(rhs, lhs)
    }

    pub fn eq(lhs: impl Into<LinExpr>, rhs: impl Into<LinExpr>) -> Self {
        Constraint::Linear {
            expr: lhs.into() - rhs.into(),
            sense: Sense::Zero,
        }
    }

    /// `e^x ≤ z`.
    pub fn exp_le(x: impl Into<LinExpr>, z: impl Into<LinExpr>) -> Self {
        Constraint::Exponential {
            x: x.into(),
            z: z.into(),
        }
    }

    pub fn kind(&self) -> ConeKind {
        match self {
            Constraint::Linear { .. } => ConeKind::Linear,
            Constraint::SecondOrder { .. } => ConeKind::SecondOrder,
            Constraint::Exponential { .. } => ConeKind::Exponential,
            Constraint::Psd(_) => ConeKind::Psd,
        }
    }

    /// Amount by which `x` violates the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::Linear { expr, sense } => {
                let v = expr.eval(x);
                match sense {
                    Sense::NonNegative => (-v).max(0.0),
                    Sense::Zero => v.abs(),
                }
            }
            Constraint::SecondOrder { t, x: xs } => {
                let norm = xs.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                (norm - t.eval(x)).max(0.0)
            }
            Constraint::Exponential { x: e, z } => (e.eval(x).exp() - z.eval(x)).max(0.0),
            Constraint::Psd(w) => (-min_eigenvalue(&w.value(x))).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConeCounts {
    pub linear: usize,
    pub second_order: usize,
    pub exponential: usize,
    pub psd: usize,
}

/// Maximize a linear objective subject to tagged cone constraints.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    names: Vec<String>,
    constraints: Vec<(&'static str, Constraint)>,
    objective: LinExpr,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> VarId {
        self.names.push(name.into());
        VarId(self.names.len() - 1)
    }

    pub fn add_hermitian(&mut self, name: &str, n: usize) -> HermitianVar {
        let diag = (0..n)
            .map(|u| self.add_var(format!("{name}[{u},{u}]")))
            .collect();
        let mut re = Vec::new();
        let mut im = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                re.push(self.add_var(format!("re {name}[{u},{v}]")));
                im.push(self.add_var(format!("im {name}[{u},{v}]")));
            }
        }
        HermitianVar { n, diag, re, im }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.names[v.0]
    }

    /// Adds a constraint under a free-form tag used for bookkeeping.
    pub fn push(&mut self, tag: &'static str, c: Constraint) {
        self.constraints.push((tag, c));
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn constraints(&self) -> impl Iterator<Item = (&'static str, &Constraint)> {
        self.constraints.iter().map(|(t, c)| (*t, c))
    }

    pub fn count_tagged(&self, tag: &str) -> usize {
        self.constraints.iter().filter(|(t, _)| *t == tag).count()
    }

    pub fn counts(&self) -> ConeCounts {
        let mut c = ConeCounts::default();
        for (_, con) in &self.constraints {
            match con.kind() {
                ConeKind::Linear => c.linear += 1,
                ConeKind::SecondOrder => c.second_order += 1,
                ConeKind::Exponential => c.exponential += 1,
                ConeKind::Psd => c.psd += 1,
            }
        }
        c
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|(_, c)| c.violation(x))
            .fold(0.0, f64::max)
    }

    /// Every expression references a declared variable.
    pub fn is_well_formed(&self) -> bool {
        let n = self.num_vars();
        let ok = |e: &LinExpr| e.max_var().is_none_or(|m| m < n);
        ok(&self.objective)
            && self.constraints.iter().all(|(_, c)| match c {
                Constraint::Linear { expr, .. } => ok(expr),
                Constraint::SecondOrder { t, x } => ok(t) && x.iter().all(ok),
                Constraint::Exponential { x, z } => ok(x) && ok(z),
                Constraint::Psd(w) => w.diag.iter().chain(&w.re).chain(&w.im).all(|v| v.0 < n),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// The solver stopped early; the iterate is the best available.
    NumericalLimit,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: u32,
}

impl ConicSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.values)
    }

    pub fn hermitian(&self, w: &HermitianVar) -> CMat {
        w.value(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Rows of `s = b - A x`, one expression per row.
#[derive(Default)]
struct RowBlock {
    rows: Vec<LinExpr>,
}

/// Solve with Clarabel. Primal infeasibility maps to [`Error::Infeasible`].
pub fn solve_conic(program: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    if !program.is_well_formed() {
        return Err(Error::Solver(
            "constraint references an undeclared variable".into(),
        ));
    }
    let n = program.num_vars();
    let mut zero = RowBlock::default();
    let mut nonneg = RowBlock::default();
    let mut soc: Vec<RowBlock> = Vec::new();
    let mut exp: Vec<RowBlock> = Vec::new();
    let mut psd: Vec<(usize, RowBlock)> = Vec::new();
    for (_, c) in &program.constraints {
        match c {
            Constraint::Linear { expr, sense } => match sense {
                Sense::NonNegative => nonneg.rows.push(expr.clone()),
                Sense::Zero => zero.rows.push(expr.clone()),
            },
            Constraint::SecondOrder { t, x } => {
                let mut rows = vec![t.clone()];
                rows.extend(x.iter().cloned());
                soc.push(RowBlock { rows });
            }
            Constraint::Exponential { x, z } => exp.push(RowBlock {
                rows: vec![x.clone(), LinExpr::constant(1.0), z.clone()],
            }),
            Constraint::Psd(w) => {
                let dim = 2 * w.n;
                let mut rows = Vec::with_capacity(dim * (dim + 1) / 2);
                for col in 0..dim {
                    for row in 0..=col {
                        let e = w.embedding_entry(row, col);
                        rows.push(if row == col {
                            e
                        } else {
                            e * std::f64::consts::SQRT_2
                        });
                    }
                }
                psd.push((dim, RowBlock { rows }));
            }
        }
    }

    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let mut all_rows: Vec<LinExpr> = Vec::new();
    if !zero.rows.is_empty() {
        cones.push(ZeroConeT(zero.rows.len()));
        all_rows.extend(zero.rows);
    }
    if !nonneg.rows.is_empty() {
        cones.push(NonnegativeConeT(nonneg.rows.len()));
        all_rows.extend(nonneg.rows);
    }
    for b in soc {
        cones.push(SecondOrderConeT(b.rows.len()));
        all_rows.extend(b.rows);
    }
    for b in exp {
        cones.push(ExponentialConeT());
        all_rows.extend(b.rows);
    }
    for (dim, b) in psd {
        cones.push(PSDTriangleConeT(dim));
        all_rows.extend(b.rows);
    }

    let m = all_rows.len();
    let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::with_capacity(m);
    for (r, e) in all_rows.iter().enumerate() {
        for (v, c) in e.canonical_terms() {
            ii.push(r);
            jj.push(v.0);
            vv.push(-c);
        }
        b.push(e.constant);
    }
    let a = CscMatrix::new_from_triplets(m, n, ii, jj, vv);
    let p = CscMatrix::<f64>::zeros((n, n));
    let mut q = vec![0.0; n];
    for (v, c) in program.objective.canonical_terms() {
        q[v.0] = -c;
    }
    let tol = settings.tolerance;
    let solver_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iterations)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .build()
        .map_err(|e| Error::Solver(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, solver_settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Err(Error::Infeasible)
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            return Err(Error::Solver("program is unbounded".into()))
        }
        SolverStatus::Unsolved => return Err(Error::Solver("solver did not run".into())),
        _ => SolveStatus::NumericalLimit,
    };
    if sol.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(format!(
            "non-finite iterate ({:?})",
            sol.status
        )));
    }
    let values = sol.x.clone();
    Ok(ConicSolution {
        objective: program.objective.eval(&values),
        values,
        status,
        iterations: sol.iterations,
    })
}
