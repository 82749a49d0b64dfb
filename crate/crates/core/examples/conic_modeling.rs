//! The conic modelling layer on its own: maximise the top eigenvalue
//! quadratic form of a Hermitian PSD matrix with unit trace.

use num_complex::Complex64;
use robust_dm::conic::{solve_conic, ConicProgram, Constraint, SolverSettings};
use robust_dm::linalg::{eigh, CMat};

fn main() -> robust_dm::Result<()> {
    let a = CMat::from_fn(3, 3, |r, c| match (r, c) {
        (0, 0) => Complex64::new(2.0, 0.0),
        (1, 1) => Complex64::new(1.0, 0.0),
        (2, 2) => Complex64::new(0.5, 0.0),
        (0, 1) => Complex64::new(0.3, 0.4),
        (1, 0) => Complex64::new(0.3, -0.4),
        _ => Complex64::new(0.0, 0.0),
    });
    let mut p = ConicProgram::new();
    let w = p.add_hermitian("W", 3);
    p.push("trace", Constraint::eq(w.trace(), 1.0));
    p.push("psd", Constraint::Psd(w.clone()));
    p.set_objective(w.trace_product(&a));
    let sol = solve_conic(&p, &SolverSettings::default())?;
    let (vals, _) = eigh(&a);
    println!(
        "max Tr(AW) = {:.8}, lambda_max(A) = {:.8}",
        sol.objective,
        vals[vals.len() - 1]
    );
    Ok(())
}
