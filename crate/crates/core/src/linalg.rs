//! Thin complex linear-algebra helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

/// `v v^H`.
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Real part of `Tr(A B)`; exact for Hermitian `A`, `B`.
pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for u in 0..n {
        for v in 0..n {
            acc += (a[(u, v)] * b[(v, u)]).re;
        }
    }
    acc
}

/// `h^H A h` (real for Hermitian `A`).
pub fn quadratic_form(a: &CMat, h: &CVec) -> f64 {
    (h.adjoint() * a * h)[(0, 0)].re
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigenvalues (ascending) and matching eigenvectors of a Hermitian matrix.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(a.nrows(), a.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
pub fn psd_part(a: &CMat) -> CMat {
    let (vals, vecs) = eigh(a);
    let mut out = CMat::zeros(a.nrows(), a.ncols());
    for (j, &l) in vals.iter().enumerate() {
        if l > 0.0 {
            out += outer(&vecs.column(j).into_owned()).scale(l);
        }
    }
    out
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigh(a).0[0]
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for u in 0..n {
        for v in 0..n {
            worst = worst.max((a[(u, v)] - a[(v, u)].conj()).norm());
        }
    }
    worst
}

/// Orthogonal projector onto the null space of `h_1^H, ..., h_M^H`
/// (the complement of the span of the columns of `h`).
///
/// Returns `None` when the columns are numerically dependent.
pub fn null_space_projector(h: &CMat) -> Option<CMat> {
    let n = h.nrows();
    let gram = h.adjoint() * h;
    let pinv = invert_hermitian(&gram)?;
    Some(CMat::identity(n, n) - h * pinv * h.adjoint())
}

/// Inverse of a Hermitian positive-definite matrix; `None` when the
/// condition number exceeds ~1e12.
pub fn invert_hermitian(a: &CMat) -> Option<CMat> {
    let (values, _) = eigh(a);
    let largest = values.last().copied().unwrap_or(0.0);
    if largest <= 0.0 || values[0] <= largest * 1e-12 {
        return None;
    }
    let chol = hermitian_part(a).cholesky()?;
    Some(chol.inverse())
}
