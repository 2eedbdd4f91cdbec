//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky_lower(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol: Cholesky<f64, Dyn> = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    if l.diagonal().iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(l)
}

/// `log det(LLᵀ)` from a lower factor.
pub fn logdet_from_lower(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Solves `L z = b` for lower-triangular `L`.
pub fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    l.solve_lower_triangular(b).expect("triangular factor with positive diagonal")
}

/// Solves `Lᵀ z = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    l.tr_solve_lower_triangular(b).expect("triangular factor with positive diagonal")
}

/// Solves `(LLᵀ) x = b`.
pub fn chol_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    solve_lower_transpose(l, &solve_lower(l, b))
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    let ev = sym_eigenvalues(a);
    (ev[0], ev[ev.len() - 1])
}

/// Symmetric inverse square root `A^{-1/2} = Q Λ^{-1/2} Qᵀ`.
pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let max = eig.eigenvalues.amax();
    if eig.eigenvalues.iter().any(|&l| !(l > max * 1e-14) || !l.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(q * d * q.transpose())
}

/// `λ_max(A^{-1/2} B A^{-1/2})` for symmetric positive-definite `A` and symmetric `B`.
pub fn whitened_lambda_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let r = sym_inv_sqrt(a)?;
    Ok(sym_extremes(&(&r * b * &r)).1)
}

/// Explicit inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = cholesky_lower(a)?;
    let k = a.nrows();
    let mut inv = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = DVector::zeros(k);
        e[j] = 1.0;
        inv.set_column(j, &chol_solve(&l, &e));
    }
    Ok(symmetrize(&inv))
}

/// Upper-triangular `R` with `RᵀR = Xᵀ diag(w) X`, from a QR factorisation of
/// `diag(√w) X`. Better conditioned than forming the Gram matrix when the
/// weights span many orders of magnitude.
pub fn weighted_r_factor(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mut xw = x.clone();
    for (i, &wi) in w.iter().enumerate() {
        let s = wi.sqrt();
        xw.row_mut(i).scale_mut(s);
    }
    let mut r = xw.qr().r();
    // Normalise the diagonal sign so R is the transposed Cholesky factor.
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
        }
        if !(r[(i, i)] > 0.0 && r[(i, i)].is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(r)
}
