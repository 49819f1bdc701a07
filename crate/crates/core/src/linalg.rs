//! Dense kernels not taken from nalgebra.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration. It is slower than
//! bidiagonalization for large matrices but accurate for tiny singular
//! values and always returns orthonormal singular vectors, which the
//! canonical forms downstream rely on.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `m = U diag(s) Vt` with `s` sorted decreasingly (stable for
/// ties). `U` is `rows x k`, `Vt` is `k x cols`, `k = min(rows, cols)`.
pub fn svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("SVD input contains non-finite values".into()));
    }
    if m.nrows() >= m.ncols() {
        jacobi_tall(m.clone())
    } else {
        let (u, s, vt) = jacobi_tall(m.transpose())?;
        Ok((vt.transpose(), s, u.transpose()))
    }
}

fn jacobi_tall(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, n) = a.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * (rows as f64).sqrt();
    // columns below eps * ||A||_F are rounding noise; rotating them never
    // reaches relative orthogonality
    let floor = (f64::EPSILON * a.norm()).powi(2);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let cp = a.column(p);
                    let cq = a.column(q);
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if alpha <= floor || beta <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }

    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap_or(std::cmp::Ordering::Equal));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = DMatrix::zeros(rows, n);
    let smax = s.first().copied().unwrap_or(0.0);
    for (out, &j) in order.iter().enumerate() {
        if norms[j] > smax * f64::EPSILON * 1e-3 && norms[j] > 0.0 {
            u.set_column(out, &(a.column(j) / norms[j]));
        }
    }
    orthonormalize_columns(&mut u);
    let vt = v.select_columns(order.iter()).transpose();
    Ok((u, s, vt))
}

#[inline]
fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.nrows();
    let data = m.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..(p + 1) * rows];
    let cq = &mut hi[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Modified Gram-Schmidt (two passes) in place. Columns that vanish after
/// projection are replaced by a completing standard basis vector.
pub(crate) fn orthonormalize_columns(u: &mut DMatrix<f64>) {
    let (rows, cols) = u.shape();
    let mut next_basis = 0usize;
    for j in 0..cols {
        let mut col = u.column(j).clone_owned();
        let mut nrm = project_out(u, j, &mut col);
        while nrm <= 1e-8 && next_basis < rows {
            col.fill(0.0);
            col[next_basis] = 1.0;
            next_basis += 1;
            nrm = project_out(u, j, &mut col);
        }
        u.set_column(j, &(col / nrm));
    }
}

/// Removes the components of `col` along the first `j` columns of `u`
/// (twice, for stability) and returns the remaining norm.
fn project_out(u: &DMatrix<f64>, j: usize, col: &mut nalgebra::DVector<f64>) -> f64 {
    for _ in 0..2 {
        for i in 0..j {
            let proj = u.column(i).dot(col);
            col.axpy(-proj, &u.column(i), 1.0);
        }
    }
    col.norm()
}
