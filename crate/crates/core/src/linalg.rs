//! Small dense helpers shared by the geometric modules.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Tolerance for treating a matrix as symmetric, relative to its largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn ensure_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest |a_ij - a_ji| divided by the largest |a_ij|.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Validates finiteness and symmetry, returning the averaged symmetric matrix.
pub fn checked_symmetric(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(&m)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = relative_asymmetry(&m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(symmetrize(&m))
}

pub fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)
}

pub fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    SymmetricEigen::try_new(symmetrize(m), 1e-15, 0)
        .expect("symmetric eigen-decomposition converges for finite input")
}

/// Applies `f` to the eigenvalues of the symmetric matrix `m`.
pub fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = sym_eigen(m);
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(q * d * q.transpose()))
}

/// Eigenvalues of `s0^{-1} s1` for SPD `s0`, `s1`, in ascending order.
pub fn relative_eigenvalues(s0: &DMatrix<f64>, s1: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = cholesky(s0)?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let m = &linv * s1 * linv.transpose();
    let mut vals: Vec<f64> = sym_eigen(&m).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    Ok(vals)
}

/// Singular values of a square matrix of the form `D₁ K D₂` with diagonal
/// `D₁`, `D₂` of wildly different scales and moderately conditioned `K`,
/// accurate in the relative sense.
///
/// Rows are sorted by decreasing norm, reduced by Householder QR with column
/// pivoting, and the triangular factor is diagonalized by one-sided Jacobi
/// rotations on its rows.
pub fn graded_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|i| a.row(i).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sorted = DMatrix::from_fn(n, a.ncols(), |i, j| a[(order[i], j)]);
    let r = sorted.col_piv_qr().r();
    let mut x = r.transpose();
    let m = x.ncols();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = x.column(p).norm_squared();
                let beta = x.column(q).norm_squared();
                let gamma = x.column(p).dot(&x.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..x.nrows() {
                    let (xp, xq) = (x[(i, p)], x[(i, q)]);
                    x[(i, p)] = c * xp - s * xq;
                    x[(i, q)] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..m).map(|j| x.column(j).norm()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `trace(a * b)` without forming the product.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}
