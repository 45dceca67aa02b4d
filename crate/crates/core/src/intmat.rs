//! Exact integer matrix arithmetic: Hermite normal form with unimodular
//! transforms, determinants, and unimodular inverses.
//!
//! Intermediate values are arbitrary-precision; results are converted back to
//! `i64` and overflow is reported rather than wrapped.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type IntRows = Vec<Vec<i64>>;
type BigRows = Vec<Vec<BigInt>>;

fn to_big(a: &[Vec<i64>]) -> BigRows {
    a.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

fn from_big(a: &BigRows) -> Result<IntRows> {
    a.iter()
        .map(|r| {
            r.iter()
                .map(|x| x.to_i64().ok_or(Error::IntegerOverflow))
                .collect()
        })
        .collect()
}

fn identity_big(n: usize) -> BigRows {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn identity(n: usize) -> IntRows {
    (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub fn transpose(a: &[Vec<i64>]) -> IntRows {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| (0..rows).map(|i| a[i][j]).collect())
        .collect()
}

pub fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Result<IntRows> {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            if row.len() != inner {
                return Err(Error::DimensionMismatch {
                    expected: inner,
                    got: row.len(),
                });
            }
            (0..cols)
                .map(|j| {
                    let mut acc: i128 = 0;
                    for k in 0..inner {
                        acc += i128::from(row[k]) * i128::from(b[k][j]);
                    }
                    i64::try_from(acc).map_err(|_| Error::IntegerOverflow)
                })
                .collect()
        })
        .collect()
}

pub fn matvec(a: &[Vec<i64>], v: &[i64]) -> Result<Vec<i64>> {
    a.iter()
        .map(|row| {
            let acc: i128 = row
                .iter()
                .zip(v)
                .map(|(&x, &y)| i128::from(x) * i128::from(y))
                .sum();
            i64::try_from(acc).map_err(|_| Error::IntegerOverflow)
        })
        .collect()
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn determinant(a: &[Vec<i64>]) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m = to_big(a);
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

pub fn is_unimodular(a: &[Vec<i64>]) -> bool {
    a.iter().all(|r| r.len() == a.len()) && determinant(a).abs().is_one()
}

/// Row Hermite normal form `H = U * A` with `U` unimodular.
#[derive(Debug, Clone)]
pub struct RowHnf {
    /// Echelon form: positive pivots, entries above each pivot reduced into
    /// `[0, pivot)`, zero rows last.
    pub h: IntRows,
    pub u: IntRows,
    pub u_inv: IntRows,
    /// Column index of the pivot in each nonzero row.
    pub pivots: Vec<usize>,
}

impl RowHnf {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

pub fn row_hnf(a: &[Vec<i64>]) -> Result<RowHnf> {
    let r = a.len();
    let c = a.first().map_or(0, Vec::len);
    let mut m = to_big(a);
    let mut u = identity_big(r);
    let mut uinv = identity_big(r);
    let mut pivots = Vec::new();
    let mut row = 0;

    for col in 0..c {
        if row == r {
            break;
        }
        for i in row + 1..r {
            if m[i][col].is_zero() {
                continue;
            }
            let (g, x, y) = ext_gcd(&m[row][col], &m[i][col]);
            let p = &m[row][col] / &g;
            let q = &m[i][col] / &g;
            // [[x, y], [-q, p]] has determinant x*p + y*q = 1.
            combine_rows(&mut m, row, i, &x, &y, &q, &p);
            combine_rows(&mut u, row, i, &x, &y, &q, &p);
            for row_vec in uinv.iter_mut() {
                let a0 = row_vec[row].clone();
                let a1 = row_vec[i].clone();
                row_vec[row] = &a0 * &p + &a1 * &q;
                row_vec[i] = -(&a0 * &y) + &a1 * &x;
            }
        }
        if m[row][col].is_zero() {
            continue;
        }
        if m[row][col].is_negative() {
            for v in m[row].iter_mut().chain(u[row].iter_mut()) {
                *v = -v.clone();
            }
            for row_vec in uinv.iter_mut() {
                row_vec[row] = -row_vec[row].clone();
            }
        }
        let pivot = m[row][col].clone();
        for k in 0..row {
            let f = m[k][col].div_floor(&pivot);
            if f.is_zero() {
                continue;
            }
            for j in 0..c {
                let d = &f * &m[row][j];
                m[k][j] -= d;
            }
            for j in 0..r {
                let d = &f * &u[row][j];
                u[k][j] -= d;
            }
            for row_vec in uinv.iter_mut() {
                let d = &f * &row_vec[k];
                row_vec[row] += d;
            }
        }
        pivots.push(col);
        row += 1;
    }

    Ok(RowHnf {
        h: from_big(&m)?,
        u: from_big(&u)?,
        u_inv: from_big(&uinv)?,
        pivots,
    })
}

fn combine_rows(
    m: &mut BigRows,
    r0: usize,
    r1: usize,
    x: &BigInt,
    y: &BigInt,
    q: &BigInt,
    p: &BigInt,
) {
    for j in 0..m[r0].len() {
        let a0 = m[r0][j].clone();
        let a1 = m[r1][j].clone();
        m[r0][j] = x * &a0 + y * &a1;
        m[r1][j] = -(q * &a0) + p * &a1;
    }
}

pub fn rank(a: &[Vec<i64>]) -> Result<usize> {
    Ok(row_hnf(a)?.rank())
}

/// Exact inverse of a unimodular matrix.
pub fn inverse_unimodular(a: &[Vec<i64>]) -> Result<IntRows> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: a.first().map_or(0, Vec::len),
        });
    }
    let det = determinant(a);
    if !det.abs().is_one() {
        return Err(Error::NotUnimodular(det.to_string()));
    }
    // U * A = H with H upper triangular and unit diagonal, so H = I and U = A^{-1}.
    let hnf = row_hnf(a)?;
    if hnf.h != identity(n) {
        return Err(Error::Internal(
            "HNF of a unimodular matrix is not I".into(),
        ));
    }
    Ok(hnf.u)
}

pub fn gcd_of(v: &[i64]) -> i64 {
    v.iter().fold(0_i64, |g, &x| g.gcd(&x))
}
