//! Exterior powers of `R^n` with the inner products induced by a form `s`,
//! the volume function of a decomposable multivector, and its gradient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::symspace::{InnerProduct, SymTangent};

/// Increasing index tuples of length `m` from `0..n`, in lexicographic order.
pub fn index_tuples(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    rec(0, n, m, &mut cur, &mut out);
    out
}

pub fn binomial(n: usize, m: usize) -> usize {
    if m > n {
        return 0;
    }
    (0..m).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// An element of `Λ^m R^n` in the basis `e_{i1} ∧ … ∧ e_{im}`, `i1 < … < im`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiVector {
    dim: usize,
    degree: usize,
    coords: Vec<f64>,
}

impl MultiVector {
    pub fn new(dim: usize, degree: usize, coords: Vec<f64>) -> Result<Self> {
        if degree > dim {
            return Err(Error::RankOutOfRange { rank: degree, dim });
        }
        let expected = binomial(dim, degree);
        if coords.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coords.len(),
            });
        }
        Ok(Self {
            dim,
            degree,
            coords,
        })
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        Self {
            dim,
            degree: 0,
            coords: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&x| x == 0.0)
    }
}

/// Linearly independent vectors `v_1, …, v_m` spanning `V_ξ` for
/// `ξ = v_1 ∧ … ∧ v_m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecomposableFrame {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl DecomposableFrame {
    pub fn new(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() > dim {
            return Err(Error::DependentVectors);
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let frame = Self { dim, vectors };
        if frame.rank() > 0 {
            // Normalized Gram determinant: product of squared sines of the
            // angles between each vector and the span of the previous ones.
            let g = frame.gram_under(&DMatrix::identity(dim, dim));
            let diag: f64 = (0..frame.rank()).map(|i| g[(i, i)]).product();
            if diag <= 0.0 || g.determinant() / diag <= 1e-20 {
                return Err(Error::DependentVectors);
            }
        }
        Ok(frame)
    }

    pub fn from_integer(dim: usize, vectors: &[Vec<i64>]) -> Result<Self> {
        Self::new(
            dim,
            vectors
                .iter()
                .map(|v| v.iter().map(|&x| x as f64).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// The `n × m` matrix with the frame vectors as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.rank(), |i, j| self.vectors[j][i])
    }

    fn gram_under(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        let f = self.matrix();
        f.transpose() * s * f
    }

    /// Replaces the frame by `frame · a` for an `m × m` matrix `a`.
    pub fn transformed(&self, a: &DMatrix<f64>) -> Result<Self> {
        let f = self.matrix() * a;
        Self::new(
            self.dim,
            (0..f.ncols())
                .map(|j| f.column(j).iter().copied().collect())
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for DecomposableFrame {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            vectors: Vec<Vec<f64>>,
        }
        let raw = Raw::deserialize(de)?;
        DecomposableFrame::new(raw.dim, raw.vectors).map_err(serde::de::Error::custom)
    }
}

fn check_dim(s: &InnerProduct, frame: &DecomposableFrame) -> Result<()> {
    if s.dim() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: frame.dim(),
        });
    }
    Ok(())
}

/// `det(s(v_i, v_j))`, the squared length of `ξ` in `Λ^m` under `s`.
pub fn gram_volume_squared(s: &InnerProduct, frame: &DecomposableFrame) -> Result<f64> {
    check_dim(s, frame)?;
    if frame.rank() == 0 {
        return Ok(1.0);
    }
    let det = frame.gram_under(s.gram()).determinant();
    if det <= 0.0 {
        return Err(Error::DependentVectors);
    }
    Ok(det)
}

/// The volume function `vol_ξ(s) = sqrt(det(s(v_i, v_j)))`.
pub fn gram_volume(s: &InnerProduct, frame: &DecomposableFrame) -> Result<f64> {
    Ok(gram_volume_squared(s, frame)?.sqrt())
}

/// Plücker coordinates: the `m × m` minors of the frame matrix.
pub fn wedge_coords(frame: &DecomposableFrame) -> MultiVector {
    let (n, m) = (frame.dim(), frame.rank());
    if m == 0 {
        return MultiVector::scalar(n, 1.0);
    }
    let f = frame.matrix();
    let coords = index_tuples(n, m)
        .iter()
        .map(|rows| DMatrix::from_fn(m, m, |i, j| f[(rows[i], j)]).determinant())
        .collect();
    MultiVector {
        dim: n,
        degree: m,
        coords,
    }
}

/// `v ∧ ξ` in `Λ^{m+1} R^n`.
pub fn wedge_vector(v: &[f64], xi: &MultiVector) -> Result<MultiVector> {
    let n = xi.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let m = xi.degree();
    if m == n {
        return Ok(MultiVector {
            dim: n,
            degree: n + 1,
            coords: Vec::new(),
        });
    }
    let basis = index_tuples(n, m);
    let lookup = |t: &[usize]| basis.binary_search_by(|b| b.as_slice().cmp(t)).ok();
    let coords = index_tuples(n, m + 1)
        .iter()
        .map(|big| {
            let mut acc = 0.0;
            for p in 0..big.len() {
                let rest: Vec<usize> = big
                    .iter()
                    .enumerate()
                    .filter(|&(q, _)| q != p)
                    .map(|(_, &i)| i)
                    .collect();
                let idx = lookup(&rest).expect("sub-tuple is a basis index");
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * v[big[p]] * xi.coords[idx];
            }
            acc
        })
        .collect();
    Ok(MultiVector {
        dim: n,
        degree: m + 1,
        coords,
    })
}

/// Whether `v ∧ ξ = 0` within `1e-9 · |v| · |ξ|`.
pub fn subspace_membership(v: &[f64], xi: &MultiVector) -> Result<bool> {
    if xi.is_zero() {
        return Err(Error::ZeroMultiVector);
    }
    let w = wedge_vector(v, xi)?;
    let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-9 * vnorm * xi.norm();
    Ok(w.coords.iter().all(|c| c.abs() <= tol))
}

/// Dimension of `{v : v ∧ ξ = 0}`; equals the degree exactly when `ξ` is
/// decomposable.
pub fn annihilator_dimension(xi: &MultiVector) -> Result<usize> {
    if xi.is_zero() {
        return Err(Error::ZeroMultiVector);
    }
    let n = xi.dim();
    if xi.degree() == n {
        return Ok(n);
    }
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        cols.push(DVector::from_vec(wedge_vector(&e, xi)?.coords));
    }
    let map = DMatrix::from_columns(&cols);
    let sv = map.svd(false, false).singular_values;
    let tol = 1e-9 * xi.norm();
    let rank = sv.iter().filter(|&&x| x > tol).count();
    Ok(n - rank)
}

pub fn is_decomposable(xi: &MultiVector) -> Result<bool> {
    Ok(annihilator_dimension(xi)? == xi.degree())
}

/// Induced inner product on `Λ^m`: `Σ_{I,J} ξ_I det(s_{I,J}) η_J`.
pub fn exterior_inner(s: &InnerProduct, xi: &MultiVector, eta: &MultiVector) -> Result<f64> {
    if xi.dim() != s.dim() || eta.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: xi.dim().max(eta.dim()),
        });
    }
    if xi.degree() != eta.degree() {
        return Err(Error::DimensionMismatch {
            expected: xi.degree(),
            got: eta.degree(),
        });
    }
    let m = xi.degree();
    if m == 0 {
        return Ok(xi.coords[0] * eta.coords[0]);
    }
    let tuples = index_tuples(s.dim(), m);
    let g = s.gram();
    let mut acc = 0.0;
    for (a, ti) in tuples.iter().enumerate() {
        if xi.coords[a] == 0.0 {
            continue;
        }
        for (b, tj) in tuples.iter().enumerate() {
            if eta.coords[b] == 0.0 {
                continue;
            }
            let minor = DMatrix::from_fn(m, m, |i, j| g[(ti[i], tj[j])]).determinant();
            acc += xi.coords[a] * minor * eta.coords[b];
        }
    }
    Ok(acc)
}

/// The form `s_ξ` that agrees with `s` on `V_ξ` and vanishes on its
/// `s`-orthogonal complement: `s F (Fᵀ s F)^{-1} Fᵀ s`.
pub fn s_xi(s: &InnerProduct, frame: &DecomposableFrame) -> Result<SymTangent> {
    check_dim(s, frame)?;
    let n = s.dim();
    if frame.rank() == 0 {
        return Ok(SymTangent::zeros(n));
    }
    let f = frame.matrix();
    let sf = s.gram() * &f;
    let g = f.transpose() * &sf;
    let chol = linalg::cholesky(&g).map_err(|_| Error::DependentVectors)?;
    let solved = chol.solve(&sf.transpose());
    Ok(SymTangent::from_symmetric_unchecked(sf * solved))
}

/// Gradient of `vol_ξ²` at `s`: `vol_ξ²(s) · s_ξ`.
pub fn grad_vol_squared(s: &InnerProduct, frame: &DecomposableFrame) -> Result<SymTangent> {
    let v2 = gram_volume_squared(s, frame)?;
    Ok(s_xi(s, frame)?.scaled(v2))
}

/// Gradient of `ln vol_ξ²` at `s`, which is `s_ξ`; its norm is `sqrt(m)`.
pub fn grad_log_vol_squared(s: &InnerProduct, frame: &DecomposableFrame) -> Result<SymTangent> {
    s_xi(s, frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symspace::metric_inner;

    fn frame(n: usize, vs: &[&[f64]]) -> DecomposableFrame {
        DecomposableFrame::new(n, vs.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    #[test]
    fn tuples_are_lexicographic() {
        assert_eq!(index_tuples(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(index_tuples(4, 0), vec![Vec::<usize>::new()]);
        assert_eq!(binomial(5, 2), 10);
    }

    #[test]
    fn volume_examples() {
        let i2 = InnerProduct::identity(2);
        assert_eq!(gram_volume(&i2, &frame(2, &[])).unwrap(), 1.0);
        assert_eq!(gram_volume(&i2, &frame(2, &[&[1.0, 0.0]])).unwrap(), 1.0);
        let v = gram_volume(&i2, &frame(2, &[&[1.0, 0.0], &[1.0, 1.0]])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let s = InnerProduct::diagonal(&[4.0, 9.0]).unwrap();
        let v = gram_volume(&s, &frame(2, &[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((v - 6.0).abs() < 1e-14);
    }

    #[test]
    fn wedge_examples() {
        let xi = wedge_coords(&frame(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]));
        assert_eq!(xi.coords(), &[1.0, 0.0, 0.0]);
        let xi = wedge_coords(&frame(2, &[&[1.0, 1.0], &[0.0, 1.0]]));
        assert_eq!(xi.coords(), &[1.0]);
        assert!(matches!(
            DecomposableFrame::new(2, vec![vec![1.0, 2.0], vec![1.0, 2.0]]),
            Err(Error::DependentVectors)
        ));
    }

    #[test]
    fn membership_examples() {
        let e12 = wedge_coords(&frame(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]));
        assert!(subspace_membership(&[1.0, 0.0, 0.0], &e12).unwrap());
        assert!(!subspace_membership(&[0.0, 0.0, 1.0], &e12).unwrap());
        let xi = wedge_coords(&frame(2, &[&[1.0, 1.0], &[0.0, 1.0]]));
        assert!(subspace_membership(&[1.0, 1.0], &xi).unwrap());
        let zero = MultiVector::new(2, 1, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            subspace_membership(&[1.0, 0.0], &zero),
            Err(Error::ZeroMultiVector)
        ));
    }

    #[test]
    fn decomposability_by_annihilator() {
        let xi = wedge_coords(&frame(4, &[&[1.0, 2.0, 0.0, 1.0], &[0.0, 1.0, 3.0, -1.0]]));
        assert!(is_decomposable(&xi).unwrap());
        // e1∧e2 + e3∧e4 is not decomposable
        let sym = MultiVector::new(4, 2, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(annihilator_dimension(&sym).unwrap(), 0);
        assert!(!is_decomposable(&sym).unwrap());
    }

    #[test]
    fn s_xi_examples() {
        let i2 = InnerProduct::identity(2);
        let sx = s_xi(&i2, &frame(2, &[&[1.0, 0.0]])).unwrap();
        assert_eq!(
            linalg::to_rows(sx.mat()),
            vec![vec![1.0, 0.0], vec![0.0, 0.0]]
        );
        let rho = 0.3;
        let s = InnerProduct::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let sx = s_xi(&s, &frame(2, &[&[1.0, 0.0]])).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, rho * rho]);
        assert!((sx.mat() - expect).abs().max() < 1e-15);
        let full = s_xi(&s, &frame(2, &[&[1.0, 0.0], &[1.0, 1.0]])).unwrap();
        assert!((full.mat() - s.gram()).abs().max() < 1e-14);
    }

    /// Metric-dual gradient from central differences: with `D_ij` the
    /// directional derivative along the symmetric unit `E_ij`, `G = s D s`.
    fn fd_gradient(s: &InnerProduct, frame: &DecomposableFrame) -> DMatrix<f64> {
        let n = s.dim();
        let h = 1e-5 * (1.0 + s.gram().norm());
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                let plus = InnerProduct::new(s.gram() + &e * h).unwrap();
                let minus = InnerProduct::new(s.gram() - &e * h).unwrap();
                let dd = (gram_volume_squared(&plus, frame).unwrap()
                    - gram_volume_squared(&minus, frame).unwrap())
                    / (2.0 * h);
                if i == j {
                    d[(i, i)] = dd;
                } else {
                    d[(i, j)] = dd / 2.0;
                    d[(j, i)] = dd / 2.0;
                }
            }
        }
        s.gram() * d * s.gram()
    }

    #[test]
    fn gradient_matches_difference_oracle() {
        let s = InnerProduct::diagonal(&[4.0, 9.0]).unwrap();
        let f = frame(2, &[&[1.0, 0.0]]);
        let oracle = fd_gradient(&s, &f);
        // frozen from the oracle: diag(16, 0)
        assert!(
            (oracle - DMatrix::from_row_slice(2, 2, &[16.0, 0.0, 0.0, 0.0]))
                .abs()
                .max()
                < 1e-6
        );
        let f = frame(2, &[&[1.0, 0.0]]);
        let oracle = fd_gradient(&InnerProduct::identity(2), &f);
        assert!(
            (oracle - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))
                .abs()
                .max()
                < 1e-8
        );
        let s = InnerProduct::from_rows(&[
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.0, -0.2],
            vec![0.1, -0.2, 1.5],
        ])
        .unwrap();
        let f = frame(3, &[&[1.0, 2.0, 0.0], &[0.0, 1.0, -1.0]]);
        let diff = fd_gradient(&s, &f) - grad_vol_squared(&s, &f).unwrap().mat();
        assert!(diff.abs().max() < 1e-6);
    }

    #[test]
    fn gradient_examples() {
        let g = grad_vol_squared(&InnerProduct::identity(2), &frame(2, &[&[1.0, 0.0]])).unwrap();
        assert_eq!(
            linalg::to_rows(g.mat()),
            vec![vec![1.0, 0.0], vec![0.0, 0.0]]
        );
        let s = InnerProduct::diagonal(&[4.0, 9.0]).unwrap();
        let g = grad_vol_squared(&s, &frame(2, &[&[1.0, 0.0]])).unwrap();
        assert!(
            (g.mat() - DMatrix::from_row_slice(2, 2, &[16.0, 0.0, 0.0, 0.0]))
                .abs()
                .max()
                < 1e-13
        );
        let i3 = InnerProduct::identity(3);
        let l =
            grad_log_vol_squared(&i3, &frame(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])).unwrap();
        let norm = metric_inner(&i3, &l, &l).unwrap().sqrt();
        assert!((norm - 2f64.sqrt()).abs() < 1e-15);
    }
}
