//! The Riemannian manifold of inner products on `R^n`.
//!
//! Points are positive-definite symmetric Gram matrices. The tangent space at
//! every point is the space of symmetric matrices, with the affine-invariant
//! metric `g_s(u, v) = tr(s^{-1} v s^{-1} u)`. The slice of determinant-one
//! forms is totally geodesic and is used to represent points of the quotient
//! by positive scaling.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::{self, IntRows};
use crate::linalg;

/// Relative tolerance on `det = 1` for [`NormalizedPoint`].
pub const DET_ONE_TOL: f64 = 1e-9;

/// A positive-definite symmetric bilinear form on `R^n`, stored as its Gram
/// matrix in the standard basis.
#[derive(Clone, PartialEq)]
pub struct InnerProduct {
    gram: DMatrix<f64>,
}

impl InnerProduct {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        let gram = linalg::checked_symmetric(gram)?;
        if gram.nrows() == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        linalg::cholesky(&gram)?;
        Ok(Self { gram })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            gram: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                entries[i]
            } else {
                0.0
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn into_gram(self) -> DMatrix<f64> {
        self.gram
    }

    pub fn det(&self) -> f64 {
        self.gram.determinant()
    }

    /// Evaluates `s(v, w)`.
    pub fn eval(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * self.gram[(i, j)] * w[j];
            }
        }
        acc
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale {r} must be positive"
            )));
        }
        Self::new(&self.gram * r)
    }
}

impl fmt::Debug for InnerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InnerProduct")
            .field("gram", &linalg::to_rows(&self.gram))
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct GramJson {
    dim: usize,
    gram: Vec<Vec<f64>>,
}

impl Serialize for InnerProduct {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        GramJson {
            dim: self.dim(),
            gram: linalg::to_rows(&self.gram),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for InnerProduct {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = GramJson::deserialize(de)?;
        if raw.gram.len() != raw.dim {
            return Err(serde::de::Error::custom("gram row count differs from dim"));
        }
        InnerProduct::from_rows(&raw.gram).map_err(serde::de::Error::custom)
    }
}

/// A symmetric bilinear form, used as a tangent vector to the space of
/// inner products.
#[derive(Clone, PartialEq)]
pub struct SymTangent {
    mat: DMatrix<f64>,
}

impl SymTangent {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        Ok(Self {
            mat: linalg::checked_symmetric(mat)?,
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn scaled(&self, r: f64) -> Self {
        Self { mat: &self.mat * r }
    }

    pub(crate) fn from_symmetric_unchecked(mat: DMatrix<f64>) -> Self {
        Self {
            mat: linalg::symmetrize(&mat),
        }
    }
}

impl fmt::Debug for SymTangent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymTangent")
            .field("mat", &linalg::to_rows(&self.mat))
            .finish()
    }
}

impl Serialize for SymTangent {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        linalg::to_rows(&self.mat).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SymTangent {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        SymTangent::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A point of the quotient of the inner-product space by positive scaling,
/// represented by its determinant-one Gram matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct NormalizedPoint {
    rep: InnerProduct,
}

impl NormalizedPoint {
    /// Wraps a form whose determinant is already 1 within [`DET_ONE_TOL`].
    pub fn new(rep: InnerProduct) -> Result<Self> {
        let det = rep.det();
        if (det - 1.0).abs() > DET_ONE_TOL {
            return Err(Error::NotNormalized(det));
        }
        Ok(Self { rep })
    }

    pub fn rep(&self) -> &InnerProduct {
        &self.rep
    }

    pub fn into_rep(self) -> InnerProduct {
        self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn base_point(n: usize) -> Self {
        Self {
            rep: InnerProduct::identity(n),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(normalize_det(&InnerProduct::from_rows(rows)?))
    }
}

impl Serialize for NormalizedPoint {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.rep.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for NormalizedPoint {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rep = InnerProduct::deserialize(de)?;
        NormalizedPoint::new(rep).map_err(serde::de::Error::custom)
    }
}

/// An element of `GL_n(Z)`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct IntegerAutomorphism {
    dim: usize,
    mat: IntRows,
}

impl IntegerAutomorphism {
    pub fn new(mat: IntRows) -> Result<Self> {
        let n = mat.len();
        if n == 0 || mat.iter().any(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: mat.first().map_or(0, Vec::len),
            });
        }
        if !intmat::is_unimodular(&mat) {
            return Err(Error::NotUnimodular(intmat::determinant(&mat).to_string()));
        }
        Ok(Self { dim: n, mat })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            dim: n,
            mat: intmat::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &IntRows {
        &self.mat
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            mat: intmat::matmul(&self.mat, &other.mat)?,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            dim: self.dim,
            mat: intmat::inverse_unimodular(&self.mat)?,
        })
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.mat[i][j] as f64)
    }

    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        intmat::matvec(&self.mat, v)
    }
}

impl<'de> Deserialize<'de> for IntegerAutomorphism {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Obj { mat: IntRows },
            Bare(IntRows),
        }
        let mat = match Raw::deserialize(de)? {
            Raw::Obj { mat } | Raw::Bare(mat) => mat,
        };
        IntegerAutomorphism::new(mat).map_err(serde::de::Error::custom)
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// The metric tensor `g_s(u, v) = tr(s^{-1} v s^{-1} u)`.
pub fn metric_inner(s: &InnerProduct, u: &SymTangent, v: &SymTangent) -> Result<f64> {
    check_dims(s.dim(), u.dim())?;
    check_dims(s.dim(), v.dim())?;
    let chol = linalg::cholesky(s.gram())?;
    let su = chol.solve(u.mat());
    let sv = chol.solve(v.mat());
    Ok(linalg::trace_of_product(&sv, &su))
}

pub fn metric_norm(s: &InnerProduct, u: &SymTangent) -> Result<f64> {
    Ok(metric_inner(s, u, u)?.max(0.0).sqrt())
}

/// Geodesic distance `sqrt(sum ln^2 lambda_i)` over the eigenvalues of
/// `s0^{-1} s1`.
pub fn distance(s0: &InnerProduct, s1: &InnerProduct) -> Result<f64> {
    check_dims(s0.dim(), s1.dim())?;
    let ev = linalg::relative_eigenvalues(s0.gram(), s1.gram())?;
    if ev.iter().any(|&l| l <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(ev.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

/// Point at parameter `t` on the geodesic through `s0` (t = 0) and `s1` (t = 1).
pub fn geodesic(s0: &InnerProduct, s1: &InnerProduct, t: f64) -> Result<InnerProduct> {
    check_dims(s0.dim(), s1.dim())?;
    let l = linalg::cholesky(s0.gram())?.l();
    let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let inner = &linv * s1.gram() * linv.transpose();
    let powered = linalg::sym_apply(&inner, |x| x.powf(t));
    InnerProduct::new(linalg::symmetrize(&(&l * powered * l.transpose())))
}

/// Riemannian exponential map at `s`.
pub fn exp_map(s: &InnerProduct, u: &SymTangent) -> Result<InnerProduct> {
    check_dims(s.dim(), u.dim())?;
    let l = linalg::cholesky(s.gram())?.l();
    let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let inner = &linv * u.mat() * linv.transpose();
    let e = linalg::sym_apply(&inner, f64::exp);
    InnerProduct::new(linalg::symmetrize(&(&l * e * l.transpose())))
}

/// Riemannian logarithm: the tangent vector at `s0` whose exponential is `s1`.
pub fn log_map(s0: &InnerProduct, s1: &InnerProduct) -> Result<SymTangent> {
    check_dims(s0.dim(), s1.dim())?;
    let l = linalg::cholesky(s0.gram())?.l();
    let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let inner = &linv * s1.gram() * linv.transpose();
    let lg = linalg::sym_apply(&inner, f64::ln);
    Ok(SymTangent::from_symmetric_unchecked(
        &l * lg * l.transpose(),
    ))
}

/// Left action of `GL_n(Z)`: `s -> g^{-T} s g^{-1}`.
pub fn act(g: &IntegerAutomorphism, s: &InnerProduct) -> Result<InnerProduct> {
    check_dims(g.dim(), s.dim())?;
    let ginv = g.inverse()?.to_real();
    InnerProduct::new(linalg::symmetrize(&(ginv.transpose() * s.gram() * &ginv)))
}

/// The action on normalized points; `|det g| = 1` keeps the slice invariant.
pub fn act_point(g: &IntegerAutomorphism, x: &NormalizedPoint) -> Result<NormalizedPoint> {
    NormalizedPoint::new(act(g, x.rep())?)
}

/// Rescales `s` to determinant one.
///
/// The form is first divided by its largest diagonal entry. Each entry of
/// that quotient is the correctly rounded ratio `s_ij / max_k s_kk`, which
/// does not change when `s` is replaced by `r·s` (as long as `r·s` itself is
/// exact, e.g. for integer forms or power-of-two `r`), so the result is then
/// bitwise independent of `r`.
pub fn normalize_det(s: &InnerProduct) -> NormalizedPoint {
    let n = s.dim() as f64;
    let top = s.gram().diagonal().max();
    let pre = s.gram().map(|x| x / top);
    let factor = pre.determinant().powf(1.0 / n);
    let gram = linalg::symmetrize(&pre.map(|x| x / factor));
    NormalizedPoint {
        rep: InnerProduct { gram },
    }
}

/// Orthogonal projection of `u` onto the tangent space of the det-1 slice at
/// `s`, i.e. removes the `tr(s^{-1} u)` component along `s`.
pub fn project_traceless(s: &InnerProduct, u: &SymTangent) -> Result<SymTangent> {
    let chol = linalg::cholesky(s.gram())?;
    let tr = chol.solve(u.mat()).trace();
    let n = s.dim() as f64;
    Ok(SymTangent::from_symmetric_unchecked(
        u.mat() - s.gram() * (tr / n),
    ))
}
