use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{self, DecomposableFrame, MultiVector};
use crate::intmat::{self, IntRows};
use crate::linalg;
use crate::symspace::{InnerProduct, IntegerAutomorphism};

/// A saturated submodule `W ⊆ Z^n`.
///
/// The basis is kept in row Hermite normal form (one row per basis vector),
/// so equal sublattices have equal representations.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Sublattice {
    ambient_dim: usize,
    basis: IntRows,
    pivots: Vec<usize>,
}

impl Ord for Sublattice {
    /// Rank first, then pivot columns, then basis entries. Among sublattices
    /// of one rank this puts `span{e_1}` before `span{e_2}`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.ambient_dim
            .cmp(&other.ambient_dim)
            .then(self.rank().cmp(&other.rank()))
            .then_with(|| self.pivots.cmp(&other.pivots))
            .then_with(|| self.basis.cmp(&other.basis))
    }
}

impl PartialOrd for Sublattice {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn canonical_rows(ambient_dim: usize, rows: &[Vec<i64>]) -> Result<(IntRows, Vec<usize>)> {
    if rows.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    for r in rows {
        if r.len() != ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: ambient_dim,
                got: r.len(),
            });
        }
    }
    let hnf = intmat::row_hnf(rows)?;
    let k = hnf.rank();
    Ok((hnf.h.into_iter().take(k).collect(), hnf.pivots))
}

impl Sublattice {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: intmat::identity(ambient_dim),
            pivots: (0..ambient_dim).collect(),
        }
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let rows: IntRows = axes
            .iter()
            .map(|&a| (0..ambient_dim).map(|j| i64::from(j == a)).collect())
            .collect();
        Self::new(ambient_dim, &rows)
    }

    /// Builds a sublattice from a basis that must already be saturated and
    /// independent.
    pub fn new(ambient_dim: usize, vectors: &[Vec<i64>]) -> Result<Self> {
        let sat = saturate(ambient_dim, vectors)?;
        let (rows, _) = canonical_rows(ambient_dim, vectors)?;
        if rows != sat.basis {
            return Err(Error::InvalidParameter(
                "basis does not span a saturated sublattice".into(),
            ));
        }
        Ok(sat)
    }

    /// Wraps rows that are known to be a saturated basis, canonicalizing them.
    pub(crate) fn from_saturated_rows(ambient_dim: usize, rows: &[Vec<i64>]) -> Result<Self> {
        let (basis, pivots) = canonical_rows(ambient_dim, rows)?;
        if basis.len() != rows.len() {
            return Err(Error::DependentVectors);
        }
        Ok(Self {
            ambient_dim,
            basis,
            pivots,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Basis vectors, one per row, in Hermite normal form.
    pub fn basis(&self) -> &IntRows {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Whether `0 < rank < n`.
    pub fn is_proper(&self) -> bool {
        self.rank() > 0 && self.rank() < self.ambient_dim
    }

    pub fn frame(&self) -> DecomposableFrame {
        DecomposableFrame::from_integer(self.ambient_dim, &self.basis)
            .expect("sublattice bases are independent")
    }

    /// The `n × m` real matrix with the basis vectors as columns.
    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ambient_dim, self.rank(), |i, j| {
            self.basis[j][i] as f64
        })
    }

    pub fn contains_vector(&self, v: &[i64]) -> Result<bool> {
        if v.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: v.len(),
            });
        }
        if v.iter().all(|&x| x == 0) {
            return Ok(true);
        }
        // saturated: membership is membership of the rational span
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        Ok(intmat::rank(&rows)? == self.rank())
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &Sublattice) -> Result<bool> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: other.ambient_dim,
            });
        }
        if other.rank() > self.rank() {
            return Ok(false);
        }
        for v in &other.basis {
            if !self.contains_vector(v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Image `g·W` under an integer automorphism.
    pub fn transform(&self, g: &IntegerAutomorphism) -> Result<Self> {
        if g.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                got: g.dim(),
            });
        }
        let rows: IntRows = self
            .basis
            .iter()
            .map(|v| g.apply(v))
            .collect::<Result<_>>()?;
        Self::from_saturated_rows(self.ambient_dim, &rows)
    }

    /// A deterministic complement `V` with `W ⊕ V = Z^n`, one basis vector
    /// per row.
    ///
    /// Each complement vector is reduced modulo `W` at the pivot columns of
    /// `W`; when all pivots of `W` equal 1 this makes `V` the span of the
    /// non-pivot coordinate axes.
    pub fn complement(&self) -> Result<IntRows> {
        let n = self.ambient_dim;
        let m = self.rank();
        if m == 0 {
            return Ok(intmat::identity(n));
        }
        if m == n {
            return Ok(Vec::new());
        }
        let hnf = intmat::row_hnf(&intmat::transpose(&self.basis))?;
        let raw: IntRows = (m..n)
            .map(|j| (0..n).map(|i| hnf.u_inv[i][j]).collect())
            .collect();
        let (mut rows, _) = canonical_rows(n, &raw)?;
        for row in rows.iter_mut() {
            for (w, &p) in self.basis.iter().zip(&self.pivots) {
                let f = row[p].div_euclid(w[p]);
                if f != 0 {
                    for (x, &y) in row.iter_mut().zip(w) {
                        *x -= f * y;
                    }
                }
            }
        }
        let (rows, _) = canonical_rows(n, &rows)?;
        let mut full = self.basis.clone();
        full.extend(rows.iter().cloned());
        if !intmat::is_unimodular(&full) {
            return Err(Error::Internal("complement does not split Z^n".into()));
        }
        Ok(rows)
    }

    /// The unimodular matrix whose columns are the basis of `W` followed by
    /// the basis of its complement.
    pub fn splitting_matrix(&self) -> Result<IntRows> {
        let mut cols = self.basis.clone();
        cols.extend(self.complement()?);
        Ok(intmat::transpose(&cols))
    }

    /// Image of `other ⊇ self` in `Z^n / W`, in the coordinates of the
    /// complement basis.
    pub fn project_quotient(&self, other: &Sublattice) -> Result<Sublattice> {
        if !other.contains(self)? {
            return Err(Error::NotStrictContainment);
        }
        let m = self.rank();
        let n = self.ambient_dim;
        let pinv = intmat::inverse_unimodular(&self.splitting_matrix()?)?;
        let images: IntRows = other
            .basis
            .iter()
            .map(|v| Ok(intmat::matvec(&pinv, v)?[m..].to_vec()))
            .collect::<Result<_>>()?;
        let (rows, _) = canonical_rows(n - m, &images)?;
        saturate(n - m, &rows)
    }

    /// Preimage in `Z^n` of a sublattice `u` of `Z^n / W` given in the
    /// complement coordinates.
    pub fn lift_from_quotient(&self, u: &Sublattice) -> Result<Sublattice> {
        let comp = self.complement()?;
        if u.ambient_dim != comp.len() {
            return Err(Error::DimensionMismatch {
                expected: comp.len(),
                got: u.ambient_dim,
            });
        }
        let mut rows = self.basis.clone();
        for coeffs in &u.basis {
            let mut v = vec![0i64; self.ambient_dim];
            for (c, w) in coeffs.iter().zip(&comp) {
                for (x, &y) in v.iter_mut().zip(w) {
                    *x = x
                        .checked_add(c.checked_mul(y).ok_or(Error::IntegerOverflow)?)
                        .ok_or(Error::IntegerOverflow)?;
                }
            }
            rows.push(v);
        }
        Self::from_saturated_rows(self.ambient_dim, &rows)
    }
}

/// The smallest saturated sublattice containing the given vectors, which
/// must be linearly independent over `Q`.
pub fn saturate(ambient_dim: usize, vectors: &[Vec<i64>]) -> Result<Sublattice> {
    let m = vectors.len();
    if m == 0 {
        return Ok(Sublattice::zero(ambient_dim));
    }
    for v in vectors {
        if v.len() != ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: ambient_dim,
                got: v.len(),
            });
        }
    }
    // U Bᵀ = H with H of rank m: the first m columns of U^{-1} span the
    // rational span of B and extend to a basis of Z^n.
    let hnf = intmat::row_hnf(&intmat::transpose(vectors))?;
    if hnf.rank() != m {
        return Err(Error::DependentVectors);
    }
    let rows: IntRows = (0..m)
        .map(|j| (0..ambient_dim).map(|i| hnf.u_inv[i][j]).collect())
        .collect();
    Sublattice::from_saturated_rows(ambient_dim, &rows)
}

/// Integer Plücker coordinates of a generator of `Λ^m W`, divided by their
/// gcd and signed so the first nonzero coordinate is positive.
pub fn xi_of(w: &Sublattice) -> Result<Vec<i64>> {
    let m = w.rank();
    if m == 0 {
        return Ok(vec![1]);
    }
    let mut coords: Vec<i64> = exterior::index_tuples(w.ambient_dim, m)
        .iter()
        .map(|rows| {
            let minor: IntRows = (0..m)
                .map(|i| (0..m).map(|j| w.basis[j][rows[i]]).collect())
                .collect();
            num_traits::ToPrimitive::to_i64(&intmat::determinant(&minor))
                .ok_or(Error::IntegerOverflow)
        })
        .collect::<Result<_>>()?;
    let g = intmat::gcd_of(&coords);
    if g > 1 {
        coords.iter_mut().for_each(|c| *c /= g);
    }
    if coords.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
        coords.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(coords)
}

pub fn xi_multivector(w: &Sublattice) -> Result<MultiVector> {
    let coords = xi_of(w)?;
    MultiVector::new(
        w.ambient_dim,
        w.rank(),
        coords.into_iter().map(|c| c as f64).collect(),
    )
}

/// `vol_W(s)`: the square root of the Gram determinant of a basis of `W`.
pub fn vol_w(s: &InnerProduct, w: &Sublattice) -> Result<f64> {
    if s.dim() != w.ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: w.ambient_dim,
        });
    }
    exterior::gram_volume(s, &w.frame())
}

/// The restriction `Bᵀ s B` of `s` to `W`, as a form on `Z^m`.
pub fn restricted_form(s: &InnerProduct, w: &Sublattice) -> Result<InnerProduct> {
    if w.rank() == 0 {
        return Err(Error::RankOutOfRange {
            rank: 0,
            dim: s.dim(),
        });
    }
    let b = w.basis_matrix();
    InnerProduct::new(linalg::symmetrize(&(b.transpose() * s.gram() * b)))
}

/// Form induced on `Z^n / W` by orthogonal projection onto `W^⊥`, together
/// with the complement basis identifying `Z^{n-m}` with the quotient.
pub fn quotient_form(s: &InnerProduct, w: &Sublattice) -> Result<(InnerProduct, IntRows)> {
    let n = s.dim();
    if w.ambient_dim != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.ambient_dim,
        });
    }
    if w.rank() == n {
        return Err(Error::RankOutOfRange { rank: n, dim: n });
    }
    let comp = w.complement()?;
    let c = DMatrix::from_fn(n, comp.len(), |i, j| comp[j][i] as f64);
    let csc = c.transpose() * s.gram() * &c;
    if w.rank() == 0 {
        return Ok((InnerProduct::new(linalg::symmetrize(&csc))?, comp));
    }
    let b = w.basis_matrix();
    let sb = s.gram() * &b;
    let gw = b.transpose() * &sb;
    let chol = linalg::cholesky(&gw)?;
    let cross = c.transpose() * &sb;
    let schur = csc - &cross * chol.solve(&cross.transpose());
    Ok((InnerProduct::new(linalg::symmetrize(&schur))?, comp))
}

#[derive(Serialize, Deserialize)]
struct SublatticeJson {
    ambient_dim: usize,
    basis: IntRows,
}

impl Serialize for Sublattice {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SublatticeJson {
            ambient_dim: self.ambient_dim,
            basis: self.basis.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Sublattice {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = SublatticeJson::deserialize(de)?;
        Sublattice::new(raw.ambient_dim, &raw.basis).map_err(serde::de::Error::custom)
    }
}
