//! Slopes `c̃` between nested sublattices and the instability function
//! `d_W = exp(c̃ⁱ_W − c̃ˢ_W)`.
//!
//! `c̃ˢ_W` is a supremum over `W₀ ⊊ W` and is attained by the last segment of
//! the canonical polygon of `s|_W`; `c̃ⁱ_W` is an infimum over `W ⊊ W₂` and is
//! attained by the first segment of the polygon of the quotient form.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::enumerate::{lll_columns, EnumConfig};
use crate::lattice::polygon::canonical_polygon_with;
use crate::lattice::sublattice::{vol_w, Sublattice};
use crate::linalg;
use crate::symspace::{InnerProduct, NormalizedPoint};

/// `(ln vol_{W₁}(s) − ln vol_{W₀}(s)) / (rk W₁ − rk W₀)` for `W₀ ⊊ W₁`.
pub fn c_tilde(s: &InnerProduct, w0: &Sublattice, w1: &Sublattice) -> Result<f64> {
    if w0.rank() >= w1.rank() || !w1.contains(w0)? {
        return Err(Error::NotStrictContainment);
    }
    let num = vol_w(s, w1)?.ln() - vol_w(s, w0)?.ln();
    Ok(num / (w1.rank() - w0.rank()) as f64)
}

fn check_proper(s: &InnerProduct, w: &Sublattice) -> Result<()> {
    if w.ambient_dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: w.ambient_dim(),
        });
    }
    if !w.is_proper() {
        return Err(Error::NotProper {
            rank: w.rank(),
            dim: w.ambient_dim(),
        });
    }
    Ok(())
}

/// The forms induced on `W` and on `Z^n / W`, written in a reduced basis of
/// `Z^n` whose first `rk W` vectors span `W`. Slopes do not depend on the
/// basis, and a reduced one avoids the cancellation that long HNF bases
/// (e.g. `g·W` for large `g`) cause in Gram determinants.
fn adapted_forms(s: &InnerProduct, w: &Sublattice) -> Result<(InnerProduct, InnerProduct)> {
    let (n, m) = (s.dim(), w.rank());
    let p = lll_columns(s.gram(), w.splitting_matrix()?, Some(m))?;
    let pm = DMatrix::from_fn(n, n, |i, j| p[i][j] as f64);
    let g = linalg::symmetrize(&(pm.transpose() * s.gram() * &pm));
    let gw = g.view((0, 0), (m, m)).into_owned();
    let cross = g.view((m, 0), (n - m, m)).into_owned();
    let gv = g.view((m, m), (n - m, n - m)).into_owned();
    let solved = linalg::cholesky(&gw)?.solve(&cross.transpose());
    let quotient = gv - cross * solved;
    Ok((
        InnerProduct::new(gw)?,
        InnerProduct::new(linalg::symmetrize(&quotient))?,
    ))
}

pub fn c_sup(s: &InnerProduct, w: &Sublattice) -> Result<f64> {
    c_sup_with(s, w, &EnumConfig::default())
}

pub fn c_sup_with(s: &InnerProduct, w: &Sublattice, cfg: &EnumConfig) -> Result<f64> {
    check_proper(s, w)?;
    Ok(canonical_polygon_with(&adapted_forms(s, w)?.0, cfg)?.last_slope())
}

pub fn c_inf(s: &InnerProduct, w: &Sublattice) -> Result<f64> {
    c_inf_with(s, w, &EnumConfig::default())
}

pub fn c_inf_with(s: &InnerProduct, w: &Sublattice, cfg: &EnumConfig) -> Result<f64> {
    check_proper(s, w)?;
    Ok(canonical_polygon_with(&adapted_forms(s, w)?.1, cfg)?.first_slope())
}

/// `d̃_W(s)` for an arbitrary (not necessarily det-1) form.
pub fn d_w_tilde(s: &InnerProduct, w: &Sublattice) -> Result<f64> {
    d_w_tilde_with(s, w, &EnumConfig::default())
}

pub fn d_w_tilde_with(s: &InnerProduct, w: &Sublattice, cfg: &EnumConfig) -> Result<f64> {
    Ok((c_inf_with(s, w, cfg)? - c_sup_with(s, w, cfg)?).exp())
}

pub fn d_w(x: &NormalizedPoint, w: &Sublattice) -> Result<f64> {
    d_w_tilde(x.rep(), w)
}

pub fn d_w_with(x: &NormalizedPoint, w: &Sublattice, cfg: &EnumConfig) -> Result<f64> {
    d_w_tilde_with(x.rep(), w, cfg)
}
