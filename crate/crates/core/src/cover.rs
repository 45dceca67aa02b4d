//! The cover sets `X(W, t) = {x : d_W(x) > t}` of the reduced space, their
//! simultaneous activations, and the block structure of the stabilizer of a
//! sublattice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::intmat::{self, IntRows};
use crate::lattice::{d_w_with, sublattices_within, EnumConfig, Sublattice};
use crate::linalg;
use crate::report::{Outcome, Report};
use crate::symspace::{InnerProduct, IntegerAutomorphism, NormalizedPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSet {
    w: Sublattice,
    t: f64,
}

impl CoverSet {
    pub fn new(w: Sublattice, t: f64) -> Result<Self> {
        if !w.is_proper() {
            return Err(Error::NotProper {
                rank: w.rank(),
                dim: w.ambient_dim(),
            });
        }
        check_t(t)?;
        Ok(Self { w, t })
    }

    pub fn sublattice(&self) -> &Sublattice {
        &self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `g·X(W, t) = X(gW, t)`.
    pub fn transform(&self, g: &IntegerAutomorphism) -> Result<Self> {
        Ok(Self {
            w: self.w.transform(g)?,
            t: self.t,
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t must be finite and ≥ 1, got {t}"
        )));
    }
    Ok(())
}

pub fn in_cover_set(x: &NormalizedPoint, c: &CoverSet) -> Result<bool> {
    in_cover_set_with(x, c, &EnumConfig::default())
}

pub fn in_cover_set_with(x: &NormalizedPoint, c: &CoverSet, cfg: &EnumConfig) -> Result<bool> {
    Ok(d_w_with(x, &c.w, cfg)? > c.t)
}

/// Every proper `W` with `d_W(x) > t`, sorted by rank, with no chain check.
///
/// For a det-one form, `c̃ˢ_W ≥ ln vol_W / m` and `c̃ⁱ_W ≤ −ln vol_W / (n−m)`,
/// so `d_W > t` forces `vol_W < t^{−m(n−m)/n}`; only those `W` are
/// enumerated.
pub fn active_sets_unchecked(
    x: &NormalizedPoint,
    t: f64,
    cfg: &EnumConfig,
) -> Result<Vec<(Sublattice, f64)>> {
    check_t(t)?;
    let n = x.dim();
    let mut out = Vec::new();
    for m in 1..n {
        let exponent = (m * (n - m)) as f64 / n as f64;
        let bound = t.powf(-exponent) * (1.0 + 1e-6);
        for (w, _) in sublattices_within(x.rep(), m, bound, cfg)? {
            let d = d_w_with(x, &w, cfg)?;
            if d > t {
                out.push((w, d));
            }
        }
    }
    Ok(out)
}

/// Position of the first pair of consecutive entries that are not nested.
fn chain_break(ws: &[Sublattice]) -> Result<Option<usize>> {
    for (i, pair) in ws.windows(2).enumerate() {
        if pair[0].rank() >= pair[1].rank() || !pair[1].contains(&pair[0])? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// The active sublattices at `x`; errors with `ChainViolation` if they are
/// not totally ordered by inclusion.
pub fn active_sets(x: &NormalizedPoint, t: f64) -> Result<Vec<Sublattice>> {
    active_sets_with(x, t, &EnumConfig::default())
}

pub fn active_sets_with(x: &NormalizedPoint, t: f64, cfg: &EnumConfig) -> Result<Vec<Sublattice>> {
    let ws: Vec<Sublattice> = active_sets_unchecked(x, t, cfg)?
        .into_iter()
        .map(|(w, _)| w)
        .collect();
    if chain_break(&ws)?.is_some() {
        return Err(Error::ChainViolation);
    }
    Ok(ws)
}

/// A `β` with `B_α(X(W, t+β)) ⊆ X(W, t)`: `(e^{2√n α} − 1)·t`, inflated by a
/// relative margin of `1e-6`.
pub fn neighborhood_beta(alpha: f64, t: f64, n: usize) -> f64 {
    (2.0 * (n as f64).sqrt() * alpha).exp_m1() * t * (1.0 + 1e-6)
}

fn point_json(x: &NormalizedPoint) -> serde_json::Value {
    json!(linalg::to_rows(x.rep().gram()))
}

/// Checks at each sample that the active sublattices form a chain.
pub fn verify_chain_condition(samples: &[NormalizedPoint], t: f64) -> Result<Report> {
    verify_chain_condition_with(samples, t, &EnumConfig::default())
}

pub fn verify_chain_condition_with(
    samples: &[NormalizedPoint],
    t: f64,
    cfg: &EnumConfig,
) -> Result<Report> {
    check_t(t)?;
    let results: Vec<(Outcome, usize)> = samples
        .par_iter()
        .map(|x| match active_sets_unchecked(x, t, cfg) {
            Err(Error::Uncertified(_)) => Ok((Outcome::Uncertified, 0)),
            Err(e) => Err(e),
            Ok(active) => {
                let ws: Vec<Sublattice> = active.iter().map(|(w, _)| w.clone()).collect();
                let outcome = match chain_break(&ws)? {
                    None => Outcome::Pass,
                    Some(i) => Outcome::Violation(
                        "active sublattices are not nested".into(),
                        json!({
                            "point": point_json(x),
                            "pair": [ws[i], ws[i + 1]],
                            "d_w": [active[i].1, active[i + 1].1],
                        }),
                    ),
                };
                Ok((outcome, ws.len()))
            }
        })
        .collect::<Result<_>>()?;
    let max_active = results.iter().map(|r| r.1).max().unwrap_or(0);
    let activated = results.iter().filter(|r| r.1 > 0).count();
    let mut report = Report::from_outcomes(
        "chain condition",
        results.into_iter().map(|r| r.0).collect(),
    );
    report
        .stat("t", t)
        .stat("max_active", max_active)
        .stat("points_with_active_sets", activated);
    Ok(report)
}

/// Blocks of `g` in the splitting `Z^n = W ⊕ V`: `P⁻¹ g P = (φ_W φ_VW; 0 φ_V)`
/// where `P` has the bases of `W` and of its complement `V` as columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerDecomposition {
    pub phi_w: IntRows,
    pub phi_v: IntRows,
    pub phi_vw: IntRows,
}

impl StabilizerDecomposition {
    fn block_matrix(&self) -> IntRows {
        let m = self.phi_w.len();
        let k = self.phi_v.len();
        let mut out = vec![vec![0i64; m + k]; m + k];
        for i in 0..m {
            out[i][..m].copy_from_slice(&self.phi_w[i]);
            out[i][m..].copy_from_slice(&self.phi_vw[i]);
        }
        for i in 0..k {
            out[m + i][m..].copy_from_slice(&self.phi_v[i]);
        }
        out
    }

    /// Rebuilds `g = P · blocks · P⁻¹` for the splitting of `w`.
    pub fn reassemble(&self, w: &Sublattice) -> Result<IntegerAutomorphism> {
        let p = w.splitting_matrix()?;
        let pinv = intmat::inverse_unimodular(&p)?;
        let g = intmat::matmul(&intmat::matmul(&p, &self.block_matrix())?, &pinv)?;
        IntegerAutomorphism::new(g)
    }
}

pub fn stabilizer_decompose(
    g: &IntegerAutomorphism,
    w: &Sublattice,
) -> Result<StabilizerDecomposition> {
    if g.dim() != w.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.ambient_dim(),
            got: g.dim(),
        });
    }
    if &w.transform(g)? != w {
        return Err(Error::NotStabilizing);
    }
    let n = w.ambient_dim();
    let m = w.rank();
    let p = w.splitting_matrix()?;
    let pinv = intmat::inverse_unimodular(&p)?;
    let conj = intmat::matmul(&intmat::matmul(&pinv, g.mat())?, &p)?;
    if (m..n).any(|i| conj[i][..m].iter().any(|&x| x != 0)) {
        return Err(Error::Internal(
            "stabilizer has a nonzero lower-left block".into(),
        ));
    }
    Ok(StabilizerDecomposition {
        phi_w: conj[..m].iter().map(|r| r[..m].to_vec()).collect(),
        phi_vw: conj[..m].iter().map(|r| r[m..].to_vec()).collect(),
        phi_v: conj[m..].iter().map(|r| r[m..].to_vec()).collect(),
    })
}

/// Lagrange reduction of a binary form: returns `(a, b, c)` with
/// `|2b| ≤ a ≤ c`, equivalent to the input under `GL_2(Z)`.
pub fn reduce_binary(s: &InnerProduct) -> Result<(f64, f64, f64)> {
    if s.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: s.dim(),
        });
    }
    let g = s.gram();
    let (mut a, mut b, mut c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    for _ in 0..10_000 {
        // translation τ ↦ τ + k
        let k = (b / a).round();
        c += k * k * a - 2.0 * k * b;
        b -= k * a;
        if a > c {
            // inversion τ ↦ −1/τ
            std::mem::swap(&mut a, &mut c);
            b = -b;
        } else {
            return Ok((a, b, c));
        }
    }
    Err(Error::Internal("binary reduction did not terminate".into()))
}

/// For `n = 2`: every sample outside `⋃_W X(W, t)` is reduced to the
/// fundamental domain and its height `Im τ = d_{span e₁}` is checked to be at
/// most `t`.
pub fn cusp_height_probe(samples: &[NormalizedPoint], t: f64) -> Result<Report> {
    check_t(t)?;
    if let Some(x) = samples.iter().find(|x| x.dim() != 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.dim(),
        });
    }
    let cfg = EnumConfig::default();
    let e1 = Sublattice::coordinate(2, &[0])?;
    let results: Vec<(Outcome, Option<f64>, f64)> = samples
        .par_iter()
        .map(|x| {
            match active_sets_unchecked(x, t, &cfg) {
                Err(Error::Uncertified(_)) => return Ok((Outcome::Uncertified, None, 0.0)),
                Err(e) => return Err(e),
                Ok(active) if !active.is_empty() => return Ok((Outcome::Skipped, None, 0.0)),
                Ok(_) => {}
            }
            let (a, b, c) = reduce_binary(x.rep())?;
            let reduced = NormalizedPoint::from_rows(&[vec![a, b], vec![b, c]])?;
            let height = 1.0 / reduced.rep().gram()[(0, 0)];
            let d = d_w_with(&reduced, &e1, &cfg)?;
            let outcome = if height > t + 1e-9 {
                Outcome::Violation(
                    "reduced height exceeds t".into(),
                    json!({"point": point_json(x), "height": height}),
                )
            } else {
                Outcome::Pass
            };
            Ok((outcome, Some(height), (d - height).abs() / height))
        })
        .collect::<Result<_>>()?;
    let heights: Vec<f64> = results.iter().filter_map(|r| r.1).collect();
    let max_height = heights.iter().copied().fold(0.0, f64::max);
    let identity_err = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut report =
        Report::from_outcomes("cusp height", results.into_iter().map(|r| r.0).collect());
    report
        .stat("t", t)
        .stat("complement_points", heights.len())
        .stat("max_height", max_height)
        .stat("max_rel_err_height_vs_d_w", identity_err);
    Ok(report)
}
