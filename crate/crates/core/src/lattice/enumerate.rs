//! Certified enumeration of short lattice vectors and of saturated
//! sublattices of bounded volume.
//!
//! Completeness rests on two facts: a saturated rank-`k` sublattice `W` of
//! volume at most `V` contains a primitive vector of squared length at most
//! `γ_k V^{2/k}` (Hermite), and `W / ⟨v⟩` is a saturated rank-`k-1`
//! sublattice of `Z^n / ⟨v⟩` of volume `vol(W) / |v|` under the quotient form.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::intmat::{self, IntRows};
use crate::lattice::sublattice::{quotient_form, saturate, vol_w, Sublattice};
use crate::symspace::{InnerProduct, IntegerAutomorphism};

/// Limits for the certified enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumConfig {
    /// Largest ambient dimension accepted.
    pub max_dim: usize,
    /// Maximum number of search-tree nodes visited per call before the
    /// result is reported as uncertified.
    pub max_nodes: usize,
}

impl Default for EnumConfig {
    fn default() -> Self {
        Self {
            max_dim: 4,
            max_nodes: 4_000_000,
        }
    }
}

/// Volumes closer than this (relative) are treated as ties.
pub const TIE_TOL: f64 = 1e-11;
const SLACK: f64 = 1e-9;

/// Upper bound on Hermite's constant `γ_k`.
pub fn hermite_constant(k: usize) -> f64 {
    // exact values of γ_k^k for k ≤ 8
    const POW: [f64; 8] = [1.0, 4.0 / 3.0, 2.0, 4.0, 8.0, 64.0 / 3.0, 64.0, 256.0];
    match k {
        0 => 1.0,
        1..=8 => POW[k - 1].powf(1.0 / k as f64),
        _ => 1.0 + k as f64 / 4.0,
    }
}

struct Budget {
    left: usize,
    limit: usize,
}

impl Budget {
    fn new(limit: usize) -> Self {
        Self { left: limit, limit }
    }

    fn spend(&mut self, n: usize) -> Result<()> {
        if n > self.left {
            return Err(Error::Uncertified(format!(
                "search exceeded {} nodes",
                self.limit
            )));
        }
        self.left -= n;
        Ok(())
    }
}

fn norm_sq(g: &DMatrix<f64>, x: &[i64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        if x[i] == 0 {
            continue;
        }
        let xi = x[i] as f64;
        for j in 0..n {
            acc += xi * g[(i, j)] * x[j] as f64;
        }
    }
    acc
}

/// All nonzero `x ∈ Z^n` with `xᵀ g x ≤ radius_sq`, one of each `±x` pair
/// (last nonzero coordinate positive), with their squared lengths, via
/// Fincke–Pohst enumeration.
fn short_vectors_budget(
    g: &DMatrix<f64>,
    radius_sq: f64,
    budget: &mut Budget,
) -> Result<Vec<(Vec<i64>, f64)>> {
    let n = g.nrows();
    let chol = nalgebra::Cholesky::new(g.clone()).ok_or(Error::NotPositiveDefinite)?;
    let r = chol.l().transpose();
    let q: Vec<f64> = (0..n).map(|i| r[(i, i)] * r[(i, i)]).collect();
    let mu = DMatrix::from_fn(n, n, |i, j| if j > i { r[(i, j)] / r[(i, i)] } else { 0.0 });
    let bound = radius_sq * (1.0 + SLACK);

    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    // Depth-first over coordinates n-1, …, 0.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        partial: f64,
        x: &mut Vec<i64>,
        q: &[f64],
        mu: &DMatrix<f64>,
        bound: f64,
        budget: &mut Budget,
        out: &mut Vec<Vec<i64>>,
    ) -> Result<()> {
        let n = x.len();
        let center: f64 = -(i + 1..n).map(|j| mu[(i, j)] * x[j] as f64).sum::<f64>();
        let rem = (bound - partial).max(0.0);
        let half = (rem / q[i]).sqrt();
        let lo = (center - half).ceil() as i64;
        let hi = (center + half).floor() as i64;
        if hi >= lo {
            budget.spend((hi - lo + 1) as usize)?;
        }
        for v in lo..=hi {
            let d = v as f64 - center;
            let p = partial + q[i] * d * d;
            if p > bound {
                continue;
            }
            x[i] = v;
            if i == 0 {
                out.push(x.clone());
            } else {
                rec(i - 1, p, x, q, mu, bound, budget, out)?;
            }
        }
        x[i] = 0;
        Ok(())
    }
    let mut raw = Vec::new();
    rec(n - 1, 0.0, &mut x, &q, &mu, bound, budget, &mut raw)?;
    for v in raw {
        let Some(&last) = v.iter().rev().find(|&&c| c != 0) else {
            continue;
        };
        if last < 0 {
            continue;
        }
        let l2 = norm_sq(g, &v);
        if l2 <= bound {
            out.push((v, l2));
        }
    }
    Ok(out)
}

/// Short vectors of `s` with squared length at most `radius_sq`, one per
/// `±` pair.
pub fn short_vectors(
    s: &InnerProduct,
    radius_sq: f64,
    cfg: &EnumConfig,
) -> Result<Vec<(Vec<i64>, f64)>> {
    short_vectors_budget(s.gram(), radius_sq, &mut Budget::new(cfg.max_nodes))
}

fn shortest_primitive(g: &DMatrix<f64>, budget: &mut Budget) -> Result<(Vec<i64>, f64)> {
    let n = g.nrows();
    let radius_sq = (0..n).map(|i| g[(i, i)]).fold(f64::INFINITY, f64::min);
    let mut best: Option<(Vec<i64>, f64)> = None;
    for (v, l2) in short_vectors_budget(g, radius_sq, budget)? {
        if intmat::gcd_of(&v) != 1 {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| l2 < *b) {
            best = Some((v, l2));
        }
    }
    best.ok_or_else(|| Error::Internal("no vector within the shortest axis length".into()))
}

/// LLL reduction of the form `g` (`δ = 0.99`): a unimodular `U`, whose
/// columns are the new basis, with `Uᵀ g U` reduced.
fn lll_basis(g: &DMatrix<f64>) -> Result<IntRows> {
    lll_columns(g, intmat::identity(g.nrows()), None)
}

/// LLL-reduces the columns of the unimodular `u` with respect to `g`. With a
/// `barrier` `m`, columns are never swapped across position `m`, so the span
/// of the first `m` columns is preserved and the rest is reduced modulo it.
pub(crate) fn lll_columns(
    g: &DMatrix<f64>,
    mut u: IntRows,
    barrier: Option<usize>,
) -> Result<IntRows> {
    let n = g.nrows();
    let gram_of = |u: &IntRows| {
        let m = DMatrix::from_fn(n, n, |i, j| u[i][j] as f64);
        let r = m.transpose() * g * m;
        (&r + r.transpose()) * 0.5
    };
    let gs = |gram: &DMatrix<f64>| -> Result<(DMatrix<f64>, Vec<f64>)> {
        let l = nalgebra::Cholesky::new(gram.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .l();
        let b: Vec<f64> = (0..n).map(|i| l[(i, i)] * l[(i, i)]).collect();
        let mu = DMatrix::from_fn(n, n, |i, j| if j < i { l[(i, j)] / l[(j, j)] } else { 0.0 });
        Ok((mu, b))
    };
    let mut k = 1;
    let mut steps = 0;
    while k < n {
        steps += 1;
        if steps > 10_000 {
            return Err(Error::Uncertified(
                "basis reduction did not terminate".into(),
            ));
        }
        for j in (0..k).rev() {
            let (mu, _) = gs(&gram_of(&u))?;
            let q = mu[(k, j)].round();
            if q != 0.0 {
                let q = q as i64;
                for row in u.iter_mut() {
                    row[k] = row[k]
                        .checked_sub(q.checked_mul(row[j]).ok_or(Error::IntegerOverflow)?)
                        .ok_or(Error::IntegerOverflow)?;
                }
            }
        }
        let (mu, b) = gs(&gram_of(&u))?;
        if Some(k) == barrier || b[k] >= (0.99 - mu[(k, k - 1)].powi(2)) * b[k - 1] {
            k += 1;
        } else {
            for row in u.iter_mut() {
                row.swap(k, k - 1);
            }
            k = k.max(2) - 1;
        }
    }
    Ok(u)
}

/// `(Uᵀ s U, U)` for an LLL basis `U`; enumerating in the reduced form keeps
/// the arithmetic well conditioned, and results map back through `U`.
fn reduced(s: &InnerProduct) -> Result<(InnerProduct, IntegerAutomorphism)> {
    let u = lll_basis(s.gram())?;
    let n = s.dim();
    let m = DMatrix::from_fn(n, n, |i, j| u[i][j] as f64);
    let r = m.transpose() * s.gram() * &m;
    Ok((
        InnerProduct::new((&r + r.transpose()) * 0.5)?,
        IntegerAutomorphism::new(u)?,
    ))
}

fn map_back(
    found: BTreeMap<Sublattice, f64>,
    u: &IntegerAutomorphism,
) -> Result<BTreeMap<Sublattice, f64>> {
    found
        .into_iter()
        .map(|(w, v)| Ok((w.transform(u)?, v)))
        .collect()
}

/// Volume of the sublattice built by repeatedly taking a shortest vector in
/// successive quotients; an upper bound for the minimum rank-`k` volume.
fn greedy_volume(s: &InnerProduct, k: usize, budget: &mut Budget) -> Result<f64> {
    let mut form = s.clone();
    let mut vol = 1.0;
    for step in 0..k {
        let (v, l2) = shortest_primitive(form.gram(), budget)?;
        vol *= l2.sqrt();
        if step + 1 < k {
            let line = saturate(form.dim(), &[v])?;
            form = quotient_form(&form, &line)?.0;
        }
    }
    Ok(vol)
}

fn within(
    s: &InnerProduct,
    k: usize,
    vol_bound: f64,
    budget: &mut Budget,
) -> Result<BTreeMap<Sublattice, f64>> {
    if k == 0 || k == s.dim() {
        return within_reduced(s, k, vol_bound, budget);
    }
    let (r, u) = reduced(s)?;
    map_back(within_reduced(&r, k, vol_bound, budget)?, &u)
}

fn within_reduced(
    s: &InnerProduct,
    k: usize,
    vol_bound: f64,
    budget: &mut Budget,
) -> Result<BTreeMap<Sublattice, f64>> {
    let n = s.dim();
    let mut found = BTreeMap::new();
    if k == 0 {
        if 1.0 <= vol_bound * (1.0 + SLACK) {
            found.insert(Sublattice::zero(n), 1.0);
        }
        return Ok(found);
    }
    if k == n {
        let full = Sublattice::full(n);
        let v = vol_w(s, &full)?;
        if v <= vol_bound * (1.0 + SLACK) {
            found.insert(full, v);
        }
        return Ok(found);
    }
    let radius_sq = hermite_constant(k) * vol_bound.powf(2.0 / k as f64);
    for (v, l2) in short_vectors_budget(s.gram(), radius_sq, budget)? {
        if intmat::gcd_of(&v) != 1 {
            continue;
        }
        let len = l2.sqrt();
        let line = Sublattice::from_saturated_rows(n, &[v])?;
        if k == 1 {
            if len <= vol_bound * (1.0 + SLACK) {
                found.insert(line, len);
            }
            continue;
        }
        let (qform, _) = quotient_form(s, &line)?;
        for (sub, _) in within(&qform, k - 1, vol_bound / len, budget)? {
            let w = line.lift_from_quotient(&sub)?;
            if found.contains_key(&w) {
                continue;
            }
            let vol = vol_w(s, &w)?;
            if vol <= vol_bound * (1.0 + SLACK) {
                found.insert(w, vol);
            }
        }
    }
    Ok(found)
}

fn check_dim(s: &InnerProduct, k: usize, cfg: &EnumConfig) -> Result<()> {
    let n = s.dim();
    if k > n {
        return Err(Error::RankOutOfRange { rank: k, dim: n });
    }
    if n > cfg.max_dim {
        return Err(Error::Uncertified(format!(
            "dimension {n} exceeds the enumeration bound {}",
            cfg.max_dim
        )));
    }
    Ok(())
}

/// Every saturated rank-`k` sublattice with `vol_W(s) ≤ vol_bound`, in
/// sublattice order, with its volume.
pub fn sublattices_within(
    s: &InnerProduct,
    k: usize,
    vol_bound: f64,
    cfg: &EnumConfig,
) -> Result<Vec<(Sublattice, f64)>> {
    check_dim(s, k, cfg)?;
    let mut budget = Budget::new(cfg.max_nodes);
    Ok(within(s, k, vol_bound, &mut budget)?.into_iter().collect())
}

/// A saturated rank-`k` sublattice of minimal volume, ties broken by the
/// sublattice order.
pub fn min_volume_sublattice(
    s: &InnerProduct,
    k: usize,
    cfg: &EnumConfig,
) -> Result<(Sublattice, f64)> {
    check_dim(s, k, cfg)?;
    let n = s.dim();
    if k == 0 {
        return Ok((Sublattice::zero(n), 1.0));
    }
    if k == n {
        let full = Sublattice::full(n);
        let v = vol_w(s, &full)?;
        return Ok((full, v));
    }
    let mut budget = Budget::new(cfg.max_nodes);
    let (r, u) = reduced(s)?;
    let upper = greedy_volume(&r, k, &mut budget)?;
    let found = map_back(within_reduced(&r, k, upper, &mut budget)?, &u)?;
    let min = found.values().copied().fold(f64::INFINITY, f64::min);
    // BTreeMap iteration is in sublattice order, so the first tie wins.
    found
        .into_iter()
        .find(|(_, v)| *v <= min * (1.0 + TIE_TOL))
        .ok_or_else(|| Error::Internal("greedy sublattice missing from enumeration".into()))
}
