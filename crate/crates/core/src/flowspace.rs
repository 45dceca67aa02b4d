//! Generalized geodesics `c: R → X` (a unit-speed geodesic on a closed
//! interval, constant outside it), the flow `Φ_τ(c)(t) = c(t + τ)`, and a
//! metric on the space of such paths.
//!
//! A generalized geodesic is stored as a geodesic line `γ(u) = exp_anchor(u·v)`
//! together with a clamp interval `[a, b]` and an offset, so that
//! `c(t) = γ(clamp(t + offset))`. Flowing only changes the offset.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cover::{in_cover_set_with, CoverSet};
use crate::error::{Error, Result};
use crate::lattice::{d_w_with, EnumConfig, Sublattice};
use crate::linalg;
use crate::report::{Outcome, Report};
use crate::sampling::{self, halton};
use crate::symspace::{
    act_point, distance, exp_map, log_map, metric_norm, normalize_det, project_traceless,
    IntegerAutomorphism, NormalizedPoint, SymTangent,
};

const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedGeodesic {
    anchor: NormalizedPoint,
    direction: SymTangent,
    lo: f64,
    hi: f64,
    offset: f64,
}

impl GeneralizedGeodesic {
    /// `direction` must be tangent to the det-1 slice at `anchor` with unit
    /// norm, unless the clamp interval is a single point.
    pub fn new(
        anchor: NormalizedPoint,
        direction: SymTangent,
        clamp: (f64, f64),
        offset: f64,
    ) -> Result<Self> {
        let (lo, hi) = clamp;
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!(
                "bad clamp interval [{lo}, {hi}]"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("offset must be finite".into()));
        }
        if direction.dim() != anchor.dim() {
            return Err(Error::DimensionMismatch {
                expected: anchor.dim(),
                got: direction.dim(),
            });
        }
        let s = anchor.rep();
        let chol = linalg::cholesky(s.gram())?;
        let trace = chol.solve(direction.mat()).trace();
        let norm = metric_norm(s, &direction)?;
        let constant = lo == hi;
        if !constant && ((norm - 1.0).abs() > UNIT_TOL || trace.abs() > UNIT_TOL) {
            return Err(Error::InvalidParameter(format!(
                "direction must be a unit tangent to the det-1 slice (norm {norm}, trace {trace})"
            )));
        }
        Ok(Self {
            anchor,
            direction,
            lo,
            hi,
            offset,
        })
    }

    /// The constant path at `x`.
    pub fn constant(x: NormalizedPoint) -> Self {
        let n = x.dim();
        Self {
            anchor: x,
            direction: SymTangent::zeros(n),
            lo: 0.0,
            hi: 0.0,
            offset: 0.0,
        }
    }

    /// The full unit-speed geodesic line with `c(0) = x` and `c(dist) = y`.
    pub fn line_through(x: &NormalizedPoint, y: &NormalizedPoint) -> Result<Self> {
        let u = project_traceless(x.rep(), &log_map(x.rep(), y.rep())?)?;
        let norm = metric_norm(x.rep(), &u)?;
        if norm == 0.0 {
            return Err(Error::InvalidParameter("endpoints coincide".into()));
        }
        Self::new(
            x.clone(),
            u.scaled(1.0 / norm),
            (f64::NEG_INFINITY, f64::INFINITY),
            0.0,
        )
    }

    /// Restricts the underlying line to `[lo, hi]` (in line parameters).
    pub fn with_clamp(mut self, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "bad clamp interval [{lo}, {hi}]"
            )));
        }
        self.lo = lo;
        self.hi = hi;
        Ok(self)
    }

    pub fn anchor(&self) -> &NormalizedPoint {
        &self.anchor
    }

    pub fn direction(&self) -> &SymTangent {
        &self.direction
    }

    pub fn clamp(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn is_constant(&self) -> bool {
        self.lo == self.hi
    }

    /// Line parameter reached at time `t`.
    fn line_param(&self, t: f64) -> f64 {
        (t + self.offset).clamp(self.lo, self.hi)
    }

    /// Times at which `c` switches between moving and resting.
    fn kinks(&self) -> Vec<f64> {
        [self.lo, self.hi]
            .into_iter()
            .filter(|x| x.is_finite())
            .map(|x| x - self.offset)
            .collect()
    }

    fn point_at(&self, u: f64) -> NormalizedPoint {
        if u == 0.0 {
            return self.anchor.clone();
        }
        let step = self.direction.scaled(u);
        let s = exp_map(self.anchor.rep(), &step).expect("exponential of a valid tangent");
        normalize_det(&s)
    }

    pub fn evaluate(&self, t: f64) -> NormalizedPoint {
        self.point_at(self.line_param(t))
    }

    pub fn flow(&self, tau: f64) -> Self {
        Self {
            offset: self.offset + tau,
            ..self.clone()
        }
    }

    pub fn ev0(&self) -> NormalizedPoint {
        self.evaluate(0.0)
    }

    /// `g·c`, i.e. `t ↦ g·c(t)`.
    pub fn transform(&self, g: &IntegerAutomorphism) -> Result<Self> {
        let ginv = g.inverse()?.to_real();
        let dir = linalg::symmetrize(&(ginv.transpose() * self.direction.mat() * &ginv));
        Ok(Self {
            anchor: act_point(g, &self.anchor)?,
            direction: SymTangent::from_symmetric_unchecked(dir),
            ..self.clone()
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GeodesicJson {
    anchor: NormalizedPoint,
    direction: SymTangent,
    /// `null` stands for an infinite end.
    clamp: (Option<f64>, Option<f64>),
    offset: f64,
}

impl Serialize for GeneralizedGeodesic {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let fin = |x: f64| x.is_finite().then_some(x);
        GeodesicJson {
            anchor: self.anchor.clone(),
            direction: self.direction.clone(),
            clamp: (fin(self.lo), fin(self.hi)),
            offset: self.offset,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GeneralizedGeodesic {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = GeodesicJson::deserialize(de)?;
        let lo = raw.clamp.0.unwrap_or(f64::NEG_INFINITY);
        let hi = raw.clamp.1.unwrap_or(f64::INFINITY);
        GeneralizedGeodesic::new(raw.anchor, raw.direction, (lo, hi), raw.offset)
            .map_err(serde::de::Error::custom)
    }
}

/// Absolute accuracy of [`fs_distance`].
pub const FS_TOL: f64 = 1e-9;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `∫ f` over `[a, b]` by adaptive Simpson quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `γ(u) = M diag(e^{u μ}) Mᵀ` with `M = L Q`, where `anchor = L Lᵀ` and
/// `L⁻¹ v L⁻ᵀ = Q diag(μ) Qᵀ`.
struct LineFrame {
    m: DMatrix<f64>,
    mu: Vec<f64>,
}

impl LineFrame {
    fn new(c: &GeneralizedGeodesic) -> Result<Self> {
        let l = linalg::cholesky(c.anchor.rep().gram())?.l();
        let linv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
        let eig = linalg::sym_eigen(&(&linv * c.direction.mat() * linv.transpose()));
        Ok(Self {
            m: l * eig.eigenvectors,
            mu: eig.eigenvalues.iter().copied().collect(),
        })
    }
}

/// `d_X(c(t), d(t))` from the eigen-frames of both lines: the relative
/// eigenvalues are the squared singular values of
/// `diag(e^{−uμ/2}) M_c⁻¹ M_d diag(e^{wν/2})`, which stay accurate even when
/// the Gram matrices themselves are too ill-conditioned to compare.
struct PairDistance<'a> {
    c: &'a GeneralizedGeodesic,
    d: &'a GeneralizedGeodesic,
    fc: LineFrame,
    fd: LineFrame,
    k: DMatrix<f64>,
}

impl<'a> PairDistance<'a> {
    fn new(c: &'a GeneralizedGeodesic, d: &'a GeneralizedGeodesic) -> Result<Self> {
        let fc = LineFrame::new(c)?;
        let fd = LineFrame::new(d)?;
        let k =
            fc.m.clone()
                .lu()
                .solve(&fd.m)
                .ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { c, d, fc, fd, k })
    }

    fn at(&self, t: f64) -> f64 {
        let (u, w) = (self.c.line_param(t), self.d.line_param(t));
        let a = DMatrix::from_fn(self.k.nrows(), self.k.ncols(), |i, j| {
            self.k[(i, j)] * ((w * self.fd.mu[j] - u * self.fc.mu[i]) / 2.0).exp()
        });
        linalg::graded_singular_values(&a)
            .iter()
            .map(|sv| (2.0 * sv.ln()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `∫ d_X(c(t), d(t)) e^{−|t|} / 2 dt`.
///
/// The integrand is smooth between the clamp switching times and `0`, so the
/// line is split there. It grows at most like `f(0) + 2|t|`, so truncating at
/// `T` loses at most `(f(0) + 2T + 2) e^{−T}`.
pub fn fs_distance(c: &GeneralizedGeodesic, d: &GeneralizedGeodesic) -> Result<f64> {
    if c.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: d.dim(),
        });
    }
    if c == d {
        return Ok(0.0);
    }
    let pair = PairDistance::new(c, d)?;
    let f0 = pair.at(0.0);
    let mut big_t = 1.0;
    while (f0 + 2.0 * big_t + 2.0) * (-big_t).exp() >= FS_TOL / 2.0 {
        big_t += 1.0;
    }
    let mut cuts: Vec<f64> = vec![-big_t, 0.0, big_t];
    cuts.extend(
        c.kinks()
            .into_iter()
            .chain(d.kinks())
            .filter(|x| x.abs() < big_t),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let weighted = |t: f64| pair.at(t) * (-t.abs()).exp() / 2.0;
    let pieces = (cuts.len() - 1) as f64;
    Ok(cuts
        .windows(2)
        .map(|w| integrate(weighted, w[0], w[1], FS_TOL / (4.0 * pieces)))
        .sum())
}

/// `c ∈ Y(W, t)`, i.e. `d_W(c(0)) > t`.
pub fn in_y(c: &GeneralizedGeodesic, w: &Sublattice, t: f64) -> Result<bool> {
    in_cover_set_with(
        &c.ev0(),
        &CoverSet::new(w.clone(), t)?,
        &EnumConfig::default(),
    )
}

/// Parameters of a longness check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LongnessParams {
    pub t: f64,
    pub beta: f64,
    pub delta: f64,
    pub tau: f64,
    pub seed: u64,
    pub samples: usize,
}

/// A random path near `base`, pulled in until it is within `delta` of it in
/// the flow-space metric.
fn perturb(
    rng: &mut sampling::SampleRng,
    base: &GeneralizedGeodesic,
    delta: f64,
) -> Result<(GeneralizedGeodesic, f64)> {
    let n = base.dim();
    let u1 = sampling::random_unit_tangent(rng, &base.anchor)?;
    let u2 = sampling::random_symmetric(rng, n, 1.0);
    let h: [f64; 3] = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ];
    let mut r = delta;
    for _ in 0..60 {
        let anchor = normalize_det(&exp_map(base.anchor.rep(), &u1.scaled(r))?);
        let lo = base.lo + r * h[0];
        let hi = (base.hi + r * h[1]).max(lo);
        let candidate = if lo == hi || base.is_constant() {
            GeneralizedGeodesic::new(
                anchor,
                SymTangent::zeros(n),
                (lo, lo),
                base.offset + r * h[2],
            )?
        } else {
            let raw = SymTangent::from_symmetric_unchecked(base.direction.mat() + u2.mat() * r);
            let dir = project_traceless(anchor.rep(), &raw)?;
            let norm = metric_norm(anchor.rep(), &dir)?;
            GeneralizedGeodesic::new(
                anchor,
                dir.scaled(1.0 / norm),
                (lo, hi),
                base.offset + r * h[2],
            )?
        };
        let fs = fs_distance(&candidate, base)?;
        if fs < delta {
            return Ok((candidate, fs));
        }
        r /= 2.0;
    }
    Ok((base.clone(), 0.0))
}

/// Samples paths `d` with `fs(d, Φ_s(c)) < δ`, `s ∈ [−τ, τ]`, and checks
/// `d_X(d(0), c(0)) < 4 + δ + τ` and `d ∈ Y(W, t)`.
///
/// Requires `c ∈ Y(W, t + β)`. The size of `β` is not checked, so the
/// effect of an insufficient `β` shows up as violations.
pub fn verify_longness(
    c: &GeneralizedGeodesic,
    w: &Sublattice,
    p: &LongnessParams,
) -> Result<Report> {
    let cfg = EnumConfig::default();
    if p.t < 1.0 || p.beta < 0.0 || p.delta < 0.0 || p.tau < 0.0 || p.samples == 0 {
        return Err(Error::InvalidParameter(
            "need t ≥ 1, β, δ, τ ≥ 0 and at least one sample".into(),
        ));
    }
    let x0 = c.ev0();
    let d0 = d_w_with(&x0, w, &cfg)?;
    if d0 <= p.t + p.beta {
        return Err(Error::Precondition(format!(
            "path is not in Y(W, t + β): d_W(c(0)) = {d0} ≤ {}",
            p.t + p.beta
        )));
    }
    let radius = 4.0 + p.delta + p.tau;
    let results: Vec<(Outcome, f64, f64, f64)> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(p.seed, i as u64);
            let s = p.tau * (2.0 * halton(i as u64 + 1, 2) - 1.0);
            let base = c.flow(s);
            let (d, fs) = if p.delta > 0.0 {
                perturb(&mut rng, &base, p.delta)?
            } else {
                (base, 0.0)
            };
            let y0 = d.ev0();
            let dist = distance(y0.rep(), x0.rep())?;
            let dw = match d_w_with(&y0, w, &cfg) {
                Ok(v) => v,
                Err(Error::Uncertified(_)) => return Ok((Outcome::Uncertified, 0.0, 0.0, fs)),
                Err(e) => return Err(e),
            };
            let dist_margin = radius - dist;
            let cover_margin = dw - p.t;
            let outcome = if dist_margin > 0.0 && cover_margin > 0.0 {
                Outcome::Pass
            } else {
                Outcome::Violation(
                    if cover_margin <= 0.0 {
                        "sampled path leaves Y(W, t)".into()
                    } else {
                        "sampled path start exceeds the distance bound".into()
                    },
                    json!({"s": s, "fs_distance": fs, "distance": dist, "d_w": dw}),
                )
            };
            Ok((outcome, dist_margin, cover_margin, fs))
        })
        .collect::<Result<_>>()?;
    let min_of = |k: fn(&(Outcome, f64, f64, f64)) -> f64| {
        results.iter().map(k).fold(f64::INFINITY, f64::min)
    };
    let worst_dist = min_of(|r| r.1);
    let worst_cover = min_of(|r| r.2);
    let max_fs = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let mut report = Report::from_outcomes(
        "covering at infinity (longness)",
        results.into_iter().map(|r| r.0).collect(),
    );
    report
        .stat("t", p.t)
        .stat("beta", p.beta)
        .stat("delta", p.delta)
        .stat("tau", p.tau)
        .stat("d_w_at_start", d0)
        .stat("worst_distance_margin", worst_dist)
        .stat("worst_cover_margin", worst_cover)
        .stat("max_fs_distance", max_fs);
    Ok(report)
}
