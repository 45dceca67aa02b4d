//! Seeded, sampled verification suites. Each suite checks one property on
//! `samples` random instances and returns a [`Report`]; the instance for sample
//! `i` depends only on `(seed, i)`, so results do not depend on threading.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::cover::{
    cusp_height_probe, in_cover_set_with, neighborhood_beta, stabilizer_decompose,
    verify_chain_condition_with, CoverSet,
};
use crate::error::{Error, Result};
use crate::exterior::{grad_vol_squared, gram_volume_squared, s_xi};
use crate::flowspace::{fs_distance, verify_longness, GeneralizedGeodesic, LongnessParams, FS_TOL};
use crate::intmat;
use crate::lattice::{
    c_tilde, canonical_polygon_with, d_w_with, quotient_form, sublattices_within, vol_w,
    EnumConfig, Sublattice,
};
use crate::linalg;
use crate::report::{Outcome, Report};
use crate::sampling::{self, SampleRng};
use crate::symspace::{
    act, act_point, distance, metric_inner, metric_norm, normalize_det, InnerProduct,
    IntegerAutomorphism, NormalizedPoint, SymTangent,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteParams {
    pub seed: u64,
    pub samples: usize,
    /// Ambient dimension for suites that use a fixed one.
    pub n: usize,
    pub t: f64,
    pub alpha: f64,
    pub delta: f64,
    pub tau: f64,
    pub enumeration: EnumConfig,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100,
            n: 3,
            t: 1.0,
            alpha: 0.25,
            delta: 1.0,
            tau: 1.0,
            enumeration: EnumConfig::default(),
        }
    }
}

/// Relative tolerance of the finite-difference gradient check.
pub const GRAD_TOL: f64 = 1e-6;
/// Absolute tolerance of the gradient-norm check.
pub const NORM_TOL: f64 = 1e-9;
/// Slack for inequalities between computed quantities.
pub const INEQ_SLACK: f64 = 1e-9;

fn run_samples(
    lemma: &str,
    p: &SuiteParams,
    salt: u64,
    check: impl Fn(&mut SampleRng) -> Result<Outcome> + Sync,
) -> Result<Report> {
    let outcomes = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(p.seed ^ salt, i as u64);
            match check(&mut rng) {
                Err(Error::Uncertified(_)) => Ok(Outcome::Uncertified),
                other => other,
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Report::from_outcomes(lemma, outcomes);
    r.stat("seed", p.seed);
    Ok(r)
}

fn rows(m: &DMatrix<f64>) -> serde_json::Value {
    json!(linalg::to_rows(m))
}

fn violation(msg: &str, witness: serde_json::Value) -> Outcome {
    Outcome::Violation(msg.to_owned(), witness)
}

/// Directional derivative of `f` at `s` along `u` by Richardson-extrapolated
/// central differences.
pub fn directional_derivative(
    f: impl Fn(&DMatrix<f64>) -> Result<f64>,
    s: &DMatrix<f64>,
    u: &DMatrix<f64>,
    h: f64,
) -> Result<f64> {
    let central = |h: f64| -> Result<f64> { Ok((f(&(s + u * h))? - f(&(s - u * h))?) / (2.0 * h)) };
    let (d1, d2) = (central(h)?, central(h / 2.0)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

// ---------------------------------------------------------------- gradient

fn random_gradient_instance(
    rng: &mut SampleRng,
) -> (InnerProduct, crate::exterior::DecomposableFrame) {
    let n = rng.random_range(1..=5);
    let m = rng.random_range(1..=n);
    (
        sampling::random_spd(rng, n, 0.5),
        sampling::random_frame(rng, n, m),
    )
}

/// Closed-form gradient of `vol²` against finite differences in 20 random
/// symmetric directions per instance.
pub fn gradient_suite(p: &SuiteParams) -> Result<Report> {
    let worst = std::sync::Mutex::new(0.0f64);
    let mut r = run_samples("gradient of the volume function", p, 0x01, |rng| {
        let (s, frame) = random_gradient_instance(rng);
        let n = s.dim();
        let grad = grad_vol_squared(&s, &frame)?;
        let v2 = gram_volume_squared(&s, &frame)?;
        let lmin = linalg::sym_eigen(s.gram()).eigenvalues.min();
        for k in 0..20 {
            let u = sampling::random_symmetric(rng, n, 1.0);
            let unorm = linalg::sym_eigen(u.mat()).eigenvalues.abs().max();
            let h = 1e-3 * lmin / unorm;
            let fd = directional_derivative(
                |m| gram_volume_squared(&InnerProduct::new(m.clone())?, &frame),
                s.gram(),
                u.mat(),
                h,
            )?;
            let exact = metric_inner(&s, &grad, &u)?;
            let scale = fd.abs().max(exact.abs()).max(v2 * metric_norm(&s, &u)?);
            let rel = (fd - exact).abs() / scale;
            let mut w = worst.lock().expect("no poisoning");
            *w = w.max(rel);
            if rel > GRAD_TOL {
                return Ok(violation(
                    "finite differences disagree with the closed-form gradient",
                    json!({"gram": rows(s.gram()), "frame": frame.vectors(), "direction": k,
                           "finite_difference": fd, "closed_form": exact, "rel_err": rel}),
                ));
            }
        }
        Ok(Outcome::Pass)
    })?;
    r.stat("directions_per_sample", 20)
        .stat("tolerance", GRAD_TOL);
    r.stat("max_rel_err", worst.into_inner().expect("no poisoning"));
    Ok(r)
}

/// `‖s_ξ‖_{g_s} = √m`.
pub fn gradient_norm_suite(p: &SuiteParams) -> Result<Report> {
    let worst = std::sync::Mutex::new(0.0f64);
    let mut r = run_samples("norm of the gradient of ln vol²", p, 0x01, |rng| {
        let (s, frame) = random_gradient_instance(rng);
        let norm = metric_norm(&s, &s_xi(&s, &frame)?)?;
        let err = (norm - (frame.rank() as f64).sqrt()).abs();
        let mut w = worst.lock().expect("no poisoning");
        *w = w.max(err);
        Ok(if err > NORM_TOL {
            violation(
                "norm differs from sqrt(m)",
                json!({"gram": rows(s.gram()), "m": frame.rank(), "norm": norm}),
            )
        } else {
            Outcome::Pass
        })
    })?;
    r.stat("tolerance", NORM_TOL);
    r.stat("max_abs_err", worst.into_inner().expect("no poisoning"));
    Ok(r)
}

// ------------------------------------------------------------------- cover

/// A point of `X(W, target)` obtained by pushing far into the cusp of `W`:
/// in the basis `P = [W | V]` it is `D^{1/2} H D^{1/2}` with
/// `D = diag(e^{−L(n−m)}, …, e^{Lm}, …)` and `H` a random form near `I`.
pub fn cusp_point(
    rng: &mut SampleRng,
    w: &Sublattice,
    target: f64,
    jitter: f64,
    cfg: &EnumConfig,
) -> Result<NormalizedPoint> {
    let n = w.ambient_dim();
    let m = w.rank();
    let p = w.splitting_matrix()?;
    let pinv = DMatrix::from_fn(n, n, {
        let inv = intmat::inverse_unimodular(&p)?;
        move |i, j| inv[i][j] as f64
    });
    let h = sampling::random_spd(rng, n, jitter);
    let mut l = 2.0 * target.ln() / n as f64;
    for _ in 0..2000 {
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i != j {
                0.0
            } else if i < m {
                (-l * (n - m) as f64 / 2.0).exp()
            } else {
                (l * m as f64 / 2.0).exp()
            }
        });
        let inner = &d * h.gram() * &d;
        let s = pinv.transpose() * inner * &pinv;
        let x = normalize_det(&InnerProduct::new(linalg::symmetrize(&s))?);
        if d_w_with(&x, w, cfg)? > target {
            return Ok(x);
        }
        l += 0.05;
    }
    Err(Error::Internal(
        "could not reach the requested instability".into(),
    ))
}

fn random_proper_sublattice(rng: &mut SampleRng, n: usize) -> Sublattice {
    let m = rng.random_range(1..n);
    sampling::random_sublattice(rng, n, m, 2)
}

/// `x ∈ X(W, t)` iff `g·x ∈ X(gW, t)`.
pub fn cover_equivariance_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let worst = std::sync::Mutex::new(0.0f64);
    let mut r = run_samples("cover sets: equivariance", p, 0x02, |rng| {
        let n = p.n;
        let x = sampling::random_point(rng, n, 0.8);
        let w = random_proper_sublattice(rng, n);
        let g = sampling::random_gl(rng, n, 6);
        let d0 = d_w_with(&x, &w, &cfg)?;
        // choose t on either side of d_W(x), away from the boundary
        let t = (d0 * if rng.random_bool(0.5) { 0.9 } else { 1.1 }).max(1.0);
        let c = CoverSet::new(w.clone(), t)?;
        let gx = act_point(&g, &x)?;
        let inside = in_cover_set_with(&x, &c, &cfg)?;
        let inside_g = in_cover_set_with(&gx, &c.transform(&g)?, &cfg)?;
        let d1 = d_w_with(&gx, &w.transform(&g)?, &cfg)?;
        let rel = (d1 - d0).abs() / d0;
        let mut wst = worst.lock().expect("no poisoning");
        *wst = wst.max(rel);
        Ok(if inside != inside_g || rel > 1e-9 {
            violation(
                "membership or d_W changed under the group action",
                json!({"point": rows(x.rep().gram()), "w": w, "g": g.mat(), "d_w": d0, "d_gw": d1}),
            )
        } else {
            Outcome::Pass
        })
    })?;
    r.stat(
        "max_rel_d_w_change",
        worst.into_inner().expect("no poisoning"),
    );
    Ok(r)
}

/// Active sublattices at random points form a chain of length at most
/// `n − 1`.
pub fn chain_suite(p: &SuiteParams) -> Result<Report> {
    let points: Vec<NormalizedPoint> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(p.seed ^ 0x03, i as u64);
            let spread = rng.random_range(0.2..1.5);
            sampling::random_point(&mut rng, p.n, spread)
        })
        .collect();
    let mut r = verify_chain_condition_with(&points, p.t, &p.enumeration)?;
    let max_active = r.stats["max_active"].as_u64().unwrap_or(0) as usize;
    if max_active > p.n.saturating_sub(1) {
        r.violations.push(crate::report::Violation {
            sample: 0,
            message: format!("{max_active} simultaneously active sets exceed n − 1"),
            witness: serde_json::Value::Null,
        });
    }
    r.stat("seed", p.seed).stat("n", p.n);
    Ok(r)
}

/// If `d_W(x) > t + β` and `d(x, y) < α` then `d_W(y) > t`.
pub fn neighborhood_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let beta = neighborhood_beta(p.alpha, p.t, p.n);
    let worst = std::sync::Mutex::new(f64::INFINITY);
    let mut r = run_samples("comparison: neighborhood containment", p, 0x04, |rng| {
        let w = random_proper_sublattice(rng, p.n);
        let target = (p.t + beta) * rng.random_range(1.0..1.5);
        let x = cusp_point(rng, &w, target, 0.3, &cfg)?;
        let dx = d_w_with(&x, &w, &cfg)?;
        if dx <= p.t + beta {
            return Ok(Outcome::Skipped);
        }
        let r = p.alpha * rng.random_range(0.0..1.0);
        let y = sampling::random_point_at_distance(rng, &x, r)?;
        let dy = d_w_with(&y, &w, &cfg)?;
        let mut wst = worst.lock().expect("no poisoning");
        *wst = wst.min(dy / p.t);
        Ok(if dy > p.t {
            Outcome::Pass
        } else {
            violation(
                "nearby point left the cover set",
                json!({"w": w, "x": rows(x.rep().gram()), "y": rows(y.rep().gram()), "d_w_x": dx, "d_w_y": dy}),
            )
        })
    })?;
    r.stat("alpha", p.alpha).stat("t", p.t).stat("beta", beta);
    r.stat(
        "min_ratio_d_w_y_over_t",
        worst.into_inner().expect("no poisoning"),
    );
    Ok(r)
}

fn block_stabilizer(rng: &mut SampleRng, w: &Sublattice) -> Result<IntegerAutomorphism> {
    let n = w.ambient_dim();
    let m = w.rank();
    let phi_w = sampling::random_gl(rng, m, 4);
    let phi_v = sampling::random_gl(rng, n - m, 4);
    let mut block = vec![vec![0i64; n]; n];
    for i in 0..m {
        block[i][..m].copy_from_slice(&phi_w.mat()[i]);
        for j in m..n {
            block[i][j] = rng.random_range(-3..=3);
        }
    }
    for i in 0..n - m {
        block[m + i][m..].copy_from_slice(&phi_v.mat()[i]);
    }
    let p = w.splitting_matrix()?;
    let pinv = intmat::inverse_unimodular(&p)?;
    IntegerAutomorphism::new(intmat::matmul(&intmat::matmul(&p, &block)?, &pinv)?)
}

/// Blocks of `g·h` are the block products of the blocks of `g` and `h`.
pub fn stabilizer_suite(p: &SuiteParams) -> Result<Report> {
    run_samples("stabilizer block law", p, 0x05, |rng| {
        let w = random_proper_sublattice(rng, p.n);
        let g = block_stabilizer(rng, &w)?;
        let h = block_stabilizer(rng, &w)?;
        let (dg, dh) = (stabilizer_decompose(&g, &w)?, stabilizer_decompose(&h, &w)?);
        let dgh = stabilizer_decompose(&g.compose(&h)?, &w)?;
        let mm = intmat::matmul;
        let vw = {
            let a = mm(&dg.phi_w, &dh.phi_vw)?;
            let b = mm(&dg.phi_vw, &dh.phi_v)?;
            a.iter()
                .zip(&b)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
                .collect::<Vec<Vec<i64>>>()
        };
        let ok = dgh.phi_w == mm(&dg.phi_w, &dh.phi_w)?
            && dgh.phi_v == mm(&dg.phi_v, &dh.phi_v)?
            && dgh.phi_vw == vw
            && dg.reassemble(&w)? == g;
        Ok(if ok {
            Outcome::Pass
        } else {
            violation(
                "block law fails",
                json!({"w": w, "g": g.mat(), "h": h.mat()}),
            )
        })
    })
}

/// Points of `X` outside every cover set reduce to height at most `t`
/// (`n = 2`), at `t` and at the fixed levels 1, 2, 4.
pub fn cusp_suite(p: &SuiteParams) -> Result<Vec<Report>> {
    let points: Vec<NormalizedPoint> = (0..p.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(p.seed ^ 0x06, i as u64);
            let spread = rng.random_range(0.1..1.2);
            sampling::random_point(&mut rng, 2, spread)
        })
        .collect();
    let mut levels = vec![1.0, 2.0, 4.0];
    if !levels.contains(&p.t) {
        levels.push(p.t);
    }
    levels
        .into_iter()
        .map(|t| {
            let mut r = cusp_height_probe(&points, t)?;
            r.lemma = format!("cusp height (n = 2, t = {t})");
            r.stat("seed", p.seed);
            Ok(r)
        })
        .collect()
}

pub fn cover_suites(p: &SuiteParams) -> Result<Vec<Report>> {
    let mut out = vec![
        cover_equivariance_suite(p)?,
        chain_suite(p)?,
        neighborhood_suite(p)?,
        stabilizer_suite(p)?,
    ];
    out.extend(cusp_suite(p)?);
    Ok(out)
}

// ------------------------------------------------------------------ flow

/// Dyadic rational in `[-8, 8]` with 10 fractional bits, so sums of two of
/// them are exact.
fn dyadic(rng: &mut SampleRng) -> f64 {
    f64::from(rng.random_range(-8192..=8192i32)) / 1024.0
}

pub fn random_geodesic(rng: &mut SampleRng, n: usize) -> Result<GeneralizedGeodesic> {
    let x = sampling::random_point(rng, n, 0.5);
    if rng.random_range(0..8) == 0 {
        return Ok(GeneralizedGeodesic::constant(x));
    }
    let u = sampling::random_unit_tangent(rng, &x)?;
    let lo = if rng.random_bool(0.3) {
        f64::NEG_INFINITY
    } else {
        -rng.random_range(0.0..3.0)
    };
    let hi = if rng.random_bool(0.3) {
        f64::INFINITY
    } else {
        rng.random_range(0.0..3.0)
    };
    GeneralizedGeodesic::new(x, u, (lo, hi), dyadic(rng) / 4.0)
}

/// `Φ_τ ∘ Φ_σ = Φ_{σ+τ}` on parameters, `c(τ + t) = Φ_τ(c)(t)`, and
/// `ev₀(g·c) = g·ev₀(c)`.
pub fn flow_law_suite(p: &SuiteParams) -> Result<Report> {
    let worst = std::sync::Mutex::new(0.0f64);
    let mut r = run_samples("flow group law", p, 0x07, |rng| {
        let c = random_geodesic(rng, p.n)?;
        let (sigma, tau) = (dyadic(rng), dyadic(rng));
        let exact = c.flow(0.0) == c
            && c.flow(sigma).flow(tau) == c.flow(sigma + tau)
            && c.flow(tau / 4.0).ev0() == c.evaluate(tau / 4.0);
        // Evaluation far out along a geodesic is ill-conditioned, so the
        // pointwise identity is checked at moderate parameters.
        let mut err: f64 = 0.0;
        let tau_eval = tau / 4.0;
        for _ in 0..4 {
            let t = rng.random_range(-2.0..2.0);
            err = err.max(distance(
                c.flow(tau_eval).evaluate(t).rep(),
                c.evaluate(tau_eval + t).rep(),
            )?);
        }
        let g = sampling::random_gl(rng, p.n, 5);
        err = err.max(distance(
            c.transform(&g)?.ev0().rep(),
            act_point(&g, &c.ev0())?.rep(),
        )?);
        let mut w = worst.lock().expect("no poisoning");
        *w = w.max(err);
        Ok(if exact && err <= 1e-9 {
            Outcome::Pass
        } else {
            violation(
                "flow law or evaluation identity fails",
                json!({"geodesic": c, "sigma": sigma, "tau": tau, "err": err}),
            )
        })
    })?;
    r.stat(
        "max_evaluation_err",
        worst.into_inner().expect("no poisoning"),
    );
    Ok(r)
}

/// `d_X(c(0), d(0)) ≤ fs(c, d) + 2` and `fs(Φ_s c, c) ≤ |s|`.
pub fn fs_bounds_suite(p: &SuiteParams) -> Result<Report> {
    let margins = std::sync::Mutex::new((f64::INFINITY, f64::INFINITY));
    let mut r = run_samples("flow-space distance bounds", p, 0x08, |rng| {
        let c = random_geodesic(rng, p.n)?;
        let d = random_geodesic(rng, p.n)?;
        let fs = fs_distance(&c, &d)?;
        let d0 = distance(c.ev0().rep(), d.ev0().rep())?;
        let s = rng.random_range(-5.0..5.0);
        let shift = fs_distance(&c.flow(s), &c)?;
        let (m1, m2) = (fs + 2.0 - d0, s.abs() - shift);
        let mut m = margins.lock().expect("no poisoning");
        m.0 = m.0.min(m1);
        m.1 = m.1.min(m2);
        Ok(if m1 >= -INEQ_SLACK && m2 >= -FS_TOL {
            Outcome::Pass
        } else {
            violation(
                "distance bound fails",
                json!({"c": c, "d": d, "fs": fs, "d0": d0, "s": s, "fs_shift": shift}),
            )
        })
    })?;
    let (m1, m2) = margins.into_inner().expect("no poisoning");
    r.stat("min_margin_start_bound", m1)
        .stat("min_margin_shift_bound", m2);
    Ok(r)
}

/// A generalized geodesic starting deep in the cusp of a coordinate
/// sublattice `W` (random axes) in a random direction.
///
/// The anchor is `D h D` with `D` diagonal and `h` a random point, and the
/// direction is `D u D` for a unit tangent `u` at `h`; building both in the
/// scaled frame keeps them accurate even though the anchor's condition
/// number is near the limit of double precision. Generic `W` would require
/// rotating such a matrix, which double precision cannot represent.
fn cusp_geodesic(
    rng: &mut SampleRng,
    n: usize,
    target: f64,
    cfg: &EnumConfig,
) -> Result<(GeneralizedGeodesic, Sublattice)> {
    let m = rng.random_range(1..n);
    let mut axes: Vec<usize> = (0..n).collect();
    axes.shuffle(rng);
    axes.truncate(m);
    axes.sort_unstable();
    let w = Sublattice::coordinate(n, &axes)?;
    let h = sampling::random_point(rng, n, 0.2);
    let u = sampling::random_unit_tangent(rng, &h)?;
    let mut l = 2.0 * target.ln() / n as f64;
    for _ in 0..2000 {
        let d = DMatrix::from_fn(n, n, |i, j| match (i == j, axes.contains(&i)) {
            (false, _) => 0.0,
            (true, true) => (-l * (n - m) as f64 / 2.0).exp(),
            (true, false) => (l * m as f64 / 2.0).exp(),
        });
        let xs = &d * h.rep().gram() * &d;
        let x = normalize_det(&InnerProduct::new(linalg::symmetrize(&xs))?);
        if d_w_with(&x, &w, cfg)? > target {
            let scale = x.rep().gram()[(0, 0)] / xs[(0, 0)];
            let dir = SymTangent::from_symmetric_unchecked(linalg::symmetrize(
                &(&d * u.mat() * &d * scale),
            ));
            let lo = -rng.random_range(0.5..4.0);
            let hi = if rng.random_bool(0.5) {
                f64::INFINITY
            } else {
                rng.random_range(0.5..4.0)
            };
            return Ok((GeneralizedGeodesic::new(x, dir, (lo, hi), 0.0)?, w));
        }
        l += 0.05;
    }
    Err(Error::Internal(
        "could not reach the requested instability".into(),
    ))
}

/// `B_δ(Φ_{[−τ,τ]}(c)) ⊂ Y(W, t)` for `c ∈ Y(W, t + β)`, with `β` from the
/// comparison bound at `α = 4 + δ + τ`.
pub fn longness_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let alpha = 4.0 + p.delta + p.tau;
    let beta = neighborhood_beta(alpha, p.t, p.n);
    let stats = std::sync::Mutex::new((f64::INFINITY, 0usize));
    let mut r = run_samples("covering at infinity (longness)", p, 0x09, |rng| {
        let (c, w) = cusp_geodesic(rng, p.n, (p.t + beta) * 1.05, &cfg)?;
        let lp = LongnessParams {
            t: p.t,
            beta,
            delta: p.delta,
            tau: p.tau,
            seed: rng.random(),
            samples: 8,
        };
        let sub = verify_longness(&c, &w, &lp)?;
        let mut st = stats.lock().expect("no poisoning");
        st.0 = st.0.min(
            sub.stats["worst_distance_margin"]
                .as_f64()
                .unwrap_or(f64::NAN),
        );
        st.1 += sub.samples;
        Ok(if sub.passed() && sub.uncertified == 0 {
            Outcome::Pass
        } else if sub.passed() {
            Outcome::Uncertified
        } else {
            violation(
                "sampled neighbour left Y(W, t)",
                json!({"geodesic": c, "w": w, "report": sub}),
            )
        })
    })?;
    let (worst_dist, checked) = stats.into_inner().expect("no poisoning");
    r.stat("alpha", alpha)
        .stat("beta", beta)
        .stat("t", p.t)
        .stat("delta", p.delta)
        .stat("tau", p.tau);
    r.stat("paths_checked", checked)
        .stat("worst_distance_margin", worst_dist);
    Ok(r)
}

/// With `β = 0` and `d_W(c(0))` just above `t`, the sampled check must
/// detect paths leaving `Y(W, t)`; a sample passes when violations are
/// reported.
pub fn longness_control_suite(p: &SuiteParams) -> Result<Report> {
    let mut r = run_samples("longness negative control (beta = 0)", p, 0x0a, |rng| {
        let g = sampling::random_gl(rng, 2, 3);
        let w = Sublattice::coordinate(2, &[0])?.transform(&g)?;
        let a = 1.0 / (p.t * 1.001);
        let x = act_point(&g, &normalize_det(&InnerProduct::diagonal(&[a, 1.0 / a])?))?;
        let toward = act_point(&g, &NormalizedPoint::base_point(2))?;
        let c = GeneralizedGeodesic::line_through(&x, &toward)?;
        let lp = LongnessParams {
            t: p.t,
            beta: 0.0,
            delta: p.delta.max(0.5),
            tau: p.tau.max(0.5),
            seed: rng.random(),
            samples: 16,
        };
        let sub = verify_longness(&c, &w, &lp)?;
        Ok(if sub.passed() {
            violation(
                "no violation detected on a boundary path",
                json!({"geodesic": c, "w": w}),
            )
        } else {
            Outcome::Pass
        })
    })?;
    r.stat("t", p.t);
    Ok(r)
}

pub fn flow_suites(p: &SuiteParams) -> Result<Vec<Report>> {
    Ok(vec![
        flow_law_suite(p)?,
        fs_bounds_suite(p)?,
        longness_suite(p)?,
        longness_control_suite(p)?,
    ])
}

// ---------------------------------------------------------------- lattice

/// Slopes increase, the filtration is nested, and the polygon of `g·s`
/// is that of `s` with the filtration moved by `g`.
pub fn polygon_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    run_samples("polygon structure and equivariance", p, 0x0b, |rng| {
        let n = rng.random_range(2..=p.n.clamp(2, 4));
        let s = sampling::random_spd(rng, n, 0.8);
        let g = sampling::random_gl(rng, n, 6);
        let poly = canonical_polygon_with(&s, &cfg)?;
        let moved = canonical_polygon_with(&act(&g, &s)?, &cfg)?;
        let increasing = poly.slopes.windows(2).all(|w| w[0] < w[1]);
        let mut nested = true;
        for pair in poly.filtration.windows(2) {
            nested &= pair[1].contains(&pair[0])?;
        }
        let same_points = poly
            .points
            .iter()
            .zip(&moved.points)
            .all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-9 * (1.0 + a.1.abs()));
        let transported: Vec<Sublattice> = poly
            .filtration
            .iter()
            .map(|w| w.transform(&g))
            .collect::<Result<_>>()?;
        let ok = increasing
            && nested
            && same_points
            && moved.hull_vertices == poly.hull_vertices
            && moved.filtration == transported;
        Ok(if ok {
            Outcome::Pass
        } else {
            violation(
                "polygon structure or equivariance fails",
                json!({"gram": rows(s.gram()), "g": g.mat(), "polygon": poly, "moved": moved}),
            )
        })
    })
}

/// `vol_{W₂}(s) = vol_W(s) · vol_{W₂/W}` for enumerated chains `W ⊂ W₂`.
pub fn multiplicativity_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let worst = std::sync::Mutex::new((0.0f64, 0usize));
    let mut r = run_samples("volume multiplicativity", p, 0x0c, |rng| {
        let n = rng.random_range(2..=p.n.clamp(2, 4));
        let s = sampling::random_spd(rng, n, 0.6);
        let mut all = vec![Sublattice::zero(n)];
        for k in 1..n {
            all.extend(
                sublattices_within(&s, k, 1.3, &cfg)?
                    .into_iter()
                    .map(|(w, _)| w),
            );
        }
        all.push(Sublattice::full(n));
        let mut err: f64 = 0.0;
        let mut chains = 0;
        for w in all.iter().filter(|w| w.rank() < n) {
            let (q, _) = quotient_form(&s, w)?;
            for w2 in all.iter().filter(|w2| w2.rank() > w.rank()) {
                if !w2.contains(w)? {
                    continue;
                }
                chains += 1;
                let image = w.project_quotient(w2)?;
                let lhs = vol_w(&s, w2)?;
                let rhs = vol_w(&s, w)? * vol_w(&q, &image)?;
                err = err.max((lhs - rhs).abs() / lhs);
            }
        }
        let mut wst = worst.lock().expect("no poisoning");
        wst.0 = wst.0.max(err);
        wst.1 += chains;
        Ok(if err <= 1e-9 {
            Outcome::Pass
        } else {
            violation(
                "volume is not multiplicative",
                json!({"gram": rows(s.gram()), "rel_err": err}),
            )
        })
    })?;
    let (err, chains) = worst.into_inner().expect("no poisoning");
    r.stat("max_rel_err", err).stat("chains", chains);
    Ok(r)
}

/// `d_W` is unchanged by exact rescaling and transported by `GL_n(Z)`.
pub fn descent_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let worst = std::sync::Mutex::new(0.0f64);
    let mut r = run_samples(
        "instability function: scale invariance and equivariance",
        p,
        0x0d,
        |rng| {
            let n = rng.random_range(2..=p.n.clamp(2, 4));
            let s = sampling::random_integer_gram(rng, n, 2);
            let scale = f64::from(rng.random_range(2..1000i32));
            let w = random_proper_sublattice(rng, n);
            let x = normalize_det(&s);
            let d = d_w_with(&x, &w, &cfg)?;
            let d_scaled = d_w_with(&normalize_det(&s.scaled(scale)?), &w, &cfg)?;
            let g = sampling::random_gl(rng, n, 6);
            let d_moved = d_w_with(&act_point(&g, &x)?, &w.transform(&g)?, &cfg)?;
            let rel = (d_moved - d).abs() / d;
            let mut wst = worst.lock().expect("no poisoning");
            *wst = wst.max(rel);
            Ok(if d_scaled == d && rel <= 1e-9 {
                Outcome::Pass
            } else {
                violation(
                    "d_W not invariant",
                    json!({"gram": rows(s.gram()), "w": w, "r": scale, "d": d, "d_scaled": d_scaled, "d_moved": d_moved}),
                )
            })
        },
    )?;
    r.stat(
        "max_rel_equivariance_err",
        worst.into_inner().expect("no poisoning"),
    );
    Ok(r)
}

/// A random chain `W₀ ⊊ W₁` (allowing `0` and `Z^n`).
pub fn random_chain(rng: &mut SampleRng, n: usize) -> Result<(Sublattice, Sublattice)> {
    let r1 = rng.random_range(1..=n);
    let w1 = if r1 == n {
        Sublattice::full(n)
    } else {
        sampling::random_sublattice(rng, n, r1, 2)
    };
    let r0 = rng.random_range(0..r1);
    if r0 == 0 {
        return Ok((Sublattice::zero(n), w1));
    }
    let picks: Vec<Vec<i64>> = (0..r0)
        .map(|_| {
            let mut v = vec![0i64; n];
            for b in w1.basis() {
                let c = rng.random_range(-2..=2);
                for (x, y) in v.iter_mut().zip(b) {
                    *x += c * y;
                }
            }
            v
        })
        .collect();
    match crate::lattice::saturate(n, &picks) {
        Ok(w0) => Ok((w0, w1)),
        Err(Error::DependentVectors) => Ok((Sublattice::zero(n), w1)),
        Err(e) => Err(e),
    }
}

/// `|c̃(s₁) − c̃(s₀)| ≤ √n · d(s₀, s₁)`.
pub fn lipschitz_suite(p: &SuiteParams) -> Result<Report> {
    let worst = std::sync::Mutex::new(f64::INFINITY);
    let mut r = run_samples("slope Lipschitz bound", p, 0x0e, |rng| {
        let n = rng.random_range(2..=p.n.clamp(2, 5));
        let x0 = sampling::random_point(rng, n, 0.7);
        let x1 = if rng.random_bool(0.5) {
            sampling::random_point(rng, n, 0.7)
        } else {
            let r = rng.random_range(0.0..0.2);
            sampling::random_point_at_distance(rng, &x0, r)?
        };
        let (w0, w1) = random_chain(rng, n)?;
        let lhs = (c_tilde(x1.rep(), &w0, &w1)? - c_tilde(x0.rep(), &w0, &w1)?).abs();
        let rhs = (n as f64).sqrt() * distance(x0.rep(), x1.rep())?;
        let mut wst = worst.lock().expect("no poisoning");
        *wst = wst.min(rhs - lhs);
        Ok(if lhs <= rhs + INEQ_SLACK {
            Outcome::Pass
        } else {
            violation(
                "slope moved faster than sqrt(n)·distance",
                json!({"w0": w0, "w1": w1, "lhs": lhs, "rhs": rhs}),
            )
        })
    })?;
    r.stat("min_margin", worst.into_inner().expect("no poisoning"));
    Ok(r)
}

/// `d_W(y) ∈ [d_W(x) e^{−2√n α}, d_W(x) e^{2√n α}]` with `α = d(x, y)`, for
/// every enumerated `W`.
pub fn sandwich_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let stats = std::sync::Mutex::new((f64::INFINITY, 0usize));
    let mut r = run_samples("instability sandwich", p, 0x0f, |rng| {
        let n = rng.random_range(2..=p.n.clamp(2, 3));
        let x = sampling::random_point(rng, n, 0.8);
        let y = if rng.random_bool(0.5) {
            sampling::random_point(rng, n, 0.8)
        } else {
            let r = rng.random_range(0.0..0.3);
            sampling::random_point_at_distance(rng, &x, r)?
        };
        let alpha = distance(x.rep(), y.rep())?;
        let factor = (2.0 * (n as f64).sqrt() * alpha).exp();
        let mut ws = std::collections::BTreeSet::new();
        for k in 1..n {
            for pt in [&x, &y] {
                ws.extend(
                    sublattices_within(pt.rep(), k, 1.5, &cfg)?
                        .into_iter()
                        .map(|(w, _)| w),
                );
            }
        }
        let mut margin = f64::INFINITY;
        for w in &ws {
            let (dx, dy) = (d_w_with(&x, w, &cfg)?, d_w_with(&y, w, &cfg)?);
            let m = (factor.ln() - (dy / dx).ln().abs()) / factor.ln().max(1e-300);
            margin = margin.min(m);
            if dy < dx / factor * (1.0 - INEQ_SLACK) || dy > dx * factor * (1.0 + INEQ_SLACK) {
                return Ok(violation(
                    "d_W left the sandwich interval",
                    json!({"w": w, "d_w_x": dx, "d_w_y": dy, "alpha": alpha}),
                ));
            }
        }
        let mut st = stats.lock().expect("no poisoning");
        st.0 = st.0.min(margin);
        st.1 += ws.len();
        Ok(Outcome::Pass)
    })?;
    let (margin, count) = stats.into_inner().expect("no poisoning");
    r.stat("sublattices_checked", count)
        .stat("min_relative_log_margin", margin);
    Ok(r)
}

/// `c̃ˢ_W` and `c̃ⁱ_W` from polygons against direct enumeration of the
/// competing `W₀ ⊊ W` and `W ⊊ W₂` of small volume.
pub fn grayson_identity_suite(p: &SuiteParams) -> Result<Report> {
    let cfg = p.enumeration;
    let worst = std::sync::Mutex::new(0.0f64);
    let mut r = run_samples(
        "canonical polygon realizes the extremal slopes",
        p,
        0x10,
        |rng| {
            let n = rng.random_range(2..=p.n.clamp(2, 3));
            let s = sampling::random_integer_gram(rng, n, 2);
            let w = random_proper_sublattice(rng, n);
            let sup = crate::lattice::c_sup_with(&s, &w, &cfg)?;
            let inf = crate::lattice::c_inf_with(&s, &w, &cfg)?;
            // Only competitors whose slope reaches the polygon's value (up to a
            // small slack) need enumerating; anything missed would show up as a
            // mismatch.
            let vw = vol_w(&s, &w)?;
            let m = w.rank();
            let mut direct_sup = f64::NEG_INFINITY;
            let mut direct_inf = f64::INFINITY;
            for k in 0..m {
                let bound = vw * (-(sup - 1e-6) * (m - k) as f64).exp();
                for (w0, _) in sublattices_within(&s, k, bound, &cfg)? {
                    if w.contains(&w0)? {
                        direct_sup = direct_sup.max(c_tilde(&s, &w0, &w)?);
                    }
                }
            }
            for k in m + 1..=n {
                let bound = vw * ((inf + 1e-6) * (k - m) as f64).exp();
                for (w2, _) in sublattices_within(&s, k, bound, &cfg)? {
                    if w2.contains(&w)? {
                        direct_inf = direct_inf.min(c_tilde(&s, &w, &w2)?);
                    }
                }
            }
            let err = (sup - direct_sup).abs().max((inf - direct_inf).abs());
            let mut wst = worst.lock().expect("no poisoning");
            *wst = wst.max(err);
            Ok(if err <= 1e-9 {
                Outcome::Pass
            } else {
                violation(
                    "polygon slopes differ from direct extrema",
                    json!({"gram": rows(s.gram()), "w": w, "c_sup": sup, "direct_sup": direct_sup, "c_inf": inf, "direct_inf": direct_inf}),
                )
            })
        },
    )?;
    r.stat("max_abs_err", worst.into_inner().expect("no poisoning"));
    Ok(r)
}

pub fn lattice_suites(p: &SuiteParams) -> Result<Vec<Report>> {
    Ok(vec![
        polygon_suite(p)?,
        multiplicativity_suite(p)?,
        descent_suite(p)?,
        lipschitz_suite(p)?,
        sandwich_suite(p)?,
        grayson_identity_suite(p)?,
    ])
}

pub fn gradient_suites(p: &SuiteParams) -> Result<Vec<Report>> {
    Ok(vec![gradient_suite(p)?, gradient_norm_suite(p)?])
}
