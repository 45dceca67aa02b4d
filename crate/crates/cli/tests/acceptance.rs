//! Acceptance criteria, one PASS/FAIL line each. Library results are checked
//! against oracles written here from first principles (plain determinants,
//! central differences, box enumeration, quadrature, Gauss reduction); the
//! library's samplers only provide the random instances.

use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use grayson_lab::cover::{active_sets_unchecked, cusp_height_probe, neighborhood_beta};
use grayson_lab::exterior::{grad_vol_squared, s_xi};
use grayson_lab::flowspace::{fs_distance, GeneralizedGeodesic};
use grayson_lab::lattice::{
    c_inf, c_sup, c_tilde, canonical_polygon, d_w, quotient_form, sublattices_within, vol_w,
    EnumConfig, Sublattice,
};
use grayson_lab::sampling::{self, SampleRng};
use grayson_lab::symspace::{
    act, act_point, distance, normalize_det, InnerProduct, NormalizedPoint,
};
use grayson_lab::verify::{self, SuiteParams};

type Check = Result<String, String>;

fn rng(criterion: u64, i: usize) -> SampleRng {
    sampling::rng_for(0xacce_0000 + criterion, i as u64)
}

// ------------------------------------------------------------------ oracles

fn sym_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

fn int_cols(vectors: &[Vec<i64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i] as f64)
}

/// `sqrt(det(Bᵀ s B))`, 1 for the zero lattice.
fn vol(s: &DMatrix<f64>, vectors: &[Vec<i64>]) -> f64 {
    if vectors.is_empty() {
        return 1.0;
    }
    let b = int_cols(vectors, s.nrows());
    (b.transpose() * s * b).determinant().sqrt()
}

fn dot(s: &DMatrix<f64>, v: &[i64], w: &[i64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += v[i] as f64 * s[(i, j)] * w[j] as f64;
        }
    }
    acc
}

/// Integer vectors in the box `|v_i| ≤ sqrt(r2 · (s⁻¹)_ii)`, which contains
/// every `v` with `s(v, v) ≤ r2`.
fn box_vectors(s: &DMatrix<f64>, r2: f64) -> Vec<Vec<i64>> {
    let n = s.nrows();
    let inv = s.clone().try_inverse().expect("invertible");
    let bounds: Vec<i64> = (0..n)
        .map(|i| (r2 * inv[(i, i)]).sqrt().floor() as i64)
        .collect();
    let mut out = Vec::new();
    let mut v: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        if v.iter().any(|&x| x != 0) {
            out.push(v.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if v[i] < bounds[i] {
                v[i] += 1;
                break;
            }
            v[i] = -bounds[i];
            i += 1;
        }
    }
}

fn parallel(v: &[i64], w: &[i64]) -> bool {
    (0..v.len()).all(|i| (0..v.len()).all(|j| v[i] * w[j] == v[j] * w[i]))
}

/// Smallest `s(v, v)` over nonzero `v` in the rank-2 lattice spanned by `b`.
fn shortest_in_plane(s: &DMatrix<f64>, b: &[Vec<i64>]) -> f64 {
    let g = DMatrix::from_fn(2, 2, |i, j| dot(s, &b[i], &b[j]));
    let r2 = g[(0, 0)].min(g[(1, 1)]);
    box_vectors(&g, r2)
        .iter()
        .map(|c| {
            let (x, y) = (c[0] as f64, c[1] as f64);
            x * x * g[(0, 0)] + 2.0 * x * y * g[(0, 1)] + y * y * g[(1, 1)]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest squared length of the component of an integer vector
/// s-orthogonal to `w`, over vectors not parallel to `w`.
fn shortest_transverse(s: &DMatrix<f64>, w: &[i64]) -> f64 {
    let n = w.len();
    let ww = dot(s, w, w);
    let perp = |v: &[i64]| dot(s, v, v) - dot(s, v, w).powi(2) / ww;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let e: Vec<i64> = (0..n).map(|j| i64::from(i == j)).collect();
        if !parallel(&e, w) {
            best = best.min(perp(&e));
        }
    }
    // reducing v modulo w leaves a representative with s(v,v) ≤ perp + ww/4
    for v in box_vectors(s, best + ww / 4.0 + 1e-9) {
        if !parallel(&v, w) {
            best = best.min(perp(&v));
        }
    }
    best
}

/// `(c_sup, c_inf)` of `W` for `n ≤ 3` by direct enumeration of the
/// competing sublattices `W₀ ⊊ W` and `W ⊊ W₂`.
fn oracle_slopes(s: &DMatrix<f64>, w: &Sublattice) -> (f64, f64) {
    let n = s.nrows();
    let b = w.basis();
    let lv = vol(s, b).ln();
    let lfull = s.determinant().sqrt().ln();
    match (n, b.len()) {
        (2, 1) => (lv, lfull - lv),
        (3, 1) => {
            let via_plane = lv + 0.5 * shortest_transverse(s, &b[0]).ln() - lv;
            (lv, via_plane.min((lfull - lv) / 2.0))
        }
        (3, 2) => {
            let via_line = lv - 0.5 * shortest_in_plane(s, b).ln();
            (via_line.max(lv / 2.0), lfull - lv)
        }
        _ => panic!("oracle covers n ≤ 3 only"),
    }
}

fn oracle_d_w(x: &NormalizedPoint, w: &Sublattice) -> f64 {
    let (sup, inf) = oracle_slopes(x.rep().gram(), w);
    (inf - sup).exp()
}

// ----------------------------------------------------------------- criteria

fn c1_gradient() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut r = rng(1, i);
        let n = r.random_range(1..=5);
        let m = r.random_range(1..=n);
        let s = sampling::random_spd(&mut r, n, 0.5);
        let frame = sampling::random_frame(&mut r, n, m);
        let f = frame.matrix();
        let vol2 = |g: &DMatrix<f64>| (f.transpose() * g * &f).determinant();
        let grad = grad_vol_squared(&s, &frame).map_err(|e| e.to_string())?;
        let sinv = s.gram().clone().try_inverse().unwrap();
        let h = 1e-5 * (1.0 + s.gram().norm());
        for _ in 0..20 {
            let u = sampling::random_symmetric(&mut r, n, 1.0);
            let u = u.mat();
            let fd = (vol2(&(s.gram() + u * h)) - vol2(&(s.gram() - u * h))) / (2.0 * h);
            let exact = (&sinv * grad.mat() * &sinv * u).trace();
            let unorm = (&sinv * u * &sinv * u).trace().sqrt();
            let scale = fd.abs().max(exact.abs()).max(vol2(s.gram()) * unorm);
            let rel = (fd - exact).abs() / scale;
            worst = worst.max(rel);
            if rel > 1e-6 {
                return Err(format!("sample {i}: rel err {rel:e}"));
            }
        }
    }
    Ok(format!(
        "100 instances × 20 directions, max rel err {worst:.2e} ≤ 1e-6"
    ))
}

fn c2_norm() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut r = rng(1, i);
        let n = r.random_range(1..=5);
        let m = r.random_range(1..=n);
        let s = sampling::random_spd(&mut r, n, 0.5);
        let frame = sampling::random_frame(&mut r, n, m);
        let x = s_xi(&s, &frame).map_err(|e| e.to_string())?;
        let sinv = s.gram().clone().try_inverse().unwrap();
        let norm = (&sinv * x.mat() * &sinv * x.mat()).trace().sqrt();
        worst = worst.max((norm - (m as f64).sqrt()).abs());
    }
    if worst <= 1e-9 {
        Ok(format!(
            "100 instances, max |‖s_ξ‖ − √m| = {worst:.2e} ≤ 1e-9"
        ))
    } else {
        Err(format!("max deviation {worst:e}"))
    }
}

/// Length of the geodesic `s0^{1/2} (s0^{-1/2} s1 s0^{-1/2})^t s0^{1/2}` by
/// Simpson quadrature of the metric speed.
fn geodesic_length(s0: &DMatrix<f64>, s1: &DMatrix<f64>) -> f64 {
    let half = sym_fn(s0, f64::sqrt);
    let half_inv = sym_fn(s0, |x| 1.0 / x.sqrt());
    let log_a = sym_fn(&(&half_inv * s1 * &half_inv), f64::ln);
    let gamma = |t: f64| &half * sym_fn(&(&log_a * t), f64::exp) * &half;
    let speed = |t: f64| {
        let h = 1e-5;
        let d = (gamma(t + h) - gamma(t - h)) / (2.0 * h);
        let gi = gamma(t).try_inverse().unwrap();
        (&gi * &d * &gi * &d).trace().sqrt()
    };
    let k = 200;
    let step = 1.0 / k as f64;
    let mut acc = speed(0.0) + speed(1.0);
    for j in 1..k {
        acc += speed(j as f64 * step) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * step / 3.0
}

fn c3_metric() -> Check {
    let mut inv_err: f64 = 0.0;
    for i in 0..50 {
        let mut r = rng(3, i);
        let n = r.random_range(2..=5);
        let s0 = sampling::random_spd(&mut r, n, 0.8);
        let s1 = sampling::random_spd(&mut r, n, 0.8);
        let g = sampling::random_gl(&mut r, n, 10);
        let d = distance(&s0, &s1).unwrap();
        let dg = distance(&act(&g, &s0).unwrap(), &act(&g, &s1).unwrap()).unwrap();
        inv_err = inv_err.max((d - dg).abs() / (1.0 + d));
    }
    let mut quad_err: f64 = 0.0;
    for i in 0..20 {
        let mut r = rng(3, 1000 + i);
        let n = r.random_range(2..=5);
        let s0 = sampling::random_spd(&mut r, n, 0.8);
        let s1 = sampling::random_spd(&mut r, n, 0.8);
        let d = distance(&s0, &s1).unwrap();
        quad_err = quad_err.max((d - geodesic_length(s0.gram(), s1.gram())).abs());
    }
    if inv_err <= 1e-9 && quad_err <= 1e-6 {
        Ok(format!("invariance err {inv_err:.2e} ≤ 1e-9 (50 g); quadrature err {quad_err:.2e} ≤ 1e-6 (20 pairs)"))
    } else {
        Err(format!(
            "invariance err {inv_err:e}, quadrature err {quad_err:e}"
        ))
    }
}

fn c4_lipschitz() -> Check {
    let mut min_margin = f64::INFINITY;
    for i in 0..200 {
        let mut r = rng(4, i);
        let n = r.random_range(2..=5);
        let x0 = sampling::random_point(&mut r, n, 0.7);
        let x1 = if i % 2 == 0 {
            sampling::random_point(&mut r, n, 0.7)
        } else {
            let d = r.random_range(0.0..0.3);
            sampling::random_point_at_distance(&mut r, &x0, d).unwrap()
        };
        let (w0, w1) = verify::random_chain(&mut r, n).unwrap();
        let slope = |x: &NormalizedPoint| {
            let s = x.rep().gram();
            (vol(s, w1.basis()).ln() - vol(s, w0.basis()).ln()) / (w1.rank() - w0.rank()) as f64
        };
        let lib = c_tilde(x0.rep(), &w0, &w1).unwrap();
        if (lib - slope(&x0)).abs() > 1e-9 {
            return Err(format!("sample {i}: slope {lib} vs oracle {}", slope(&x0)));
        }
        let lhs = (slope(&x1) - slope(&x0)).abs();
        let rhs = (n as f64).sqrt() * distance(x0.rep(), x1.rep()).unwrap();
        min_margin = min_margin.min(rhs + 1e-9 - lhs);
        if lhs > rhs + 1e-9 {
            return Err(format!("sample {i}: {lhs} > {rhs}"));
        }
    }
    Ok(format!(
        "200 pairs, 0 violations, min margin {min_margin:.3e}"
    ))
}

fn c5_sandwich() -> Check {
    let cfg = EnumConfig::default();
    let mut checked = 0usize;
    for i in 0..200 {
        let mut r = rng(5, i);
        let n = r.random_range(2..=3);
        let x = sampling::random_point(&mut r, n, 0.8);
        let y = if i % 2 == 0 {
            sampling::random_point(&mut r, n, 0.8)
        } else {
            let d = r.random_range(0.0..0.3);
            sampling::random_point_at_distance(&mut r, &x, d).unwrap()
        };
        let alpha = distance(x.rep(), y.rep()).unwrap();
        let factor = (2.0 * (n as f64).sqrt() * alpha).exp();
        let mut ws = std::collections::BTreeSet::new();
        for k in 1..n {
            for p in [&x, &y] {
                let found = sublattices_within(p.rep(), k, 1.5, &cfg).map_err(|e| e.to_string())?;
                ws.extend(found.into_iter().map(|(w, _)| w));
            }
        }
        for w in &ws {
            let (dx, dy) = (d_w(&x, w).unwrap(), d_w(&y, w).unwrap());
            let (ox, oy) = (oracle_d_w(&x, w), oracle_d_w(&y, w));
            if (dx - ox).abs() > 1e-9 * ox || (dy - oy).abs() > 1e-9 * oy {
                return Err(format!(
                    "sample {i}: d_W {dx}/{dy} vs oracle {ox}/{oy} for {w:?}"
                ));
            }
            if oy < ox / factor * (1.0 - 1e-9) || oy > ox * factor * (1.0 + 1e-9) {
                return Err(format!(
                    "sample {i}: d_W(y) = {oy} outside [{}, {}]",
                    ox / factor,
                    ox * factor
                ));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "200 pairs, {checked} (pair, W) checks, 0 violations"
    ))
}

fn c6_neighborhood() -> Check {
    let cfg = EnumConfig::default();
    let mut min_ratio = f64::INFINITY;
    for i in 0..100 {
        let mut r = rng(6, i);
        let n = r.random_range(2..=3);
        let alpha = r.random_range(0.05..0.6);
        let t = r.random_range(1.0..3.0);
        let beta = neighborhood_beta(alpha, t, n);
        let expected = ((2.0 * (n as f64).sqrt() * alpha).exp() - 1.0) * t * (1.0 + 1e-6);
        if (beta - expected).abs() > 1e-12 * expected {
            return Err(format!("beta {beta} vs {expected}"));
        }
        let m = r.random_range(1..n);
        let w = sampling::random_sublattice(&mut r, n, m, 2);
        let target = (t + beta) * r.random_range(1.0..1.3);
        let x = verify::cusp_point(&mut r, &w, target, 0.3, &cfg).map_err(|e| e.to_string())?;
        let dx = oracle_d_w(&x, &w);
        if dx <= t + beta {
            return Err(format!(
                "sample {i}: constructed point has d_W {dx} ≤ t + β"
            ));
        }
        let rad = alpha * r.random_range(0.0..1.0);
        let y = sampling::random_point_at_distance(&mut r, &x, rad).unwrap();
        if distance(x.rep(), y.rep()).unwrap() >= alpha {
            return Err(format!("sample {i}: y too far"));
        }
        let dy = oracle_d_w(&y, &w);
        min_ratio = min_ratio.min(dy / t);
        if dy <= t {
            return Err(format!("sample {i}: d_W(y) = {dy} ≤ t = {t}"));
        }
    }
    Ok(format!(
        "100 triples, 0 violations, min d_W(y)/t = {min_ratio:.3}"
    ))
}

fn c7_grayson() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut r = rng(7, i);
        let n = r.random_range(2..=3);
        let s = sampling::random_integer_gram(&mut r, n, 3);
        let m = r.random_range(1..n);
        let w = sampling::random_sublattice(&mut r, n, m, 2);
        let (sup, inf) = oracle_slopes(s.gram(), &w);
        let lsup = c_sup(&s, &w).map_err(|e| e.to_string())?;
        let linf = c_inf(&s, &w).map_err(|e| e.to_string())?;
        let err = (lsup - sup).abs().max((linf - inf).abs());
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!(
                "sample {i}: c_sup {lsup} vs {sup}, c_inf {linf} vs {inf}"
            ));
        }
    }
    Ok(format!("100 integer Grams, max abs err {worst:.2e} ≤ 1e-9"))
}

fn c8_chain() -> Check {
    let cfg = EnumConfig::default();
    let mut max_len = 0;
    let mut with_active = 0;
    for i in 0..1000 {
        let mut r = rng(8, i);
        let spread = r.random_range(0.2..1.5);
        let x = sampling::random_point(&mut r, 3, spread);
        let active = active_sets_unchecked(&x, 1.0, &cfg).map_err(|e| e.to_string())?;
        for (w, d) in &active {
            let o = oracle_d_w(&x, w);
            if (o - d).abs() > 1e-9 * o || o <= 1.0 - 1e-9 {
                return Err(format!("point {i}: reported d_W {d} vs oracle {o}"));
            }
        }
        let ranks: Vec<usize> = active.iter().map(|(w, _)| w.rank()).collect();
        if active.len() > 2 || (active.len() == 2 && ranks[0] == ranks[1]) {
            return Err(format!(
                "point {i}: {} active sets of ranks {ranks:?}",
                active.len()
            ));
        }
        if active.len() == 2 {
            let (line, plane) = if ranks[0] == 1 {
                (&active[0].0, &active[1].0)
            } else {
                (&active[1].0, &active[0].0)
            };
            let mut rows = plane.basis().clone();
            rows.push(line.basis()[0].clone());
            if int_cols(&rows, 3).determinant().abs() > 0.5 {
                return Err(format!("point {i}: active line not inside active plane"));
            }
        }
        max_len = max_len.max(active.len());
        with_active += usize::from(!active.is_empty());
    }
    Ok(format!(
        "1000 points (n = 3, t = 1), {with_active} with active sets, longest chain {max_len} ≤ 2"
    ))
}

/// Saturated iff the gcd of the maximal minors of the basis is 1.
fn saturated(w: &Sublattice) -> bool {
    let b = w.basis();
    let (k, n) = (b.len(), w.ambient_dim());
    if k == 0 {
        return true;
    }
    let mut g = 0i64;
    let mut cols: Vec<usize> = (0..k).collect();
    loop {
        let minor = DMatrix::from_fn(k, k, |i, j| b[i][cols[j]] as f64)
            .determinant()
            .round() as i64;
        let (mut a, mut c) = (g.abs(), minor.abs());
        while c != 0 {
            (a, c) = (c, a % c);
        }
        g = a;
        let mut i = k;
        loop {
            if i == 0 {
                return g == 1;
            }
            i -= 1;
            if cols[i] < n - k + i {
                cols[i] += 1;
                for j in i + 1..k {
                    cols[j] = cols[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn c9_polygon() -> Check {
    let mut instances = 0;
    let flat = canonical_polygon(&InnerProduct::identity(2)).unwrap();
    if flat.slopes != vec![0.0] || flat.hull_vertices != vec![0, 2] {
        return Err("identity polygon is not flat".into());
    }
    for i in 0..20 {
        let mut r = rng(9, i);
        let n = r.random_range(2..=4);
        let s = sampling::random_spd(&mut r, n, 0.8);
        let p = canonical_polygon(&s).map_err(|e| e.to_string())?;
        if !p.slopes.windows(2).all(|w| w[0] < w[1]) {
            return Err(format!("instance {i}: slopes {:?}", p.slopes));
        }
        for (j, w) in p.filtration.iter().enumerate() {
            if !saturated(w) || (j > 0 && !w.contains(&p.filtration[j - 1]).unwrap()) {
                return Err(format!("instance {i}: filtration not nested/saturated"));
            }
            if (vol(s.gram(), w.basis()).ln() - p.points[p.hull_vertices[j]].1).abs() > 1e-9 {
                return Err(format!("instance {i}: vertex height disagrees with volume"));
            }
        }
        for k in 0..20 {
            let g = sampling::random_gl(&mut rng(9, 100 + 20 * i + k), n, 8);
            let q = canonical_polygon(&act(&g, &s).unwrap()).map_err(|e| e.to_string())?;
            let moved: Vec<Sublattice> = p
                .filtration
                .iter()
                .map(|w| w.transform(&g).unwrap())
                .collect();
            let heights_ok = p
                .points
                .iter()
                .zip(&q.points)
                .all(|(a, b)| (a.1 - b.1).abs() <= 1e-9 * (1.0 + a.1.abs()));
            if q.filtration != moved || q.hull_vertices != p.hull_vertices || !heights_ok {
                return Err(format!(
                    "instance {i}: polygon not equivariant under g #{k}"
                ));
            }
        }
        instances += 1;
    }
    Ok(format!(
        "{instances} instances (n ≤ 4) × 20 group elements, structure and equivariance hold"
    ))
}

fn c10_multiplicativity() -> Check {
    let cfg = EnumConfig::default();
    let mut chains = 0usize;
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let mut r = rng(10, i);
        let n = r.random_range(2..=4);
        let s = sampling::random_spd(&mut r, n, 0.6);
        let mut all = vec![Sublattice::zero(n)];
        for k in 1..n {
            all.extend(
                sublattices_within(&s, k, 1.3, &cfg)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(|(w, _)| w),
            );
        }
        all.push(Sublattice::full(n));
        for w in all.iter().filter(|w| w.rank() < n) {
            let (q, _) = quotient_form(&s, w).unwrap();
            for w2 in all
                .iter()
                .filter(|w2| w2.rank() > w.rank() && w2.contains(w).unwrap())
            {
                let image = w.project_quotient(w2).unwrap();
                let lhs = vol(s.gram(), w2.basis());
                let rhs = vol(s.gram(), w.basis()) * vol_w(&q, &image).unwrap();
                worst = worst.max((lhs - rhs).abs() / lhs);
                chains += 1;
            }
        }
    }
    if worst <= 1e-9 {
        Ok(format!(
            "{chains} chains over 30 instances (n ≤ 4), max rel discrepancy {worst:.2e}"
        ))
    } else {
        Err(format!("max rel discrepancy {worst:e}"))
    }
}

fn c11_descent() -> Check {
    let example = d_w(
        &normalize_det(&InnerProduct::diagonal(&[0.25, 4.0]).unwrap()),
        &Sublattice::coordinate(2, &[0]).unwrap(),
    )
    .unwrap();
    if (example - 4.0).abs() > 1e-12 {
        return Err(format!("d_W(diag(1/4, 4), e1) = {example}"));
    }
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let mut r = rng(11, i);
        let n = r.random_range(2..=4);
        let s = sampling::random_integer_gram(&mut r, n, 2);
        let m = r.random_range(1..n);
        let w = sampling::random_sublattice(&mut r, n, m, 2);
        let x = normalize_det(&s);
        let d = d_w(&x, &w).map_err(|e| e.to_string())?;
        for scale in [
            2.0,
            3.0,
            7.0,
            1000.0,
            f64::from(r.random_range(2..100_000i32)),
        ] {
            let ds = d_w(&normalize_det(&s.scaled(scale).unwrap()), &w).unwrap();
            if ds != d {
                return Err(format!(
                    "instance {i}: d_W changed under r = {scale}: {d} vs {ds}"
                ));
            }
        }
        let g = sampling::random_gl(&mut r, n, 8);
        let dg = d_w(&act_point(&g, &x).unwrap(), &w.transform(&g).unwrap()).unwrap();
        worst = worst.max((dg - d).abs() / d);
    }
    if worst <= 1e-9 {
        Ok(format!(
            "exact under integer rescaling; equivariance err {worst:.2e} over 50 g"
        ))
    } else {
        Err(format!("equivariance err {worst:e}"))
    }
}

/// `∫ d(c(t), d(t)) e^{−|t|} / 2` for geodesics with finite clamps: Simpson
/// between consecutive clamp ends and 0, exact tails outside them.
fn fs_oracle(c: &GeneralizedGeodesic, d: &GeneralizedGeodesic) -> f64 {
    let f = |t: f64| distance(c.evaluate(t).rep(), d.evaluate(t).rep()).unwrap();
    let g = |t: f64| f(t) * (-t.abs()).exp() / 2.0;
    let simpson = |a: f64, b: f64| {
        let k = 400;
        let h = (b - a) / k as f64;
        let mut acc = g(a) + g(b);
        for j in 1..k {
            acc += g(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    let mut cuts = [c.clamp().0, c.clamp().1, d.clamp().0, d.clamp().1, 0.0];
    cuts.sort_by(f64::total_cmp);
    let (lo, hi) = (cuts[0], cuts[4]);
    let inner: f64 = cuts.windows(2).map(|w| simpson(w[0], w[1])).sum();
    inner + f(hi) * (-hi).exp() / 2.0 + f(lo) * lo.exp() / 2.0
}

fn c12_flow() -> Check {
    for i in 0..100 {
        let mut r = rng(12, i);
        let n = r.random_range(2..=4);
        let c = verify::random_geodesic(&mut r, n).unwrap();
        let a = f64::from(r.random_range(-512..=512i32)) / 64.0;
        let b = f64::from(r.random_range(-512..=512i32)) / 64.0;
        if c.flow(a).flow(b) != c.flow(a + b) || c.flow(0.0) != c {
            return Err(format!("group law fails at sample {i}"));
        }
    }
    let mut worst_oracle: f64 = 0.0;
    for i in 0..100 {
        let mut r = rng(12, 1000 + i);
        let n = r.random_range(2..=4);
        let mk = |r: &mut SampleRng| {
            let x = sampling::random_point(r, n, 0.4);
            let u = sampling::random_unit_tangent(r, &x).unwrap();
            GeneralizedGeodesic::new(
                x,
                u,
                (-r.random_range(0.0..2.0), r.random_range(0.0..2.0)),
                0.0,
            )
            .unwrap()
        };
        let (c, d) = (mk(&mut r), mk(&mut r));
        let fs = fs_distance(&c, &d).unwrap();
        let d0 = distance(c.ev0().rep(), d.ev0().rep()).unwrap();
        if d0 > fs + 2.0 + 1e-9 {
            return Err(format!(
                "pair {i}: d(c(0), d(0)) = {d0} > fs + 2 = {}",
                fs + 2.0
            ));
        }
        let s = r.random_range(-4.0..4.0);
        let shifted = fs_distance(&c.flow(s), &c).unwrap();
        if shifted > s.abs() + 1e-9 {
            return Err(format!(
                "pair {i}: fs(Φ_s c, c) = {shifted} > |s| = {}",
                s.abs()
            ));
        }
        worst_oracle = worst_oracle.max((fs - fs_oracle(&c, &d)).abs());
    }
    if worst_oracle > 1e-8 {
        return Err(format!(
            "fs_distance differs from direct quadrature by {worst_oracle:e}"
        ));
    }
    let mut paths = 0;
    for (n, samples) in [(2usize, 25usize), (3, 25)] {
        let p = SuiteParams {
            seed: 12,
            samples,
            n,
            ..SuiteParams::default()
        };
        let long = verify::longness_suite(&p).map_err(|e| e.to_string())?;
        if !long.passed() || long.uncertified > 0 || long.samples != samples {
            return Err(format!(
                "longness at n = {n}: {:?}",
                long.violations.first()
            ));
        }
        paths += long.stats["paths_checked"].as_u64().unwrap_or(0);
        let control = verify::longness_control_suite(&SuiteParams { samples: 10, ..p })
            .map_err(|e| e.to_string())?;
        if !control.passed() {
            return Err(format!(
                "β = 0 control at n = {n} missed a boundary violation"
            ));
        }
    }
    Ok(format!(
        "group law exact (100); fs bounds hold on 100 pairs, quadrature agreement {worst_oracle:.1e}; \
         longness on 50 cusp geodesics ({paths} perturbed paths); β = 0 control flags all 20 boundary cases"
    ))
}

/// Gauss reduction of a binary form `(a, b, c)` = `[[a, b], [b, c]]`.
fn gauss_reduce(mut a: f64, mut b: f64, mut c: f64) -> (f64, f64, f64) {
    loop {
        let k = (b / a).round();
        c += k * k * a - 2.0 * k * b;
        b -= k * a;
        if a > c {
            std::mem::swap(&mut a, &mut c);
        } else {
            return (a, b, c);
        }
    }
}

fn c13_cusp() -> Check {
    let points: Vec<NormalizedPoint> = (0..500)
        .map(|i| {
            let mut r = rng(13, i);
            let spread = r.random_range(0.1..1.5);
            sampling::random_point(&mut r, 2, spread)
        })
        .collect();
    let mut summary = Vec::new();
    for t in [1.0, 2.0, 4.0] {
        let report = cusp_height_probe(&points, t).map_err(|e| e.to_string())?;
        if !report.passed() || report.uncertified > 0 {
            return Err(format!("t = {t}: {:?}", report.violations.first()));
        }
        let mut complement = 0;
        let mut max_h: f64 = 0.0;
        for x in &points {
            let g = x.rep().gram();
            let (a, b, c) = gauss_reduce(g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            // the shortest vector has squared length a, so the largest d_W over
            // rank-one W is 1/a, and the reduced point has height sqrt(ac − b²)/a
            if 1.0 / a > t {
                continue;
            }
            complement += 1;
            let height = (a * c - b * b).sqrt() / a;
            max_h = max_h.max(height);
            if height > t + 1e-9 {
                return Err(format!("t = {t}: complement point of height {height}"));
            }
        }
        if report.stats["complement_points"].as_u64() != Some(complement) {
            return Err(format!(
                "t = {t}: probe found {:?} complement points, oracle {complement}",
                report.stats["complement_points"]
            ));
        }
        summary.push(format!("t={t}: {complement} pts, max height {max_h:.3}"));
    }
    Ok(summary.join("; "))
}

fn c14_cli() -> Check {
    let bin = env!("CARGO_BIN_EXE_grayson-lab");
    let run = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())
    };
    let args = ["report", "--seed", "14", "--samples", "4", "--n", "2"];
    let (a, b) = (run(&args)?, run(&args)?);
    if a.stdout != b.stdout || a.stdout.is_empty() {
        return Err("report output differs between identical runs".into());
    }
    let expectations: [(&[&str], i32); 6] = [
        (&args, 0),
        (
            &[
                "dw",
                "--gram",
                "[[0.25,0],[0,4]]",
                "--sublattice",
                "[[1],[0]]",
            ],
            0,
        ),
        (&["bogus"], 2),
        (&["polygon", "--gram", "[[1,0],[0,1]"], 2),
        (&["polygon", "--gram", "[[1,0],[0,1]]", "--nope"], 2),
        (
            &[
                "polygon",
                "--gram",
                "[[2,1,0],[1,2,1],[0,1,2]]",
                "--enum-bound",
                "2",
            ],
            3,
        ),
    ];
    for (argv, code) in expectations {
        let out = run(argv)?;
        if out.status.code() != Some(code) {
            return Err(format!(
                "{argv:?} exited {:?}, expected {code}",
                out.status.code()
            ));
        }
    }
    let dw = run(&[
        "dw",
        "--gram",
        "[[0.25,0],[0,4]]",
        "--sublattice",
        "[[1],[0]]",
    ])?;
    let v: serde_json::Value = serde_json::from_slice(&dw.stdout).map_err(|e| e.to_string())?;
    if v["d_W"].as_f64() != Some(4.0) {
        return Err(format!("dw example gave {}", v["d_W"]));
    }
    Ok(format!(
        "{} identical bytes over two runs; exit codes 0/2/3 as specified",
        a.stdout.len()
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 14] = [
        ("gradient of the volume function", c1_gradient),
        ("norm of the log-volume gradient", c2_norm),
        ("metric invariance and distance closed form", c3_metric),
        ("Lipschitz slope bound", c4_lipschitz),
        ("sandwich bound for d_W", c5_sandwich),
        ("neighborhood comparison", c6_neighborhood),
        ("polygon slopes realize sup/inf", c7_grayson),
        ("chain condition and nerve bound", c8_chain),
        ("polygon structure and equivariance", c9_polygon),
        ("volume multiplicativity", c10_multiplicativity),
        ("d_W descent and equivariance", c11_descent),
        ("flow space", c12_flow),
        ("n = 2 cusp probe", c13_cusp),
        ("CLI determinism and exit codes", c14_cli),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
