//! Seeded random instances for property checks and verification suites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::exterior::DecomposableFrame;
use crate::intmat;
use crate::lattice::{saturate, Sublattice};
use crate::linalg;
use crate::symspace::{
    exp_map, metric_norm, normalize_det, project_traceless, InnerProduct, IntegerAutomorphism,
    NormalizedPoint, SymTangent,
};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for sample `index`, so samples can be drawn in
/// parallel and still depend only on `(seed, index)`.
pub fn rng_for(seed: u64, index: u64) -> SampleRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn gaussian_matrix(rng: &mut SampleRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Symmetric matrix with independent `N(0, sigma²)` entries on and above the
/// diagonal.
pub fn random_symmetric(rng: &mut SampleRng, n: usize, sigma: f64) -> SymTangent {
    let a = gaussian_matrix(rng, n, n) * sigma;
    SymTangent::from_symmetric_unchecked(linalg::symmetrize(&a))
}

/// `exp(A)` for a random symmetric `A`; `spread` controls the log-eigenvalue
/// scale.
pub fn random_spd(rng: &mut SampleRng, n: usize, spread: f64) -> InnerProduct {
    let a = random_symmetric(rng, n, spread);
    InnerProduct::new(linalg::symmetrize(&linalg::sym_apply(a.mat(), f64::exp)))
        .expect("exponential of a symmetric matrix is positive definite")
}

pub fn random_point(rng: &mut SampleRng, n: usize, spread: f64) -> NormalizedPoint {
    normalize_det(&random_spd(rng, n, spread))
}

/// Unit tangent vector to the det-1 slice at `x`.
pub fn random_unit_tangent(rng: &mut SampleRng, x: &NormalizedPoint) -> Result<SymTangent> {
    loop {
        let u = project_traceless(x.rep(), &random_symmetric(rng, x.dim(), 1.0))?;
        let norm = metric_norm(x.rep(), &u)?;
        if norm > 1e-8 {
            return Ok(u.scaled(1.0 / norm));
        }
    }
}

/// A point at distance exactly `r` from `x` in a random direction.
pub fn random_point_at_distance(
    rng: &mut SampleRng,
    x: &NormalizedPoint,
    r: f64,
) -> Result<NormalizedPoint> {
    let u = random_unit_tangent(rng, x)?;
    Ok(normalize_det(&exp_map(x.rep(), &u.scaled(r))?))
}

/// Random element of `GL_n(Z)` as a product of elementary shears, swaps and
/// sign changes.
pub fn random_gl(rng: &mut SampleRng, n: usize, steps: usize) -> IntegerAutomorphism {
    let mut m = intmat::identity(n);
    if n == 1 {
        if rng.random_bool(0.5) {
            m[0][0] = -1;
        }
        return IntegerAutomorphism::new(m).expect("±1 is unimodular");
    }
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        match rng.random_range(0..4) {
            0 => m.swap(i, j),
            1 => m[i].iter_mut().for_each(|x| *x = -*x),
            _ => {
                let k: i64 = if rng.random_bool(0.5) { 1 } else { -1 };
                let row_j = m[j].clone();
                for (x, y) in m[i].iter_mut().zip(row_j) {
                    *x += k * y;
                }
            }
        }
    }
    IntegerAutomorphism::new(m).expect("elementary products are unimodular")
}

pub fn random_frame(rng: &mut SampleRng, n: usize, m: usize) -> DecomposableFrame {
    loop {
        let a = gaussian_matrix(rng, n, m);
        let vectors = (0..m)
            .map(|j| a.column(j).iter().copied().collect())
            .collect();
        if let Ok(f) = DecomposableFrame::new(n, vectors) {
            return f;
        }
    }
}

/// `AᵀA + I` for a random integer matrix `A` with entries in `[-range, range]`.
pub fn random_integer_gram(rng: &mut SampleRng, n: usize, range: i64) -> InnerProduct {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-range..=range) as f64);
    let s = a.transpose() * a + DMatrix::identity(n, n);
    InnerProduct::new(s).expect("AᵀA + I is positive definite")
}

/// Saturation of the span of `m` random small integer vectors.
pub fn random_sublattice(rng: &mut SampleRng, n: usize, m: usize, range: i64) -> Sublattice {
    loop {
        let vs: Vec<Vec<i64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-range..=range)).collect())
            .collect();
        if let Ok(w) = saturate(n, &vs) {
            return w;
        }
    }
}

/// The `i`-th element of the van der Corput sequence in `base`.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
