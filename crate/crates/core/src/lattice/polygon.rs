use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::enumerate::{min_volume_sublattice, EnumConfig};
use crate::lattice::sublattice::Sublattice;
use crate::symspace::InnerProduct;

/// Points within this distance of a hull segment count as lying on it.
const HULL_TOL: f64 = 1e-10;

/// The canonical plot `k ↦ ln min vol` of a lattice, its lower convex hull,
/// and the filtration by minimizers at the hull vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPolygon {
    /// `(k, ln min_{rk W = k} vol_W(s))` for `k = 0..=n`.
    pub points: Vec<(usize, f64)>,
    #[serde(rename = "vertices")]
    pub hull_vertices: Vec<usize>,
    pub filtration: Vec<Sublattice>,
    pub slopes: Vec<f64>,
}

impl CanonicalPolygon {
    pub fn dim(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_semistable(&self) -> bool {
        self.hull_vertices.len() == 2
    }

    pub fn first_slope(&self) -> f64 {
        self.slopes[0]
    }

    pub fn last_slope(&self) -> f64 {
        self.slopes[self.slopes.len() - 1]
    }

    /// `rank,log_minvol` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,log_minvol\n");
        for (k, y) in &self.points {
            out.push_str(&format!("{k},{y}\n"));
        }
        out
    }
}

/// Indices of the lower convex hull of points with strictly increasing `x`;
/// collinear interior points are dropped.
pub fn lower_hull(points: &[(f64, f64)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        while hull.len() >= 2 {
            let (a, b) = (points[hull[hull.len() - 2]], points[hull[hull.len() - 1]]);
            let c = points[i];
            // b is kept only if it lies strictly below the chord a–c.
            let on_chord = a.1 + (c.1 - a.1) * (b.0 - a.0) / (c.0 - a.0);
            if b.1 < on_chord - HULL_TOL {
                break;
            }
            hull.pop();
        }
        hull.push(i);
    }
    hull
}

pub fn canonical_polygon(s: &InnerProduct) -> Result<CanonicalPolygon> {
    canonical_polygon_with(s, &EnumConfig::default())
}

pub fn canonical_polygon_with(s: &InnerProduct, cfg: &EnumConfig) -> Result<CanonicalPolygon> {
    let n = s.dim();
    let mut points = Vec::with_capacity(n + 1);
    let mut minimizers = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (w, vol) = min_volume_sublattice(s, k, cfg)?;
        points.push((k, vol.ln()));
        minimizers.push(w);
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(k, y)| (k as f64, y)).collect();
    let hull_vertices = lower_hull(&xy);
    let slopes: Vec<f64> = hull_vertices
        .windows(2)
        .map(|w| (xy[w[1]].1 - xy[w[0]].1) / (w[1] - w[0]) as f64)
        .collect();
    if slopes.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Internal(
            "hull slopes are not strictly increasing".into(),
        ));
    }
    let filtration: Vec<Sublattice> = hull_vertices
        .iter()
        .map(|&k| minimizers[k].clone())
        .collect();
    for pair in filtration.windows(2) {
        if !pair[1].contains(&pair[0])? {
            return Err(Error::Internal(format!(
                "minimizers of ranks {} and {} are not nested",
                pair[0].rank(),
                pair[1].rank()
            )));
        }
    }
    Ok(CanonicalPolygon {
        points,
        hull_vertices,
        filtration,
        slopes,
    })
}
