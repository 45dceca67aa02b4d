//! Saturated sublattices of `Z^n`, certified enumeration, the canonical
//! polygon and filtration, and the slope functions.

mod enumerate;
mod polygon;
mod slopes;
mod sublattice;

pub use enumerate::{
    hermite_constant, min_volume_sublattice, short_vectors, sublattices_within, EnumConfig, TIE_TOL,
};
pub use polygon::{canonical_polygon, canonical_polygon_with, lower_hull, CanonicalPolygon};
pub use slopes::{
    c_inf, c_inf_with, c_sup, c_sup_with, c_tilde, d_w, d_w_tilde, d_w_tilde_with, d_w_with,
};
pub use sublattice::{
    quotient_form, restricted_form, saturate, vol_w, xi_multivector, xi_of, Sublattice,
};
