//! Geometry of one generalized decorated ideal tetrahedron.
//!
//! A tetrahedron is described by six signed edge lengths, indexed like
//! [`crate::complex::EDGE_VERTICES`]. Opposite edges `ij`, `kh` form a quad
//! with quad length `exp((l_ij + l_kh) / 2)`; the three quad lengths are the
//! sides of a (possibly degenerate) Euclidean triangle whose angles are the
//! dihedral angles of the tetrahedron.

mod lobachevsky;
mod triangle;

use std::f64::consts::PI;

use thiserror::Error;

use crate::complex::{quad_of_edge, QUAD_EDGES};

pub use lobachevsky::lobachevsky;
pub use triangle::satisfies_triangle_inequalities;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TetraError {
    #[error("triangle side lengths must be positive and finite, got {0:?}")]
    NonPositive([f64; 3]),
    #[error("edge lengths are not a decorated tetrahedron (triangle inequalities fail)")]
    NotDecorated,
}

/// Signed edge lengths `l_01, l_02, l_03, l_12, l_13, l_23`. Any vector in
/// `R^6` is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetraLengths(pub [f64; 6]);

/// The three quad lengths, indexed like [`QUAD_EDGES`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadLengths(pub [f64; 3]);

/// Dihedral angle at each local edge; opposite edges carry equal angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetraAngles(pub [f64; 6]);

impl TetraAngles {
    /// Angle of each quad.
    pub fn quads(&self) -> [f64; 3] {
        QUAD_EDGES.map(|[a, _]| self.0[a])
    }
}

/// Angles of the generalized Euclidean triangle with sides `x`, `a_i`
/// opposite `x_i`.
pub fn triangle_angles(x1: f64, x2: f64, x3: f64) -> Result<[f64; 3], TetraError> {
    let x = [x1, x2, x3];
    if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(TetraError::NonPositive(x));
    }
    Ok(triangle::angles(x))
}

/// Half-sums `(l_ij + l_kh) / 2` per quad, i.e. logarithmic quad lengths.
fn log_quad_lengths(l: &TetraLengths) -> [f64; 3] {
    QUAD_EDGES.map(|[a, b]| 0.5 * (l.0[a] + l.0[b]))
}

/// Quad lengths rescaled so the largest is 1. Angles and membership in the
/// decorated region are scale invariant, and this never overflows.
fn normalized_quad_lengths(l: &TetraLengths) -> [f64; 3] {
    let u = log_quad_lengths(l);
    let top = u[0].max(u[1]).max(u[2]);
    u.map(|v| (v - top).exp())
}

pub fn quad_lengths(l: &TetraLengths) -> QuadLengths {
    QuadLengths(log_quad_lengths(l).map(f64::exp))
}

/// True iff `l` is a genuine decorated ideal tetrahedron.
pub fn is_decorated(l: &TetraLengths) -> bool {
    satisfies_triangle_inequalities(normalized_quad_lengths(l))
}

/// Extended dihedral angles, continuous on all of `R^6`.
pub fn dihedral_angles(l: &TetraLengths) -> TetraAngles {
    let a = triangle::angles(normalized_quad_lengths(l));
    TetraAngles(std::array::from_fn(|e| a[quad_of_edge(e)]))
}

/// `½ Σ_{edges} Λ(α)`; the hyperbolic volume inside the decorated region,
/// zero outside it.
pub fn tetra_volume(l: &TetraLengths) -> f64 {
    volume_from_angles(&dihedral_angles(l))
}

pub(crate) fn volume_from_angles(a: &TetraAngles) -> f64 {
    a.quads().iter().map(|&x| lobachevsky(x)).sum()
}

/// `cov(l) = 2 vol(l) + Σ α_ij l_ij`.
pub fn tetra_covolume(l: &TetraLengths) -> f64 {
    let a = dihedral_angles(l);
    2.0 * volume_from_angles(&a) + a.0.iter().zip(&l.0).map(|(x, y)| x * y).sum::<f64>()
}

/// Gradient of the co-volume, which is the vector of dihedral angles.
pub fn tetra_cov_gradient(l: &TetraLengths) -> [f64; 6] {
    dihedral_angles(l).0
}

/// `∂α_e/∂l_f`, which is also the Hessian of the co-volume. Only defined
/// strictly inside the decorated region, where the angles are smooth.
pub fn tetra_angle_jacobian(l: &TetraLengths) -> Result<[[f64; 6]; 6], TetraError> {
    let x = normalized_quad_lengths(l);
    if !satisfies_triangle_inequalities(x) {
        return Err(TetraError::NotDecorated);
    }
    let m = triangle::log_jacobian(x);
    Ok(std::array::from_fn(|e| {
        std::array::from_fn(|f| 0.5 * m[quad_of_edge(e)][quad_of_edge(f)])
    }))
}

/// `(w + l)_ij = l_ij + w_i + w_j` for `w ∈ R^4`.
pub fn act_on_tetra(w: [f64; 4], l: &TetraLengths) -> TetraLengths {
    let mut out = l.0;
    for (k, [i, j]) in crate::complex::EDGE_VERTICES.iter().enumerate() {
        out[k] += w[*i] + w[*j];
    }
    TetraLengths(out)
}

/// Volume of the regular ideal tetrahedron, `3 Λ(π/3)`.
pub fn regular_ideal_volume() -> f64 {
    3.0 * lobachevsky(PI / 3.0)
}
