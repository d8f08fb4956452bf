//! Global quantities of a generalized decorated metric on a complex.
//!
//! A metric is a vector `l ∈ R^E` of signed lengths, one per edge class.
//! Every tetrahedron sees the restriction of `l` to its six local edges.
//! Cone angles sum the dihedral angles of all local edges in a class and
//! the curvature of an edge is `2π` minus its cone angle.
//!
//! The co-volume `cov = Σ_σ cov_σ` is C¹ and convex on `R^E` with gradient
//! equal to the cone angles, so `H̃(l) = cov(l) - 2π Σ l_e` has gradient
//! `-K̃(l)` and the Ricci flow is its negative gradient flow.

use std::f64::consts::PI;
use std::ops::Deref;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::complex::Complex;
use crate::tetra_kernel::{
    dihedral_angles, is_decorated, tetra_angle_jacobian, volume_from_angles, TetraAngles,
    TetraLengths,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error("expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("metric is outside the decorated region (tetrahedron {tet} is degenerate)")]
    NotDecorated { tet: usize },
}

fn check_len(expected: usize, actual: usize) -> Result<(), CurvatureError> {
    if expected == actual {
        Ok(())
    } else {
        Err(CurvatureError::DimensionMismatch { expected, actual })
    }
}

/// An edge-length vector together with whether it is a genuine decorated
/// metric (every tetrahedron satisfies the triangle inequalities).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    values: Vec<f64>,
    in_decorated: bool,
}

impl MetricVector {
    pub fn new(c: &Complex, values: Vec<f64>) -> Result<Self, CurvatureError> {
        check_len(c.edge_count(), values.len())?;
        let in_decorated = first_degenerate_tet(c, &values).is_none();
        Ok(Self {
            values,
            in_decorated,
        })
    }

    pub fn zeros(c: &Complex) -> Self {
        Self::new(c, vec![0.0; c.edge_count()]).expect("length matches")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// True iff the metric lies in the decorated region.
    pub fn in_decorated(&self) -> bool {
        self.in_decorated
    }
}

impl Deref for MetricVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

fn tet_lengths(c: &Complex, tet: usize, l: &[f64]) -> TetraLengths {
    TetraLengths(c.restrict(tet, l))
}

fn first_degenerate_tet(c: &Complex, l: &[f64]) -> Option<usize> {
    (0..c.tet_count()).find(|&t| !is_decorated(&tet_lengths(c, t, l)))
}

/// True iff every tetrahedron of `l` is a genuine decorated tetrahedron.
pub fn is_decorated_metric(c: &Complex, l: &[f64]) -> bool {
    first_degenerate_tet(c, l).is_none()
}

/// Per-tetrahedron dihedral angles induced by a metric, with cone angles.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleAssignment {
    pub tets: Vec<TetraAngles>,
    /// `k_l(e)`: total dihedral angle around each edge class.
    pub cone_angles: Vec<f64>,
}

impl AngleAssignment {
    /// Angle of quad `q` (0, 1 or 2) of `tet`.
    pub fn quad_angle(&self, tet: usize, q: usize) -> f64 {
        self.tets[tet].quads()[q]
    }
}

pub fn angle_assignment(c: &Complex, l: &[f64]) -> AngleAssignment {
    assert_eq!(
        l.len(),
        c.edge_count(),
        "metric length must equal edge count"
    );
    let mut cone_angles = vec![0.0; c.edge_count()];
    let tets = (0..c.tet_count())
        .map(|t| {
            let a = dihedral_angles(&tet_lengths(c, t, l));
            for (k, &e) in c.tet_edges(t).iter().enumerate() {
                cone_angles[e] += a.0[k];
            }
            a
        })
        .collect();
    AngleAssignment { tets, cone_angles }
}

/// Generalized Ricci curvature `K̃_e = 2π - k_l(e)`, with the cone angles.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    pub values: Vec<f64>,
    pub cone_angles: Vec<f64>,
}

impl Curvature {
    fn from_cone_angles(cone_angles: Vec<f64>) -> Self {
        let values = cone_angles.iter().map(|k| 2.0 * PI - k).collect();
        Self {
            values,
            cone_angles,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

pub fn ricci_curvature(c: &Complex, l: &[f64]) -> Curvature {
    Curvature::from_cone_angles(angle_assignment(c, l).cone_angles)
}

/// Everything the flows and reports need from one metric, computed from a
/// single pass over the tetrahedra.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub curvature: Curvature,
    pub volume: f64,
    pub covolume: f64,
    /// `H̃(l)`.
    pub energy: f64,
    pub in_decorated: bool,
}

pub fn evaluate(c: &Complex, l: &[f64]) -> Evaluation {
    let assignment = angle_assignment(c, l);
    let volume: f64 = assignment.tets.iter().map(volume_from_angles).sum();
    let covolume = 2.0 * volume + dot(l, &assignment.cone_angles);
    let energy = covolume - 2.0 * PI * l.iter().sum::<f64>();
    Evaluation {
        curvature: Curvature::from_cone_angles(assignment.cone_angles),
        volume,
        covolume,
        energy,
        in_decorated: is_decorated_metric(c, l),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of tetrahedron volumes; zero where every tetrahedron is degenerate.
pub fn total_volume(c: &Complex, l: &[f64]) -> f64 {
    (0..c.tet_count())
        .map(|t| volume_from_angles(&dihedral_angles(&tet_lengths(c, t, l))))
        .sum()
}

/// Sum of tetrahedron co-volumes.
pub fn total_covolume(c: &Complex, l: &[f64]) -> f64 {
    (0..c.tet_count())
        .map(|t| crate::tetra_kernel::tetra_covolume(&tet_lengths(c, t, l)))
        .sum()
}

/// `H̃(l) = cov(l) - 2π Σ_e l_e`.
pub fn energy(c: &Complex, l: &[f64]) -> f64 {
    total_covolume(c, l) - 2.0 * PI * l.iter().sum::<f64>()
}

/// `F_{l0}(l) = cov(l) - k_{l0} · l`.
pub fn f_functional(c: &Complex, l0: &[f64], l: &[f64]) -> f64 {
    let k0 = ricci_curvature(c, l0).cone_angles;
    total_covolume(c, l) - dot(&k0, l)
}

/// `cov(l) - (2π - K̄) · l`, whose gradient is `K̄ - K̃(l)`. With `K̄ = 0` this
/// is `H̃`.
pub fn prescribed_energy(c: &Complex, target: &[f64], l: &[f64]) -> f64 {
    assert_eq!(target.len(), c.edge_count());
    let linear: f64 = target
        .iter()
        .zip(l)
        .map(|(kbar, x)| (2.0 * PI - kbar) * x)
        .sum();
    total_covolume(c, l) - linear
}

/// Hessian of the co-volume, `Σ_σ Pσᵀ Hσ Pσ`, assembled from per-tetrahedron
/// angle Jacobians. Refused outside the decorated region.
pub fn covolume_hessian(c: &Complex, l: &[f64]) -> Result<DMatrix<f64>, CurvatureError> {
    check_len(c.edge_count(), l.len())?;
    let m = c.edge_count();
    let mut hess = DMatrix::zeros(m, m);
    for t in 0..c.tet_count() {
        let jac = tetra_angle_jacobian(&tet_lengths(c, t, l))
            .map_err(|_| CurvatureError::NotDecorated { tet: t })?;
        let edges = c.tet_edges(t);
        for (a, &ea) in edges.iter().enumerate() {
            for (b, &eb) in edges.iter().enumerate() {
                hess[(ea, eb)] += jac[a][b];
            }
        }
    }
    Ok(hess)
}

/// `∂K̃/∂l = -Hess(cov)`: symmetric negative semidefinite, with kernel the
/// column space of the incidence matrix.
pub fn curvature_jacobian(c: &Complex, l: &[f64]) -> Result<DMatrix<f64>, CurvatureError> {
    covolume_hessian(c, l).map(|h| -h)
}

/// Vertex action: `(w + l)_e = l_e + w(e₊) + w(e₋)`.
pub fn act(c: &Complex, w: &[f64], l: &[f64]) -> Result<Vec<f64>, CurvatureError> {
    check_len(c.vertex_count(), w.len())?;
    check_len(c.edge_count(), l.len())?;
    let shift = c.incidence().apply(w);
    Ok(l.iter().zip(shift).map(|(a, b)| a + b).collect())
}

/// Orthogonal projection onto the complement of the action orbit directions.
pub fn project_quotient(c: &Complex, l: &[f64]) -> Vec<f64> {
    assert_eq!(l.len(), c.edge_count());
    c.gauge().project_quotient(l)
}
