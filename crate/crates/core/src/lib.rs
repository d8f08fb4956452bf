//! Extended combinatorial Ricci flow on decorated ideal triangulations.
//!
//! The crate builds the combinatorics of a closed pseudo 3-manifold
//! triangulation ([`complex`]), evaluates per-tetrahedron geometry of
//! generalized decorated ideal tetrahedra ([`tetra_kernel`]), assembles
//! curvature and the convex co-volume energy ([`curvature`]), integrates
//! curvature flows ([`flows`]) and minimizes the energy directly
//! ([`solver`]).

pub mod complex;
pub mod curvature;
pub mod flows;
pub mod solver;
pub mod tetra_kernel;
