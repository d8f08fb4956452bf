//! Direct minimization of the co-volume energy.
//!
//! Minimizes `E(l) = cov(l) - (2π - K̄)·l`, whose gradient is `K̄ - K̃(l)`;
//! `K̄ = 0` gives `H̃`. Critical points are exactly the metrics with
//! curvature `K̄`, and `E` is convex, so any critical point is a minimizer.
//!
//! Along the action directions `col(B)` the gradient is the constant
//! `P_B (π·c - ...)`: the cone angles satisfy `Bᵀ k_l = π · corners` for
//! every `l`. If that constant is zero the energy is invariant under the
//! action and iterates are kept in the quotient; otherwise the energy is
//! unbounded below along the orbit and no minimizer exists.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DVector};
use thiserror::Error;

use crate::complex::Complex;
use crate::curvature::{
    covolume_hessian, evaluate, project_quotient, ricci_curvature, sup_norm, total_covolume,
};

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C1: f64 = 1e-4;

/// Relative size below which energy differences are rounding noise.
const ROUNDING_LEVEL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once `‖K̃ - K̄‖∞ < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Descent below this energy counts as unbounded.
    pub energy_floor: f64,
    /// Iterates beyond this sup norm count as escaping to infinity.
    pub norm_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 500,
            energy_floor: -1e8,
            norm_limit: 1e6,
        }
    }
}

/// What the solver saw on the way to concluding there is no minimizer.
/// This is evidence, not a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct NoMinimizerEvidence {
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    /// Smallest residual sup-norm seen.
    pub gradient_floor: f64,
    /// Norm of the (constant) energy gradient along the action orbit.
    pub orbit_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Found { limit: Vec<f64>, in_decorated: bool },
    NoMinimizer(NoMinimizerEvidence),
    MaxIter,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Found { .. } => "found",
            SolveStatus::NoMinimizer(_) => "no_minimizer",
            SolveStatus::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub iterations: usize,
    pub newton_steps: usize,
    /// Final `‖K̃ - K̄‖∞`.
    pub gradient_norm: f64,
    /// `‖K̃ - K̄‖∞` at each iterate, starting point included.
    pub gradient_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub last: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("input is not a zero-curvature metric (‖K̃‖∞ = {0:e})")]
    NotFlat(f64),
}

/// Minimizes `H̃` starting from `l0`.
pub fn minimize_energy(
    c: &Complex,
    l0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveResult, SolverError> {
    let cfg = SolverConfig {
        tol,
        max_iter,
        ..SolverConfig::default()
    };
    minimize(c, l0, None, &cfg)
}

/// Minimizes `cov(l) - (2π - K̄)·l`, i.e. solves `K̃(l) = K̄` when `target`
/// is given, `K̃(l) = 0` otherwise.
pub fn minimize(
    c: &Complex,
    l0: &[f64],
    target: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    let m = c.edge_count();
    for len in [Some(l0.len()), target.map(<[f64]>::len)]
        .into_iter()
        .flatten()
    {
        if len != m {
            return Err(SolverError::DimensionMismatch {
                expected: m,
                actual: len,
            });
        }
    }
    let kbar: Vec<f64> = match target {
        Some(t) => t.iter().map(|k| 2.0 * PI - k).collect(),
        None => vec![2.0 * PI; m],
    };
    let objective = |l: &[f64]| total_covolume(c, l) - dot(&kbar, l);
    let residual = |l: &[f64]| -> Vec<f64> {
        let k = ricci_curvature(c, l).cone_angles;
        kbar.iter().zip(k).map(|(a, b)| a - b).collect()
    };

    let residual_norm = |l: &[f64]| sup_norm(&residual(l));

    let gauge = c.gauge();
    let r0 = residual(l0);
    let orbit_grad = gauge.project_range(&r0);
    let orbit_slope = orbit_grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = 1.0 + sup_norm(&kbar);
    let obstructed = sup_norm(&orbit_grad) > 1e-9 * scale;

    let mut l = if obstructed {
        l0.to_vec()
    } else {
        project_quotient(c, l0)
    };
    let basis = gauge.quotient_basis();
    let mut energy = objective(&l);
    let mut r = residual(&l);
    let mut gradient_history = vec![sup_norm(&r)];
    let mut energy_history = vec![energy];
    let mut norms = vec![sup_norm(&l)];
    let mut newton_steps = 0;
    let mut grad_step = 1.0;

    let finish = |status, iterations, newton_steps, r: &[f64], gh, eh, last| SolveResult {
        status,
        iterations,
        newton_steps,
        gradient_norm: sup_norm(r),
        gradient_history: gh,
        energy_history: eh,
        last,
    };

    for iter in 0..cfg.max_iter {
        if sup_norm(&r) < cfg.tol {
            let in_decorated = evaluate(c, &l).in_decorated;
            return Ok(finish(
                SolveStatus::Found {
                    limit: l.clone(),
                    in_decorated,
                },
                iter,
                newton_steps,
                &r,
                gradient_history,
                energy_history,
                l,
            ));
        }
        // r = -∇E.
        let descent_gradient: Vec<f64> = if obstructed {
            r.clone()
        } else {
            project_quotient(c, &r)
        };

        let newton = if obstructed {
            None
        } else {
            newton_direction(c, &l, basis, &r)
        };

        let mut accepted = None;
        if let Some(d) = &newton {
            accepted = line_search(
                &objective,
                &residual_norm,
                sup_norm(&r),
                &l,
                energy,
                d,
                dot(&r, d),
                1.0,
                30,
            );
            if accepted.is_some() {
                newton_steps += 1;
            }
        }
        if accepted.is_none() {
            let slope = dot(&r, &descent_gradient);
            accepted = line_search(
                &objective,
                &residual_norm,
                sup_norm(&r),
                &l,
                energy,
                &descent_gradient,
                slope,
                grad_step,
                60,
            );
            if let Some((_, _, alpha)) = accepted {
                grad_step = (2.0 * alpha).min(1e6);
            }
        }
        let Some((next, next_energy, _)) = accepted else {
            break;
        };

        l = if obstructed {
            next
        } else {
            project_quotient(c, &next)
        };
        energy = objective(&l);
        debug_assert!(energy <= next_energy + 1e-9 * (1.0 + next_energy.abs()));
        r = residual(&l);
        gradient_history.push(sup_norm(&r));
        energy_history.push(energy);
        norms.push(sup_norm(&l));

        if energy < cfg.energy_floor || sup_norm(&l) > cfg.norm_limit {
            let gradient_floor = gradient_history
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            return Ok(finish(
                SolveStatus::NoMinimizer(NoMinimizerEvidence {
                    norms,
                    energies: energy_history.clone(),
                    gradient_floor,
                    orbit_slope,
                }),
                iter + 1,
                newton_steps,
                &r,
                gradient_history,
                energy_history,
                l,
            ));
        }
    }
    let iterations = gradient_history.len() - 1;
    Ok(finish(
        SolveStatus::MaxIter,
        iterations,
        newton_steps,
        &r,
        gradient_history,
        energy_history,
        l,
    ))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Newton direction in the quotient, if the iterate is decorated and the
/// restricted Hessian admits a Cholesky factorization.
fn newton_direction(
    c: &Complex,
    l: &[f64],
    basis: &nalgebra::DMatrix<f64>,
    r: &[f64],
) -> Option<Vec<f64>> {
    let hess = covolume_hessian(c, l).ok()?;
    let restricted = basis.transpose() * &hess * basis;
    let chol = Cholesky::new(restricted)?;
    // Newton: H d = -∇E = r.
    let rq = basis.transpose() * DVector::from_column_slice(r);
    let dq = chol.solve(&rq);
    let d = basis * dq;
    let d: Vec<f64> = d.iter().copied().collect();
    d.iter().all(|x| x.is_finite()).then_some(d)
}

/// Backtracking Armijo search along `d`; `slope` is `-∇E·d` (positive for
/// descent). Returns the new point, its energy and the accepted step.
///
/// Once the predicted decrease drops below the rounding level of the energy,
/// the Armijo test can no longer be decided; a trial is then accepted if the
/// energy does not rise beyond that level and the residual strictly shrinks.
#[allow(clippy::too_many_arguments)]
fn line_search(
    objective: &impl Fn(&[f64]) -> f64,
    residual_norm: &impl Fn(&[f64]) -> f64,
    current_residual: f64,
    l: &[f64],
    energy: f64,
    d: &[f64],
    slope: f64,
    initial: f64,
    max_halvings: usize,
) -> Option<(Vec<f64>, f64, f64)> {
    if !(slope > 0.0) {
        return None;
    }
    let mut alpha = initial;
    for _ in 0..max_halvings {
        let trial: Vec<f64> = l.iter().zip(d).map(|(x, y)| x + alpha * y).collect();
        let e = objective(&trial);
        let decrease = ARMIJO_C1 * alpha * slope;
        let noise = ROUNDING_LEVEL * (1.0 + energy.abs());
        if e <= energy - decrease {
            return Some((trial, e, alpha));
        }
        if decrease < noise && e <= energy + noise && residual_norm(&trial) < current_residual {
            return Some((trial, e, alpha));
        }
        alpha *= 0.5;
    }
    None
}

/// True iff the two zero-curvature metrics project to the same point of
/// the quotient, within `10 · tol`.
pub fn cross_validate(
    c: &Complex,
    flow_limit: &[f64],
    solver_limit: &[f64],
    tol: f64,
) -> Result<bool, SolverError> {
    let m = c.edge_count();
    for l in [flow_limit, solver_limit] {
        if l.len() != m {
            return Err(SolverError::DimensionMismatch {
                expected: m,
                actual: l.len(),
            });
        }
        let k = ricci_curvature(c, l).sup_norm();
        if !(k < tol) {
            return Err(SolverError::NotFlat(k));
        }
    }
    let a = project_quotient(c, flow_limit);
    let b = project_quotient(c, solver_limit);
    let gap = a
        .iter()
        .zip(&b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    Ok(gap <= 10.0 * tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, parse_complex};

    fn load(src: &str) -> Complex {
        build_complex(&parse_complex(src).unwrap()).unwrap()
    }

    fn figure_eight() -> Complex {
        load(include_str!("../../../data/figure8.tri"))
    }

    #[test]
    fn figure_eight_from_zero() {
        let c = figure_eight();
        let res = minimize_energy(&c, &[0.0, 0.0], 1e-12, 100).unwrap();
        let SolveStatus::Found {
            limit,
            in_decorated,
        } = &res.status
        else {
            panic!("expected Found, got {:?}", res.status);
        };
        assert!(in_decorated);
        let p = project_quotient(&c, limit);
        assert!(p.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn energy_decreases_monotonically() {
        let c = figure_eight();
        let res = minimize_energy(&c, &[1.7, -2.4], 1e-12, 200).unwrap();
        assert!(matches!(res.status, SolveStatus::Found { .. }));
        for w in res.energy_history.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "{w:?}");
        }
    }

    #[test]
    fn dimension_errors() {
        let c = figure_eight();
        assert!(minimize_energy(&c, &[0.0], 1e-12, 10).is_err());
        assert!(matches!(
            cross_validate(&c, &[1.0, 1.0], &[1.0], 1e-10),
            Err(SolverError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cross_validate_ignores_action() {
        let c = figure_eight();
        assert!(cross_validate(&c, &[1.0, 1.0], &[-3.0, -3.0], 1e-10).unwrap());
        assert!(matches!(
            cross_validate(&c, &[1.0, 1.0], &[0.5, -0.5], 1e-10),
            Err(SolverError::NotFlat(_))
        ));
    }
}
