//! Curvature flows on generalized decorated metrics.
//!
//! Three vector fields are supported:
//!
//! - Ricci: `dl/dt = K̃(l)`, the negative gradient flow of `H̃`;
//! - prescribed: `dl/dt = K̃(l) - K̄`, the negative gradient flow of
//!   `cov(l) - (2π - K̄)·l`;
//! - Calabi: `dl/dt = Δ K̃(l)` with `Δ = -∂K̃/∂l`, the negative gradient flow
//!   of `‖K̃‖²/2`. It needs the Jacobian, so it is confined to the decorated
//!   region.
//!
//! A run stops when the curvature residual falls below `tol_converge`
//! (converged), when the metric leaves the `l_max` ball while the residual
//! has stayed above `√tol_converge` for a whole window (diverging), or at
//! `t_max` (undetermined). The divergence verdict is numerical evidence,
//! not a proof.

mod integrator;
mod rate;

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::complex::Complex;
use crate::curvature::{covolume_hessian, evaluate, ricci_curvature, sup_norm, CurvatureError};

pub use rate::{fit_rate, RateError, RateFit, MIN_TAIL_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Ricci,
    Prescribed,
    Calabi,
}

impl FlowKind {
    pub fn name(self) -> &'static str {
        match self {
            FlowKind::Ricci => "ricci",
            FlowKind::Prescribed => "prescribed",
            FlowKind::Calabi => "calabi",
        }
    }
}

impl std::str::FromStr for FlowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ricci" => Ok(FlowKind::Ricci),
            "prescribed" => Ok(FlowKind::Prescribed),
            "calabi" => Ok(FlowKind::Calabi),
            other => Err(format!("unknown flow kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub kind: FlowKind,
    /// `K̄`, required by the prescribed flow.
    pub target_curvature: Option<Vec<f64>>,
    /// Fixed step, or the initial step when adaptive.
    pub step: f64,
    pub adaptive: bool,
    /// Absolute local error tolerance of the adaptive pair.
    pub adaptive_tol: f64,
    /// Upper bound on adaptive steps. Near a stable equilibrium the error
    /// estimate alone lets the step grow to the stability edge, where the
    /// iteration stalls at the tolerance level instead of converging.
    pub max_step: f64,
    pub t_max: f64,
    /// Sup-norm threshold on the curvature residual.
    pub tol_converge: f64,
    /// Trailing window (time units) for the divergence test.
    pub window: f64,
    /// Divergence radius in the sup norm.
    pub l_max: f64,
    pub record_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            kind: FlowKind::Ricci,
            target_curvature: None,
            step: 0.01,
            adaptive: false,
            adaptive_tol: 1e-10,
            max_step: 0.1,
            t_max: 1000.0,
            tol_converge: 1e-10,
            window: 10.0,
            l_max: 1e3,
            record_every: 1,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self, c: &Complex) -> Result<(), FlowError> {
        let bad = |msg: String| Err(FlowError::InvalidConfig(msg));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.tol_converge > 0.0) {
            return bad(format!(
                "tol_converge must be positive, got {}",
                self.tol_converge
            ));
        }
        if !(self.t_max > 0.0) || !(self.window > 0.0) || !(self.l_max > 0.0) {
            return bad("t_max, window and l_max must be positive".into());
        }
        if self.adaptive && !(self.adaptive_tol > 0.0 && self.max_step >= self.step) {
            return bad("adaptive tolerance must be positive and max_step at least step".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        match (&self.kind, &self.target_curvature) {
            (FlowKind::Prescribed, None) => bad("prescribed flow needs a target curvature".into()),
            (FlowKind::Prescribed, Some(k)) if k.len() != c.edge_count() => bad(format!(
                "target curvature has length {}, expected {}",
                k.len(),
                c.edge_count()
            )),
            _ => Ok(()),
        }
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub l: Vec<f64>,
    /// `K̃(l)`.
    pub curvature: Vec<f64>,
    /// `H̃(l)`.
    pub energy: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Converged { limit: Vec<f64> },
    Diverging,
    Undetermined,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Converged { .. } => "converged",
            Classification::Diverging => "diverging",
            Classification::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub kind: FlowKind,
    pub target: Option<Vec<f64>>,
    pub samples: Vec<Sample>,
    pub classification: Classification,
    pub rate: Option<RateFit>,
    pub steps: usize,
}

impl FlowTrace {
    /// Residual the flow drives to zero: `K̃ - K̄` for the prescribed flow,
    /// `K̃` otherwise.
    pub fn residual(&self, s: &Sample) -> Vec<f64> {
        residual(&s.curvature, self.target.as_deref())
    }

    pub fn residual_norm(&self, s: &Sample) -> f64 {
        self.residual(s).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("traces always hold a sample")
    }
}

fn residual(curvature: &[f64], target: Option<&[f64]>) -> Vec<f64> {
    match target {
        Some(kbar) => curvature.iter().zip(kbar).map(|(k, b)| k - b).collect(),
        None => curvature.to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// The Calabi flow needs the curvature Jacobian, which only exists in
    /// the decorated region.
    LeftDecoratedRegion,
    NonFinite,
    StepUnderflow,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FailureReason::LeftDecoratedRegion => "left the decorated region",
            FailureReason::NonFinite => "non-finite state",
            FailureReason::StepUnderflow => "adaptive step size underflow",
        })
    }
}

/// An aborted run with everything recorded up to the last good state.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowFailure {
    pub reason: FailureReason,
    pub t: f64,
    /// Samples up to and including the last good state.
    pub samples: Vec<Sample>,
}

impl FlowFailure {
    pub fn last_good(&self) -> &Sample {
        self.samples
            .last()
            .expect("failures keep the last good sample")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("initial metric has length {actual}, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("integrator failure at t={}: {}", .0.t, .0.reason)]
    Failed(Box<FlowFailure>),
}

/// Evaluation of the vector field failed at some stage point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FieldError(FailureReason);

fn velocity(c: &Complex, cfg: &FlowConfig, l: &[f64]) -> Result<Vec<f64>, FieldError> {
    if l.iter().any(|x| !x.is_finite()) {
        return Err(FieldError(FailureReason::NonFinite));
    }
    let k = ricci_curvature(c, l).values;
    let v = match cfg.kind {
        FlowKind::Ricci => k,
        FlowKind::Prescribed => residual(&k, cfg.target_curvature.as_deref()),
        FlowKind::Calabi => {
            let lap = covolume_hessian(c, l).map_err(|e| match e {
                CurvatureError::NotDecorated { .. } => {
                    FieldError(FailureReason::LeftDecoratedRegion)
                }
                CurvatureError::DimensionMismatch { .. } => unreachable!("lengths checked"),
            })?;
            (lap * DVector::from_vec(k)).iter().copied().collect()
        }
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FieldError(FailureReason::NonFinite));
    }
    Ok(v)
}

/// The flow's vector field at `l`.
pub fn vector_field(c: &Complex, cfg: &FlowConfig, l: &[f64]) -> Result<Vec<f64>, FailureReason> {
    velocity(c, cfg, l).map_err(|e| e.0)
}

/// One fixed-size fourth-order Runge–Kutta step of the configured flow.
pub fn step(c: &Complex, l: &[f64], cfg: &FlowConfig) -> Result<Vec<f64>, FlowError> {
    cfg.validate(c)?;
    check_len(c, l)?;
    integrator::rk4_step(|y| velocity(c, cfg, y), l, cfg.step).map_err(|e| {
        FlowError::Failed(Box::new(FlowFailure {
            reason: e.0,
            t: 0.0,
            samples: vec![sample(c, 0.0, l)],
        }))
    })
}

fn check_len(c: &Complex, l: &[f64]) -> Result<(), FlowError> {
    if l.len() != c.edge_count() {
        return Err(FlowError::DimensionMismatch {
            expected: c.edge_count(),
            actual: l.len(),
        });
    }
    Ok(())
}

fn sample(c: &Complex, t: f64, l: &[f64]) -> Sample {
    let ev = evaluate(c, l);
    Sample {
        t,
        l: l.to_vec(),
        curvature: ev.curvature.values,
        energy: ev.energy,
        volume: ev.volume,
    }
}

/// Advances time by one accepted step, adaptive or fixed.
struct Stepper<'a> {
    c: &'a Complex,
    cfg: &'a FlowConfig,
    h: f64,
}

impl Stepper<'_> {
    fn advance(&mut self, l: &[f64]) -> Result<(Vec<f64>, f64), FailureReason> {
        let field = |y: &[f64]| velocity(self.c, self.cfg, y);
        if !self.cfg.adaptive {
            let next = integrator::rk4_step(field, l, self.h).map_err(|e| e.0)?;
            return Ok((next, self.h));
        }
        let h_min = 1e-12 * self.cfg.step;
        loop {
            let (next, err) = integrator::dopri_step(field, l, self.h).map_err(|e| e.0)?;
            let tol = self.cfg.adaptive_tol;
            let taken = self.h;
            self.h = integrator::next_step_size(self.h, err, tol).min(self.cfg.max_step);
            if err <= tol {
                return Ok((next, taken));
            }
            if self.h < h_min {
                return Err(FailureReason::StepUnderflow);
            }
        }
    }
}

/// Integrates the configured flow from `l0` until it is classified.
pub fn run(c: &Complex, l0: &[f64], cfg: &FlowConfig) -> Result<FlowTrace, FlowError> {
    cfg.validate(c)?;
    check_len(c, l0)?;
    let target = match cfg.kind {
        FlowKind::Prescribed => cfg.target_curvature.clone(),
        _ => None,
    };
    let fail = |reason, t, samples: Vec<Sample>| {
        FlowError::Failed(Box::new(FlowFailure { reason, t, samples }))
    };

    let mut stepper = Stepper {
        c,
        cfg,
        h: cfg.step,
    };
    let mut l = l0.to_vec();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut samples = Vec::new();
    let mut window: VecDeque<(f64, f64)> = VecDeque::new();

    let classification = loop {
        let current = sample(c, t, &l);
        if !current.energy.is_finite() || current.curvature.iter().any(|x| !x.is_finite()) {
            return Err(fail(FailureReason::NonFinite, t, samples));
        }
        let r = sup_norm(&residual(&current.curvature, target.as_deref()));
        let l_norm = sup_norm(&l);
        let recorded = steps % cfg.record_every == 0;

        let verdict = if r < cfg.tol_converge {
            Some(Classification::Converged { limit: l.clone() })
        } else {
            window.push_back((t, r));
            while window.front().is_some_and(|&(s, _)| s < t - cfg.window) {
                window.pop_front();
            }
            let floor = window.iter().fold(f64::INFINITY, |acc, w| acc.min(w.1));
            if l_norm > cfg.l_max && t >= cfg.window && floor > cfg.tol_converge.sqrt() {
                Some(Classification::Diverging)
            } else if t >= cfg.t_max {
                Some(Classification::Undetermined)
            } else {
                None
            }
        };
        if recorded || verdict.is_some() {
            samples.push(current);
        }
        if let Some(v) = verdict {
            break v;
        }

        match stepper.advance(&l) {
            Ok((next, h)) => {
                l = next;
                t += h;
                steps += 1;
            }
            Err(reason) => {
                if !recorded {
                    samples.push(sample(c, t, &l));
                }
                return Err(fail(reason, t, samples));
            }
        }
    };

    let mut trace = FlowTrace {
        kind: cfg.kind,
        target,
        samples,
        classification,
        rate: None,
        steps,
    };
    trace.rate = fit_rate(&trace).ok();
    Ok(trace)
}

/// Integrates for exactly `horizon` time units with fixed steps, without
/// any stopping test. Returns `(t, l)` every `record_every` steps.
pub fn integrate(
    c: &Complex,
    l0: &[f64],
    cfg: &FlowConfig,
    horizon: f64,
) -> Result<Vec<(f64, Vec<f64>)>, FlowError> {
    cfg.validate(c)?;
    check_len(c, l0)?;
    let n = (horizon / cfg.step).round() as usize;
    let mut l = l0.to_vec();
    let mut out = vec![(0.0, l.clone())];
    for i in 1..=n {
        l = integrator::rk4_step(|y| velocity(c, cfg, y), &l, cfg.step).map_err(|e| {
            FlowError::Failed(Box::new(FlowFailure {
                reason: e.0,
                t: (i - 1) as f64 * cfg.step,
                samples: vec![sample(c, (i - 1) as f64 * cfg.step, &out.last().unwrap().1)],
            }))
        })?;
        if i % cfg.record_every == 0 || i == n {
            out.push((i as f64 * cfg.step, l.clone()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub initial_separation: f64,
    /// `sup_t ‖l(t) - l̂(t)‖₂` over the sampled times.
    pub max_separation: f64,
    pub horizon: f64,
}

/// Integrates `l0` and `l0 + ε v` (unit `v` drawn from `seed`) over
/// `[0, cfg.t_max]` and reports the largest separation. Gradient flows of
/// convex functions never expand distances, so the report should stay at
/// `ε` up to integrator error.
pub fn uniqueness_check(
    c: &Complex,
    l0: &[f64],
    cfg: &FlowConfig,
    epsilon: f64,
    seed: u64,
) -> Result<UniquenessReport, FlowError> {
    check_len(c, l0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..l0.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let perturbed: Vec<f64> = l0.iter().zip(&v).map(|(a, b)| a + epsilon * b).collect();

    let horizon = cfg.t_max;
    let a = integrate(c, l0, cfg, horizon)?;
    let b = integrate(c, &perturbed, cfg, horizon)?;
    let dist = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let initial_separation = dist(l0, &perturbed);
    let max_separation = a
        .iter()
        .zip(&b)
        .map(|((_, x), (_, y))| dist(x, y))
        .fold(0.0, f64::max);
    Ok(UniquenessReport {
        initial_separation,
        max_separation,
        horizon,
    })
}
