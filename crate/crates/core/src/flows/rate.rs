use thiserror::Error;

use super::{Classification, FlowTrace};

/// Minimum number of terminal-phase samples for a rate fit.
pub const MIN_TAIL_SAMPLES: usize = 20;

/// Exponential decay fit `‖r(t)‖ ≈ C e^{-λ t}` of the curvature residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub lambda: f64,
    pub log_c: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("trace did not converge")]
    NotConverged,
    #[error("only {0} samples in the terminal phase (need {MIN_TAIL_SAMPLES})")]
    TooFewSamples(usize),
    #[error("non-decaying tail (fitted rate {lambda})")]
    NonDecaying { lambda: f64, residual: f64 },
}

/// Least-squares fit of `log ‖r‖` against `t` over the terminal phase.
///
/// The terminal phase starts at the first sample whose residual norm has
/// dropped to 1% of the largest one; if that never happens it is the
/// trailing half of the trace.
pub fn fit_rate(trace: &FlowTrace) -> Result<RateFit, RateError> {
    if !matches!(trace.classification, Classification::Converged { .. }) {
        return Err(RateError::NotConverged);
    }
    let points: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .map(|s| (s.t, trace.residual_norm(s)))
        .collect();
    let peak = points.iter().fold(0.0f64, |acc, p| acc.max(p.1));
    let start = points
        .iter()
        .position(|p| p.1 <= 1e-2 * peak)
        .unwrap_or(points.len() / 2);
    let tail: Vec<(f64, f64)> = points[start..]
        .iter()
        .filter(|p| p.1 > 0.0 && p.1.is_finite())
        .map(|&(t, r)| (t, r.ln()))
        .collect();
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(RateError::TooFewSamples(tail.len()));
    }

    let n = tail.len() as f64;
    let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = mean_y - slope * mean_t;
    let residual = (tail
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let lambda = -slope;
    // A decay below 1e-12 per unit time is indistinguishable from flat.
    if lambda <= 1e-12 {
        return Err(RateError::NonDecaying { lambda, residual });
    }
    Ok(RateFit {
        lambda,
        log_c: intercept,
        residual,
        samples: tail.len(),
    })
}
