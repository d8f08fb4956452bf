//! Lobachevsky function `Λ(θ) = -∫₀^θ ln|2 sin t| dt = ½ Σ sin(2nθ)/n²`.
//!
//! After reducing `θ` into `[-π/2, π/2]`, the logarithmic singularity at
//! the origin is split off in closed form and the remainder is a power
//! series in `(θ/π)²` with ratio at most 1/4:
//!
//! `Λ(θ) = θ - θ ln|2θ| + θ Σ_{n≥1} ζ(2n) / (n (2n + 1)) (θ/π)^{2n}`.

use std::f64::consts::PI;
use std::sync::OnceLock;

const TERMS: usize = 26;

fn zeta_even(n: usize) -> f64 {
    let pi2 = PI * PI;
    match n {
        1 => pi2 / 6.0,
        2 => pi2 * pi2 / 90.0,
        3 => pi2 * pi2 * pi2 / 945.0,
        4 => pi2.powi(4) / 9450.0,
        5 => pi2.powi(5) / 93555.0,
        _ => {
            let s = 2 * n as i32;
            // Tail beyond k = 64 is below 64^(1-s) / (s-1) < 1e-20 for s ≥ 12.
            (2..=64).rev().map(|k| (k as f64).powi(-s)).sum::<f64>() + 1.0
        }
    }
}

fn coefficients() -> &'static [f64; TERMS] {
    static COEFFS: OnceLock<[f64; TERMS]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut c = [0.0; TERMS];
        for (i, slot) in c.iter_mut().enumerate() {
            let n = i + 1;
            *slot = zeta_even(n) / (n as f64 * (2 * n + 1) as f64);
        }
        c
    })
}

/// Reduces `theta` modulo π into `[-π/2, π/2]`.
fn reduce(theta: f64) -> f64 {
    theta - PI * (theta / PI).round()
}

/// The Lobachevsky function. Odd, π-periodic, maximal at π/6.
pub fn lobachevsky(theta: f64) -> f64 {
    let x = reduce(theta);
    if x == 0.0 {
        return 0.0;
    }
    let u = (x / PI) * (x / PI);
    let series = coefficients().iter().rev().fold(0.0, |acc, &c| acc * u + c) * u;
    x - x * (2.0 * x.abs()).ln() + x * series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_and_symmetry() {
        assert_eq!(lobachevsky(0.0), 0.0);
        assert!(lobachevsky(PI).abs() < 1e-15);
        assert!(lobachevsky(PI / 2.0).abs() < 1e-15);
        for &t in &[0.1, 0.7, 1.3, 2.9, -4.2] {
            assert!((lobachevsky(-t) + lobachevsky(t)).abs() < 1e-15);
            assert!((lobachevsky(t + PI) - lobachevsky(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_is_minus_log_two_sine() {
        let h = 1e-5;
        for &t in &[0.05, 0.4, PI / 3.0, 1.2, 1.56, 1.6, 2.5, 3.1] {
            let fd = (lobachevsky(t + h) - lobachevsky(t - h)) / (2.0 * h);
            let exact = -(2.0 * f64::sin(t)).abs().ln();
            assert!((fd - exact).abs() < 1e-8, "t={t}: {fd} vs {exact}");
        }
    }

    #[test]
    fn triplication_identity() {
        // Λ(3θ) = 3 (Λ(θ) + Λ(θ + π/3) + Λ(θ + 2π/3))
        for &t in &[0.11, 0.5, 0.9, 1.4] {
            let lhs = lobachevsky(3.0 * t);
            let rhs = 3.0
                * (lobachevsky(t) + lobachevsky(t + PI / 3.0) + lobachevsky(t + 2.0 * PI / 3.0));
            assert!((lhs - rhs).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn maximum_at_pi_over_six() {
        let top = lobachevsky(PI / 6.0);
        assert!((top - 1.5 * lobachevsky(PI / 3.0)).abs() < 1e-15);
        for i in 1..1000 {
            let t = i as f64 * PI / 1000.0;
            assert!(lobachevsky(t).abs() <= top + 1e-15);
        }
    }
}
