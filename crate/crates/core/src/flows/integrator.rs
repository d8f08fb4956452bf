//! Explicit Runge–Kutta steppers on `R^m`.

/// Classic fourth-order Runge–Kutta step.
pub(crate) fn rk4_step<E>(
    mut field: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>, E> {
    let k1 = field(y)?;
    let k2 = field(&axpy(y, 0.5 * h, &k1))?;
    let k3 = field(&axpy(y, 0.5 * h, &k2))?;
    let k4 = field(&axpy(y, h, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince trial step: fifth-order solution and the sup-norm of
/// its difference from the embedded fourth-order solution.
pub(crate) fn dopri_step<E>(
    mut field: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    y: &[f64],
    h: f64,
) -> Result<(Vec<f64>, f64), E> {
    debug_assert_eq!(C.len(), A.len());
    let m = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    for stage in 0..7 {
        let mut yi = y.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = A[stage][j];
            if a != 0.0 {
                for (slot, kv) in yi.iter_mut().zip(kj) {
                    *slot += h * a * kv;
                }
            }
        }
        k.push(field(&yi)?);
    }
    let mut y5 = y.to_vec();
    let mut err: f64 = 0.0;
    for i in 0..m {
        let (mut s5, mut s4) = (0.0, 0.0);
        for s in 0..7 {
            s5 += B5[s] * k[s][i];
            s4 += B4[s] * k[s][i];
        }
        y5[i] += h * s5;
        err = err.max((h * (s5 - s4)).abs());
    }
    Ok((y5, err))
}

/// Step-size controller for the embedded pair.
pub(crate) fn next_step_size(h: f64, err: f64, tol: f64) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
    };
    h * factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn decay(y: &[f64]) -> Result<Vec<f64>, Infallible> {
        Ok(y.iter().map(|v| -2.0 * v).collect())
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let mut y = vec![1.0];
            let n = (1.0 / h).round() as usize;
            for _ in 0..n {
                y = rk4_step(decay, &y, h).unwrap();
            }
            (y[0] - f64::exp(-2.0)).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn dopri_error_estimate_is_small_for_smooth_fields() {
        let (y, err) = dopri_step(decay, &[1.0], 0.05).unwrap();
        assert!((y[0] - f64::exp(-0.1)).abs() < 1e-8);
        assert!(err < 1e-6);
    }
}
