//! Angles of generalized Euclidean triangles.
//!
//! A triple of positive side lengths always has angles: the Euclidean ones
//! when the strict triangle inequalities hold, and `(π, 0, 0)` (π opposite
//! the long side) when one side is at least the sum of the other two.

use std::f64::consts::PI;

/// True iff all three strict triangle inequalities hold.
pub fn satisfies_triangle_inequalities(x: [f64; 3]) -> bool {
    x[0] < x[1] + x[2] && x[1] < x[0] + x[2] && x[2] < x[0] + x[1]
}

fn order(x: [f64; 3]) -> (usize, usize, usize) {
    let i = if x[0] >= x[1] && x[0] >= x[2] {
        0
    } else if x[1] >= x[2] {
        1
    } else {
        2
    };
    (i, (i + 1) % 3, (i + 2) % 3)
}

/// Four times the area, by Kahan's cancellation-free Heron formula.
/// Zero for degenerate triples.
fn four_area(x: [f64; 3]) -> f64 {
    let mut s = x;
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    p.max(0.0).sqrt()
}

/// Angles `a_i` opposite sides `x_i`. Inputs must be positive and finite.
pub(crate) fn angles(x: [f64; 3]) -> [f64; 3] {
    let (i, j, k) = order(x);
    let mut a = [0.0; 3];
    if x[i] >= x[j] + x[k] {
        a[i] = PI;
        return a;
    }
    let area4 = four_area(x);
    let sq = x.map(|v| v * v);
    // The two smaller angles are acute; the largest absorbs the remainder.
    a[j] = area4.atan2(sq[i] + sq[k] - sq[j]);
    a[k] = area4.atan2(sq[i] + sq[j] - sq[k]);
    a[i] = PI - a[j] - a[k];
    a
}

/// `∂a_i/∂(ln x_j)` for a non-degenerate triangle: diagonal
/// `cot a_j + cot a_k`, off-diagonal `-cot a_k` with `k` the third index.
pub(crate) fn log_jacobian(x: [f64; 3]) -> [[f64; 3]; 3] {
    let area4 = four_area(x);
    let sq = x.map(|v| v * v);
    // cot a_k = (x_i² + x_j² - x_k²) / (4 · area)
    let cot = |k: usize| {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        (sq[i] + sq[j] - sq[k]) / area4
    };
    let c = [cot(0), cot(1), cot(2)];
    let mut jac = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            jac[i][j] = if i == j {
                c[(i + 1) % 3] + c[(i + 2) % 3]
            } else {
                -c[3 - i - j]
            };
        }
    }
    jac
}
