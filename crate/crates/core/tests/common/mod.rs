//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use cuspflow::complex::{build_complex, parse_complex, Complex, GluingSpec};
use cuspflow::curvature::is_decorated_metric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const FIGURE_EIGHT: &str = include_str!("../../../../data/figure8.tri");
pub const GIESEKING: &str = include_str!("../../../../data/gieseking.tri");
pub const DOUBLE_TET: &str = include_str!("../../../../data/double_tet.tri");

pub fn load(src: &str) -> Complex {
    build_complex(&parse_complex(src).expect("fixture parses")).expect("fixture is closed")
}

pub fn figure_eight() -> Complex {
    load(FIGURE_EIGHT)
}

pub fn double_tet() -> Complex {
    load(DOUBLE_TET)
}

pub fn gieseking() -> Complex {
    load(GIESEKING)
}

/// A closed random complex with four tetrahedra and a fixed seed.
pub fn random_complex(seed: u64) -> Complex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_complex(&GluingSpec::random_closed(4, &mut rng)).expect("random gluing is closed")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Λ(θ) from its Fourier series `½ Σ sin(2nθ)/n²`, Kahan-summed over `n`
/// terms. The tail after `n` terms is bounded by `1/(n² |sin θ|)`, which is
/// returned alongside the value.
pub fn lobachevsky_fourier(theta: f64, n: usize) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in 1..=n {
        let kf = k as f64;
        let term = (2.0 * kf * theta).sin() / (kf * kf) - comp;
        let next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    let s = theta.sin().abs();
    let bound = if s == 0.0 {
        0.0
    } else {
        1.0 / ((n as f64).powi(2) * s)
    };
    (0.5 * sum, bound)
}

/// Angles of a Euclidean triangle opposite sides `x`, by the law of cosines,
/// with the degenerate convention `(π, 0, 0)` at the longest side.
pub fn law_of_cosines(x: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        if x[i] >= x[j] + x[k] {
            out = [0.0; 3];
            out[i] = PI;
            return out;
        }
    }
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let cos = (x[j] * x[j] + x[k] * x[k] - x[i] * x[i]) / (2.0 * x[j] * x[k]);
        out[i] = cos.clamp(-1.0, 1.0).acos();
    }
    out
}

/// The three quad lengths of a tetrahedron, in local quad order.
pub fn quad_sides(l: &[f64; 6]) -> [f64; 3] {
    [
        ((l[0] + l[5]) / 2.0).exp(),
        ((l[1] + l[4]) / 2.0).exp(),
        ((l[2] + l[3]) / 2.0).exp(),
    ]
}

/// Signed relative slack of the triangle inequality at the longest side:
/// positive inside the decorated region, negative outside.
pub fn triangle_slack(x: [f64; 3]) -> f64 {
    let i = (0..3).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    (x[j] + x[k] - x[i]) / x[i]
}

/// A random decorated tetrahedron with edge lengths in `[-1, 1]`.
pub fn random_decorated_tetra(rng: &mut ChaCha8Rng) -> [f64; 6] {
    loop {
        let l: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        if triangle_slack(quad_sides(&l)) > 1e-3 {
            return l;
        }
    }
}

/// A random decorated metric `l` with `‖l‖∞ ≤ 1`.
pub fn random_decorated_metric(c: &Complex, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let l: Vec<f64> = (0..c.edge_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        if is_decorated_metric(c, &l) {
            return l;
        }
    }
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Central finite difference of `f` at `x` along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut q = x.to_vec();
    p[i] += h;
    q[i] -= h;
    (f(&p) - f(&q)) / (2.0 * h)
}

/// Where a metric sits relative to the decorated region, tetrahedron by
/// tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Inside,
    Outside,
    Straddling,
}

/// Region of `l`, or `None` when some tetrahedron lies within relative
/// triangle slack `margin` of its boundary, where finite differences of the
/// angles lose accuracy.
pub fn region(c: &Complex, l: &[f64], margin: f64) -> Option<Region> {
    let mut inside = 0;
    for t in 0..c.tet_count() {
        let s = triangle_slack(quad_sides(&c.restrict(t, l)));
        if s.abs() < margin {
            return None;
        }
        if s > 0.0 {
            inside += 1;
        }
    }
    Some(match inside {
        0 => Region::Outside,
        k if k == c.tet_count() => Region::Inside,
        _ => Region::Straddling,
    })
}

/// `counts[r]` random metrics in each region, drawn from boxes of growing
/// radius.
pub fn sample_regions(
    c: &Complex,
    rng: &mut ChaCha8Rng,
    counts: [usize; 3],
    margin: f64,
) -> Vec<(Region, Vec<f64>)> {
    let order = [Region::Inside, Region::Outside, Region::Straddling];
    let mut left = counts;
    let mut out = Vec::new();
    let mut radius = 0.25;
    let mut tries = 0;
    while left.iter().any(|&k| k > 0) {
        tries += 1;
        if tries % 200 == 0 {
            radius = (radius * 1.5f64).min(6.0);
        }
        let l: Vec<f64> = (0..c.edge_count())
            .map(|_| rng.gen_range(-radius..radius))
            .collect();
        if let Some(r) = region(c, &l, margin) {
            let slot = order.iter().position(|&o| o == r).unwrap();
            if left[slot] > 0 {
                left[slot] -= 1;
                out.push((r, l));
            }
        }
        assert!(tries < 1_000_000, "could not fill region quotas {left:?}");
    }
    out
}
