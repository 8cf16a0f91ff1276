//! Gauss–Legendre rules and Legendre polynomial evaluation.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    /// Rule with enough nodes to integrate polynomials of degree `degree` exactly.
    pub fn exact_for(degree: usize) -> Self {
        GaussRule::new(degree / 2 + 1)
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Standard Legendre polynomial `P_n(x)`.
pub fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_n(x)` and `P_n'(x)`, valid for `|x| < 1`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let p = legendre(n, x);
    let pm = if n == 0 { 0.0 } else { legendre(n - 1, x) };
    let d = n as f64 * (x * p - pm) / (x * x - 1.0);
    (p, d)
}

/// Legendre polynomial normalized in `L2([-1, 1], dx)`: `sqrt(k + 1/2) P_k`.
pub fn legendre_orthonormal(k: usize, x: f64) -> f64 {
    (k as f64 + 0.5).sqrt() * legendre(k, x)
}

/// Fills `out[k] = sqrt(2k + 1) P_k(x)` for `k < out.len()`, the Legendre
/// family normalized against the uniform probability measure on `[-1, 1]`.
pub fn legendre_probabilists_into(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let (mut p0, mut p1) = (1.0, x);
    out[0] = 1.0;
    if n > 1 {
        out[1] = 3f64.sqrt() * x;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        out[k + 1] = (2.0 * kf + 3.0).sqrt() * p2;
    }
}
