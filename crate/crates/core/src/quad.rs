//! Gauss-Legendre quadrature with node caching and an adaptive
//! node-doubling driver for complex-valued integrands.

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights on [-1, 1].
pub type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cache() -> &'static Mutex<HashMap<usize, Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Legendre polynomial value and derivative at `x` by upward recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule of degree `n` on [-1, 1], cached after first use.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 2, "rule needs at least two nodes");
    if let Some(rule) = cache().lock().unwrap().get(&n) {
        return rule.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_and_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let rule = Arc::new((nodes, weights));
    cache().lock().unwrap().insert(n, rule.clone());
    rule
}

/// Outcome of an adaptive integration: value plus the node count that
/// certified convergence.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOutcome {
    pub value: Complex64,
    pub nodes: u32,
}

/// Fixed-rule integral of `f` over [a, b]; also reports the largest sampled
/// integrand magnitude (used for the near-zero absolute floor).
fn fixed_complex<F>(f: &F, a: f64, b: f64, n: usize) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut max_mag = 0.0f64;
    for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
        let v = f(mid + half * x)?;
        max_mag = max_mag.max(v.norm());
        sum += w * v;
    }
    Ok((half * sum, max_mag))
}

/// Adaptive Gauss-Legendre: the node count is doubled from `start_nodes`
/// until two successive estimates agree to `rel_tol` relative, with a
/// near-zero absolute floor of `1e-12 * (b - a) * max |integrand sample|`.
pub fn adaptive_complex<F>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    start_nodes: u32,
    max_nodes: u32,
) -> Result<QuadratureOutcome>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (mut previous, mut scale) = fixed_complex(&f, a, b, start_nodes as usize)?;
    let mut n = start_nodes * 2;
    while n <= max_nodes {
        let (current, mag) = fixed_complex(&f, a, b, n as usize)?;
        scale = scale.max(mag);
        let abs_floor = 1e-12 * (b - a).abs() * scale;
        if (current - previous).norm() <= rel_tol * current.norm().max(abs_floor) {
            return Ok(QuadratureOutcome {
                value: current,
                nodes: n,
            });
        }
        previous = current;
        n *= 2;
    }
    Err(Error::QuadratureNonConvergence {
        previous,
        last: previous,
        max_nodes,
    })
}
