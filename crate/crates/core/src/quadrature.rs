//! Composite Gauss–Legendre quadrature.
//!
//! Nodes and weights are generated once by Newton iteration on the Legendre
//! recurrence. The adaptive driver doubles the panel count until two
//! successive estimates agree to the requested tolerance.

use crate::error::{Error, Result};

/// Gauss–Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess for the i-th root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.order() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Single-panel rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule with `panels` equal panels.
    pub fn composite<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(&mut f, lo, lo + h)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Adaptive composite quadrature: panel doubling until the estimate settles.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub rule: GaussLegendre,
    pub panels: usize,
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rule: GaussLegendre::new(10),
            panels: 32,
            tolerance: 1e-13,
            max_doublings: 10,
        }
    }
}

impl Quadrature {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`; the error estimate is the difference of
    /// two successive panel counts, relative to `max(1, |I|)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let mut panels = self.panels;
        let mut prev = self.rule.composite(&mut f, a, b, panels);
        let mut estimate = f64::INFINITY;
        for _ in 0..self.max_doublings {
            panels *= 2;
            let next = self.rule.composite(&mut f, a, b, panels);
            estimate = (next - prev).abs();
            if !next.is_finite() {
                break;
            }
            if estimate <= self.tolerance * next.abs().max(1.0) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureFailure {
            tolerance: self.tolerance,
            estimate,
        })
    }

    /// Integrates over consecutive sub-intervals given by sorted breakpoints.
    pub fn integrate_pieces<F: FnMut(f64) -> f64>(&self, mut f: F, breaks: &[f64]) -> Result<f64> {
        breaks.windows(2).map(|w| self.integrate(&mut f, w[0], w[1])).sum()
    }
}
