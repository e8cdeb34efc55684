//! Gauss–Legendre panel quadrature.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Nodes per panel used throughout.
pub const RULE_ORDER: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("quadrature budget exceeded: {panels} panels, error estimate {error:e} above {tolerance:e}")]
pub struct QuadratureBudgetExceeded {
    pub panels: usize,
    pub error: f64,
    pub tolerance: f64,
}

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A composite rule on `[lo, hi]` split at `breaks`, each segment cut into equal panels.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: usize,
}

impl PanelRule {
    pub fn new(lo: f64, hi: f64, panels: usize) -> Self {
        Self::with_breaks(&[lo, hi], panels)
    }

    /// `breaks` must be increasing; `panels` is per segment.
    pub fn with_breaks(breaks: &[f64], panels: usize) -> Self {
        let (gx, gw) = gauss_legendre(RULE_ORDER);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut total = 0;
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let left = a + p as f64 * h;
                let mid = left + 0.5 * h;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(mid + 0.5 * h * x);
                    weights.push(0.5 * h * w);
                }
                total += 1;
            }
        }
        Self {
            nodes,
            weights,
            panels: total,
        }
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(C64::new(0.0, 0.0), |acc, (x, w)| acc + f(*x) * *w)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: C64,
    pub error: f64,
    pub panels: usize,
}

/// Doubles the panel count until successive estimates agree within
/// `tol·(1 + |value|)`.
pub fn integrate_adaptive<F: Fn(f64) -> C64>(
    f: F,
    breaks: &[f64],
    tol: f64,
    start_panels: usize,
    max_panels: usize,
) -> Result<Integral, QuadratureBudgetExceeded> {
    let mut panels = start_panels.max(1);
    let mut prev = PanelRule::with_breaks(breaks, panels).integrate(&f);
    loop {
        let next_panels = panels * 2;
        let rule = PanelRule::with_breaks(breaks, next_panels);
        let cur = rule.integrate(&f);
        let err = (cur - prev).norm();
        if err <= tol * (1.0 + cur.norm()) {
            return Ok(Integral {
                value: cur,
                error: err,
                panels: rule.panels,
            });
        }
        if next_panels * 2 > max_panels {
            return Err(QuadratureBudgetExceeded {
                panels: rule.panels,
                error: err,
                tolerance: tol * (1.0 + cur.norm()),
            });
        }
        prev = cur;
        panels = next_panels;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(RULE_ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..(2 * RULE_ORDER) {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "degree {deg}");
        }
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn adaptive_integrates_exponential() {
        let r = integrate_adaptive(|t| C64::new(t.exp(), 0.0), &[0.0, 1.0], 1e-12, 1, 1024).unwrap();
        assert!((r.value.re - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn budget_is_enforced() {
        let err = integrate_adaptive(|t| C64::new((1.0 / t).sin(), 0.0), &[1e-6, 1.0], 1e-14, 1, 8).unwrap_err();
        assert!(err.panels <= 8);
    }
}
