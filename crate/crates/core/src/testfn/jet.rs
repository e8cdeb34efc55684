//! Truncated multivariate Taylor jets.
//!
//! Multi-indices are stored in graded order and every output coefficient is
//! produced by a recurrence over lower coefficients in a fixed order, so the
//! coefficient of `x^α` is bit-identical whatever truncation order the jet
//! was built with.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;

/// Multi-index bookkeeping for `n` variables up to total degree `order`.
#[derive(Debug)]
pub struct JetLayout {
    n: usize,
    order: usize,
    indices: Vec<Vec<u16>>,
    degree: Vec<usize>,
    lookup: HashMap<Vec<u16>, usize>,
    /// For each α, the pairs `(β, α − β)` over all `β ≤ α`, in index order of β.
    splits: Vec<Vec<(u32, u32)>>,
    factorials: Vec<f64>,
}

fn multi_indices_of_degree(n: usize, d: usize) -> Vec<Vec<u16>> {
    if n == 1 {
        return vec![vec![d as u16]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in multi_indices_of_degree(n - 1, d - first) {
            rest.insert(0, first as u16);
            out.push(rest);
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl JetLayout {
    fn build(n: usize, order: usize) -> Self {
        let mut indices = Vec::new();
        let mut degree = Vec::new();
        for d in 0..=order {
            for idx in multi_indices_of_degree(n, d) {
                indices.push(idx);
                degree.push(d);
            }
        }
        let lookup: HashMap<Vec<u16>, usize> = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let splits = indices
            .iter()
            .map(|alpha| {
                let mut pairs = Vec::new();
                for (bi, beta) in indices.iter().enumerate() {
                    if beta.iter().zip(alpha).all(|(b, a)| b <= a) {
                        let rest: Vec<u16> = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
                        pairs.push((bi as u32, lookup[&rest] as u32));
                    }
                    if degree[bi] > alpha.iter().map(|&a| a as usize).sum::<usize>() {
                        break;
                    }
                }
                pairs
            })
            .collect();
        let factorials = indices
            .iter()
            .map(|a| a.iter().map(|&k| factorial(k as usize)).product())
            .collect();
        Self {
            n,
            order,
            indices,
            degree,
            lookup,
            splits,
            factorials,
        }
    }

    /// Shared layout for `(n, order)`.
    pub fn get(n: usize, order: usize) -> Arc<JetLayout> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<JetLayout>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(
            guard
                .entry((n, order))
                .or_insert_with(|| Arc::new(JetLayout::build(n, order))),
        )
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u16>] {
        &self.indices
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn index_of(&self, alpha: &[u16]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// `α!` for the multi-index at position `i`.
    pub fn factorial(&self, i: usize) -> f64 {
        self.factorials[i]
    }
}

/// Taylor coefficients `c_α = ∂^α f(x0) / α!`.
#[derive(Debug, Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    coeffs: Vec<C64>,
}

impl Jet {
    pub fn zero(layout: &Arc<JetLayout>) -> Self {
        Self {
            layout: Arc::clone(layout),
            coeffs: vec![C64::new(0.0, 0.0); layout.len()],
        }
    }

    pub fn constant(layout: &Arc<JetLayout>, value: C64) -> Self {
        let mut j = Self::zero(layout);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_var` expanded at `x0`.
    pub fn variable(layout: &Arc<JetLayout>, x0: f64, var: usize) -> Self {
        let mut j = Self::constant(layout, C64::new(x0, 0.0));
        if layout.order >= 1 {
            let mut e = vec![0u16; layout.n];
            e[var] = 1;
            let idx = layout.lookup[&e];
            j.coeffs[idx] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// `∂^α f(x0)`.
    pub fn derivative(&self, alpha: &[u16]) -> Option<C64> {
        self.layout
            .index_of(alpha)
            .map(|i| self.coeffs[i] * self.layout.factorials[i])
    }

    /// `|∂^α f(x0)|` at layout position `i`.
    pub fn derivative_abs_at(&self, i: usize) -> f64 {
        self.coeffs[i].norm() * self.layout.factorials[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn add(&self, other: &Jet) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, alpha: C64) -> Jet {
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs: self.coeffs.iter().map(|a| a * alpha).collect(),
        }
    }

    pub fn add_constant(&self, c: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let splits = &self.layout.splits;
        let coeffs = splits
            .iter()
            .map(|pairs| {
                pairs
                    .iter()
                    .fold(C64::new(0.0, 0.0), |acc, &(b, r)| acc + self.coeffs[b as usize] * other.coeffs[r as usize])
            })
            .collect();
        Jet {
            layout: Arc::clone(&self.layout),
            coeffs,
        }
    }

    /// `1 / f`; requires `f(x0) ≠ 0`.
    pub fn recip(&self) -> Jet {
        let mut out = Jet::zero(&self.layout);
        let r0 = C64::new(1.0, 0.0) / self.coeffs[0];
        out.coeffs[0] = r0;
        for a in 1..self.coeffs.len() {
            let s = self.layout.splits[a]
                .iter()
                .skip(1)
                .fold(C64::new(0.0, 0.0), |acc, &(b, r)| acc + self.coeffs[b as usize] * out.coeffs[r as usize]);
            out.coeffs[a] = -r0 * s;
        }
        out
    }

    /// `exp(f)`.
    pub fn exp(&self) -> Jet {
        let mut out = Jet::zero(&self.layout);
        let e0 = self.coeffs[0].exp();
        out.coeffs[0] = e0;
        if e0.re == 0.0 && e0.im == 0.0 {
            return out;
        }
        let layout = &self.layout;
        for a in 1..self.coeffs.len() {
            let alpha = &layout.indices[a];
            let var = alpha.iter().position(|&k| k > 0).unwrap_or(0);
            let s = layout.splits[a]
                .iter()
                .skip(1)
                .fold(C64::new(0.0, 0.0), |acc, &(b, r)| {
                    let bi = layout.indices[b as usize][var];
                    if bi == 0 {
                        acc
                    } else {
                        acc + self.coeffs[b as usize] * out.coeffs[r as usize] * bi as f64
                    }
                });
            out.coeffs[a] = s / alpha[var] as f64;
        }
        out
    }

    /// Jet of `∂^γ f` at the same point, truncated to `target` (which must
    /// have order at most `self.order − |γ|`).
    pub fn shift(&self, gamma: &[u16], target: &Arc<JetLayout>) -> Jet {
        let mut out = Jet::zero(target);
        for (i, beta) in target.indices.iter().enumerate() {
            let sum: Vec<u16> = beta.iter().zip(gamma).map(|(b, g)| b + g).collect();
            let j = self.layout.lookup[&sum];
            // (β+γ)!/β! as a product of rising factors
            let ratio: f64 = beta
                .iter()
                .zip(gamma)
                .map(|(&b, &g)| ((b as usize + 1)..=(b as usize + g as usize)).fold(1.0, |acc, k| acc * k as f64))
                .product();
            out.coeffs[i] = self.coeffs[j] * ratio;
        }
        out
    }

    /// Restriction to a lower-order layout.
    pub fn truncate(&self, target: &Arc<JetLayout>) -> Jet {
        Jet {
            layout: Arc::clone(target),
            coeffs: self.coeffs[..target.len()].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn layout_sizes() {
        assert_eq!(JetLayout::get(1, 5).len(), 6);
        assert_eq!(JetLayout::get(2, 3).len(), 10);
        assert_eq!(JetLayout::get(3, 2).len(), 10);
        let l = JetLayout::get(2, 4);
        for (i, a) in l.indices().iter().enumerate() {
            assert_eq!(l.index_of(a), Some(i));
        }
    }

    #[test]
    fn exp_of_variable_matches_taylor() {
        let l = JetLayout::get(1, 10);
        let x = Jet::variable(&l, 0.3, 0);
        let e = x.exp();
        for k in 0..=10u16 {
            let d = e.derivative(&[k]).unwrap();
            assert!((d.re - 0.3f64.exp()).abs() < 1e-13 * 0.3f64.exp());
        }
    }

    #[test]
    fn product_and_reciprocal() {
        let l = JetLayout::get(2, 4);
        let x = Jet::variable(&l, 1.5, 0);
        let y = Jet::variable(&l, -0.5, 1);
        let xy = x.mul(&y);
        assert_eq!(xy.derivative(&[1, 1]).unwrap(), c(1.0));
        assert_eq!(xy.derivative(&[1, 0]).unwrap(), c(-0.5));
        let one = x.recip().mul(&x);
        assert!((one.value() - c(1.0)).norm() < 1e-15);
        for i in 1..l.len() {
            assert!(one.coeffs()[i].norm() < 1e-14);
        }
        // d^3/dx^3 (1/x) = -6/x^4
        let r = x.recip();
        assert!((r.derivative(&[3, 0]).unwrap().re + 6.0 / 1.5f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn coefficients_do_not_depend_on_truncation() {
        let build = |order: usize| {
            let l = JetLayout::get(1, order);
            let u = Jet::variable(&l, 0.37, 0);
            let v = u.mul(&u);
            let w = Jet::constant(&l, c(1.0)).sub(&v).recip().scale(c(-1.0));
            w.exp()
        };
        let lo = build(4);
        let hi = build(31);
        for k in 0..=4 {
            assert_eq!(lo.coeffs()[k], hi.coeffs()[k]);
        }
    }

    #[test]
    fn shift_takes_derivatives() {
        let l = JetLayout::get(1, 6);
        let x = Jet::variable(&l, 2.0, 0);
        let x3 = x.mul(&x).mul(&x);
        let d = x3.shift(&[1], &JetLayout::get(1, 5));
        assert_eq!(d.value(), c(12.0));
        assert_eq!(d.derivative(&[1]).unwrap(), c(12.0));
        assert_eq!(d.derivative(&[2]).unwrap(), c(6.0));
    }
}
