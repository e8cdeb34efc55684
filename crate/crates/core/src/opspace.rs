//! Operators between finite-dimensional spaces and the sampled norms
//! `p`, `p*`, `q_s`, `q*_s`, `p_k`, together with the composition bound and
//! restriction norms.
//!
//! A sampled supremum is only ever a lower bound of the true supremum, so
//! every estimate is tagged with its certificate. Closed forms for matrices
//! give exact values where one is known.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spaces::{self, FiniteSpace, NormType, SampleSet, Vector, C64};
use crate::tolerance::{self, le_tol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("sample set is empty")]
    EmptySamples,
    #[error("sample {index} has norm {norm:e}, below the division threshold")]
    NearZeroSample { index: usize, norm: f64 },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("restriction set must contain the origin")]
    ZeroMissing,
    #[error("invalid norm kind `{0}`")]
    InvalidNormKind(String),
}

type OpFn = dyn Fn(&[C64]) -> Vector + Send + Sync;

/// An evaluable map `X → Y` between finite-dimensional spaces.
#[derive(Clone)]
pub struct OperatorHandle {
    label: String,
    domain: FiniteSpace,
    codomain: FiniteSpace,
    eval: Arc<OpFn>,
    value_at_zero: Vector,
    linear: Option<bool>,
    matrix: Option<Arc<DMatrix<C64>>>,
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .field("value_at_zero", &self.value_at_zero)
            .field("linear", &self.linear)
            .finish()
    }
}

impl OperatorHandle {
    pub fn new<F>(
        label: impl Into<String>,
        domain: FiniteSpace,
        codomain: FiniteSpace,
        eval: F,
    ) -> Self
    where
        F: Fn(&[C64]) -> Vector + Send + Sync + 'static,
    {
        let value_at_zero = eval(&domain.zero());
        debug_assert_eq!(value_at_zero.len(), codomain.dimension());
        Self {
            label: label.into(),
            domain,
            codomain,
            eval: Arc::new(eval),
            value_at_zero,
            linear: None,
            matrix: None,
        }
    }

    /// `x ↦ A x` for a `codim × dim` matrix.
    pub fn from_matrix(
        label: impl Into<String>,
        domain: FiniteSpace,
        codomain: FiniteSpace,
        matrix: DMatrix<C64>,
    ) -> Result<Self, OpError> {
        if matrix.ncols() != domain.dimension() || matrix.nrows() != codomain.dimension() {
            return Err(OpError::SpaceMismatch(format!(
                "matrix is {}x{}, spaces are {} -> {}",
                matrix.nrows(),
                matrix.ncols(),
                domain.dimension(),
                codomain.dimension()
            )));
        }
        let m = Arc::new(matrix);
        let mm = Arc::clone(&m);
        let mut op = Self::new(label, domain, codomain, move |x| {
            (0..mm.nrows())
                .map(|i| (0..mm.ncols()).map(|j| mm[(i, j)] * x[j]).sum())
                .collect()
        });
        op.linear = Some(true);
        op.matrix = Some(m);
        Ok(op)
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        let mut op = Self::new("identity", space.clone(), space.clone(), |x| x.to_vec());
        op.linear = Some(true);
        op.matrix = Some(Arc::new(DMatrix::identity(space.dimension(), space.dimension())));
        op
    }

    pub fn zero(domain: &FiniteSpace, codomain: &FiniteSpace) -> Self {
        let dim = codomain.dimension();
        let mut op = Self::new("zero", domain.clone(), codomain.clone(), move |_| {
            vec![C64::new(0.0, 0.0); dim]
        });
        op.linear = Some(true);
        op.matrix = Some(Arc::new(DMatrix::zeros(codomain.dimension(), domain.dimension())));
        op
    }

    /// Applies a scalar function to each coordinate (`X = Y`).
    pub fn componentwise<F>(label: impl Into<String>, space: &FiniteSpace, f: F) -> Self
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        Self::new(label, space.clone(), space.clone(), move |x| {
            x.iter().map(|&z| f(z)).collect()
        })
    }

    pub fn with_linear_claim(mut self, linear: bool) -> Self {
        self.linear = Some(linear);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &FiniteSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteSpace {
        &self.codomain
    }

    pub fn value_at_zero(&self) -> &[C64] {
        &self.value_at_zero
    }

    pub fn linear_claim(&self) -> Option<bool> {
        self.linear
    }

    pub fn matrix(&self) -> Option<&DMatrix<C64>> {
        self.matrix.as_deref()
    }

    pub fn eval(&self, x: &[C64]) -> Vector {
        (self.eval)(x)
    }

    fn check_same_spaces(&self, other: &OperatorHandle) -> Result<(), OpError> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(OpError::SpaceMismatch(format!(
                "{} and {} act between different spaces",
                self.label, other.label
            )));
        }
        Ok(())
    }

    /// Pointwise sum `(F1 + F2)(x) = F1(x) + F2(x)`.
    pub fn add(&self, other: &OperatorHandle) -> Result<OperatorHandle, OpError> {
        self.check_same_spaces(other)?;
        let (a, b) = (self.clone(), other.clone());
        let mut op = Self::new(
            format!("({} + {})", self.label, other.label),
            self.domain.clone(),
            self.codomain.clone(),
            move |x| spaces::add(&a.eval(x), &b.eval(x)),
        );
        op.linear = match (self.linear, other.linear) {
            (Some(true), Some(true)) => Some(true),
            _ => None,
        };
        if let (Some(m1), Some(m2)) = (&self.matrix, &other.matrix) {
            op.matrix = Some(Arc::new(m1.as_ref() + m2.as_ref()));
        }
        Ok(op)
    }

    pub fn sub(&self, other: &OperatorHandle) -> Result<OperatorHandle, OpError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `(αF)(x) = α F(x)`.
    pub fn scale(&self, alpha: C64) -> OperatorHandle {
        let a = self.clone();
        let mut op = Self::new(
            format!("{alpha}*{}", self.label),
            self.domain.clone(),
            self.codomain.clone(),
            move |x| spaces::scale(alpha, &a.eval(x)),
        );
        op.linear = self.linear;
        op.matrix = self.matrix.as_ref().map(|m| Arc::new(m.as_ref() * alpha));
        op
    }

    /// Checks additivity and homogeneity on all probe pairs and scalars.
    pub fn verify_linearity(&self, probes: &SampleSet, scalars: &[C64], tol: f64) -> bool {
        let y = &self.codomain;
        let pts = probes.points();
        for u in pts {
            let fu = self.eval(u);
            for v in pts {
                let lhs = self.eval(&spaces::add(u, v));
                let rhs = spaces::add(&fu, &self.eval(v));
                let scale = 1.0 + y.norm(&lhs).max(y.norm(&rhs));
                if y.norm(&spaces::sub(&lhs, &rhs)) > tol * scale {
                    return false;
                }
            }
            for &a in scalars {
                let lhs = self.eval(&spaces::scale(a, u));
                let rhs = spaces::scale(a, &fu);
                let scale = 1.0 + y.norm(&lhs).max(y.norm(&rhs));
                if y.norm(&spaces::sub(&lhs, &rhs)) > tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Which member of the norm family to compute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    P,
    PStar,
    Q { s: f64 },
    QStar { s: f64 },
    Pk { k: f64 },
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::P => write!(f, "p"),
            NormKind::PStar => write!(f, "pstar"),
            NormKind::Q { s } => write!(f, "q:{s}"),
            NormKind::QStar { s } => write!(f, "qstar:{s}"),
            NormKind::Pk { k } => write!(f, "pk:{k}"),
        }
    }
}

impl FromStr for NormKind {
    type Err = OpError;

    /// Parses `p`, `pstar`, `q:s`, `qstar:s`, `pk:k`; `q` and `qstar` default to `s = 1`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || OpError::InvalidNormKind(text.to_string());
        let (head, arg) = match text.trim().split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (text.trim(), None),
        };
        let positive = |a: Option<&str>, default: Option<f64>| -> Result<f64, OpError> {
            let v = match a {
                Some(a) => a.parse::<f64>().map_err(|_| bad())?,
                None => default.ok_or_else(bad)?,
            };
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match head.to_ascii_lowercase().as_str() {
            "p" if arg.is_none() => Ok(NormKind::P),
            "pstar" | "p*" if arg.is_none() => Ok(NormKind::PStar),
            "q" => Ok(NormKind::Q {
                s: positive(arg, Some(1.0))?,
            }),
            "qstar" | "q*" => Ok(NormKind::QStar {
                s: positive(arg, Some(1.0))?,
            }),
            "pk" => Ok(NormKind::Pk {
                k: positive(arg, None)?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    SampledLowerBound {
        seed: Option<u64>,
        sample_count: usize,
    },
    AnalyticUpperBound {
        derivation: String,
    },
    Exact {
        reason: String,
    },
}

/// A supremum-type quantity with the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<NormKind>,
    /// Index of the sample attaining the sampled maximum, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
}

impl NormEstimate {
    pub fn sampled(value: f64, samples: &SampleSet, kind: Option<NormKind>, witness: Option<usize>) -> Self {
        Self {
            value,
            certificate: Certificate::SampledLowerBound {
                seed: samples.seed(),
                sample_count: samples.len(),
            },
            kind,
            witness,
        }
    }

    pub fn is_lower_bound(&self) -> bool {
        matches!(self.certificate, Certificate::SampledLowerBound { .. })
    }
}

/// Deterministic arg-max: larger value wins, ties go to the smaller index.
pub(crate) fn max_with_index(a: (f64, Option<usize>), b: (f64, Option<usize>)) -> (f64, Option<usize>) {
    match a.0.partial_cmp(&b.0) {
        Some(std::cmp::Ordering::Greater) => a,
        Some(std::cmp::Ordering::Less) => b,
        _ => match (a.1, b.1) {
            (Some(i), Some(j)) => {
                if i <= j {
                    a
                } else {
                    b
                }
            }
            (Some(_), None) => a,
            _ => b,
        },
    }
}

/// `max_{x ≠ 0} ‖F(x)‖ / ‖x‖^power` over the samples.
fn sup_ratio(f: &OperatorHandle, samples: &SampleSet, power: f64) -> Result<(f64, Option<usize>), OpError> {
    let x_space = f.domain();
    let y_space = f.codomain();
    let pts = samples.points();
    let ratio_at = |i: usize| -> Result<(f64, Option<usize>), OpError> {
        let x = &pts[i];
        if spaces::is_zero(x) {
            return Ok((0.0, None));
        }
        let nx = x_space.norm(x);
        if nx < tolerance::NEAR_ZERO_NORM {
            return Err(OpError::NearZeroSample { index: i, norm: nx });
        }
        let denom = if power == 1.0 { nx } else { nx.powf(power) };
        Ok((y_space.norm(&f.eval(x)) / denom, Some(i)))
    };
    if pts.len() > 256 {
        (0..pts.len())
            .into_par_iter()
            .map(ratio_at)
            .try_reduce(|| (0.0, None), |a, b| Ok(max_with_index(a, b)))
    } else {
        (0..pts.len()).try_fold((0.0, None), |acc, i| Ok(max_with_index(acc, ratio_at(i)?)))
    }
}

/// Sampled lower bound of the requested norm.
pub fn estimate_norm(f: &OperatorHandle, kind: NormKind, samples: &SampleSet) -> Result<NormEstimate, OpError> {
    if samples.is_empty() {
        return Err(OpError::EmptySamples);
    }
    if samples.points().first().map(|p| p.len()) != Some(f.domain().dimension()) {
        return Err(OpError::SpaceMismatch("samples do not live in the domain".into()));
    }
    let power = match kind {
        NormKind::Pk { k } => k,
        _ => 1.0,
    };
    let (sup, witness) = sup_ratio(f, samples, power)?;
    let at_zero = f.codomain().norm(f.value_at_zero());
    let value = match kind {
        NormKind::P | NormKind::Pk { .. } => sup.max(at_zero),
        NormKind::PStar => sup + at_zero,
        NormKind::Q { s } => sup.max(s * at_zero),
        NormKind::QStar { s } => sup + s * at_zero,
    };
    let witness = match kind {
        NormKind::P | NormKind::Pk { .. } if at_zero > sup => None,
        _ => witness,
    };
    Ok(NormEstimate::sampled(value, samples, Some(kind), witness))
}

/// Closed-form `p` norm for matrix-backed operators, where one is known:
/// ℓ1/weighted-ℓ1 domains (extreme points are scaled unit vectors),
/// ℓ∞→ℓ∞ (max row sum), ℓ2→ℓ2 (largest singular value) and ℓ2→ℓ∞
/// (max row length).
pub fn analytic_linear_norm(f: &OperatorHandle) -> Option<NormEstimate> {
    let m = f.matrix()?;
    let y = f.codomain();
    let col = |j: usize| -> Vector { m.column(j).iter().copied().collect() };
    let (value, reason) = match (f.domain().norm_type(), y.norm_type()) {
        (NormType::L1, _) => (
            (0..m.ncols()).map(|j| y.norm(&col(j))).fold(0.0, f64::max),
            "max column norm over l1 extreme points",
        ),
        (NormType::Weighted(w), _) => (
            (0..m.ncols()).map(|j| y.norm(&col(j)) / w[j]).fold(0.0, f64::max),
            "max scaled column norm over weighted-l1 extreme points",
        ),
        (NormType::Linf, NormType::Linf) => (
            m.row_iter()
                .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            "max absolute row sum",
        ),
        (NormType::L2, NormType::L2) => {
            let sv = m.clone().svd(false, false).singular_values;
            (sv.iter().copied().fold(0.0, f64::max), "largest singular value")
        }
        (NormType::L2, NormType::Linf) => (
            m.row_iter()
                .map(|r| r.iter().fold(0.0_f64, |acc, z| acc.hypot(z.norm())))
                .fold(0.0, f64::max),
            "max row l2 length",
        ),
        _ => return None,
    };
    Some(NormEstimate {
        value,
        certificate: Certificate::Exact {
            reason: reason.to_string(),
        },
        kind: Some(NormKind::P),
        witness: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub p: f64,
    pub p_star: f64,
    /// `p ≤ p* ≤ 2p` on the shared samples.
    pub holds: bool,
}

pub fn norm_equivalence_report(f: &OperatorHandle, samples: &SampleSet, tol: f64) -> Result<EquivalenceReport, OpError> {
    let p = estimate_norm(f, NormKind::P, samples)?.value;
    let p_star = estimate_norm(f, NormKind::PStar, samples)?.value;
    Ok(EquivalenceReport {
        p,
        p_star,
        holds: le_tol(p, p_star, tol) && le_tol(p_star, 2.0 * p, tol),
    })
}

/// `x ↦ F2(F1(x))`.
pub fn compose(first: &OperatorHandle, second: &OperatorHandle) -> Result<OperatorHandle, OpError> {
    if first.codomain() != second.domain() {
        return Err(OpError::SpaceMismatch(format!(
            "codomain of {} is not the domain of {}",
            first.label(),
            second.label()
        )));
    }
    let (a, b) = (first.clone(), second.clone());
    let mut op = OperatorHandle::new(
        format!("{} o {}", second.label(), first.label()),
        first.domain().clone(),
        second.codomain().clone(),
        move |x| b.eval(&a.eval(x)),
    );
    if let (Some(true), Some(true)) = (first.linear_claim(), second.linear_claim()) {
        op.linear = Some(true);
    }
    if let (Some(m1), Some(m2)) = (first.matrix(), second.matrix()) {
        op.matrix = Some(Arc::new(m2 * m1));
    }
    Ok(op)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub composite: f64,
    pub first: f64,
    pub second: f64,
    /// `p̂(F2∘F1) ≤ p̂(F1)·p̂(F2)`, the second factor taken over `F1(S) ∪ {0}`.
    pub holds: bool,
}

/// Composition bound with the sample-closure convention: the second factor's
/// norm is sampled on the image of the first factor's samples.
pub fn check_composition_bound(
    first: &OperatorHandle,
    second: &OperatorHandle,
    samples: &SampleSet,
    tol: f64,
) -> Result<CompositionReport, OpError> {
    if !spaces::is_zero(first.value_at_zero()) {
        return Err(OpError::HypothesisViolated(format!("{}(0) != 0", first.label())));
    }
    if !spaces::is_zero(second.value_at_zero()) {
        return Err(OpError::HypothesisViolated(format!("{}(0) != 0", second.label())));
    }
    let composite_op = compose(first, second)?;
    let composite = estimate_norm(&composite_op, NormKind::P, samples)?.value;
    let first_norm = estimate_norm(first, NormKind::P, samples)?.value;
    let mut image: Vec<Vector> = samples.points().iter().map(|x| first.eval(x)).collect();
    image.push(second.domain().zero());
    let image = SampleSet::new(image, second.domain())
        .map_err(|e| OpError::SpaceMismatch(e.to_string()))?;
    let second_norm = estimate_norm(second, NormKind::P, &image)?.value;
    Ok(CompositionReport {
        composite,
        first: first_norm,
        second: second_norm,
        holds: le_tol(composite, first_norm * second_norm, tol),
    })
}

/// The `B(S, Y)` norm: the `p` norm with the supremum restricted to `S ∋ 0`.
pub fn restrict(f: &OperatorHandle, set: &SampleSet) -> Result<NormEstimate, OpError> {
    if !set.contains_zero() {
        return Err(OpError::ZeroMissing);
    }
    estimate_norm(f, NormKind::P, set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{real_vector, NormType};

    fn r1() -> FiniteSpace {
        FiniteSpace::real(1, NormType::L1)
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn linear_1d(slope: f64) -> OperatorHandle {
        OperatorHandle::from_matrix(
            format!("{slope}x"),
            r1(),
            r1(),
            DMatrix::from_element(1, 1, c(slope)),
        )
        .unwrap()
    }

    fn square() -> OperatorHandle {
        OperatorHandle::componentwise("x^2", &r1(), |z| z * z)
    }

    #[test]
    fn slope_two_has_norm_two() {
        let s = SampleSet::scalars(&[1.0, -1.0, 2.0, -2.0, 0.0], &r1()).unwrap();
        let est = estimate_norm(&linear_1d(2.0), NormKind::P, &s).unwrap();
        assert_eq!(est.value, 2.0);
        assert!(est.is_lower_bound());
        // brute-force grid oracle
        let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.01 - 2.005).collect();
        let oracle = grid.iter().map(|x| (2.0 * x).abs() / x.abs()).fold(0.0, f64::max);
        assert_eq!(est.value, oracle);
    }

    #[test]
    fn identity_and_zero() {
        let sp = FiniteSpace::real(3, NormType::L2);
        let s = SampleSet::halton(&sp, 20, 1.0, 3).unwrap();
        for kind in [NormKind::P, NormKind::PStar, NormKind::Q { s: 2.0 }, NormKind::QStar { s: 0.5 }] {
            let id = estimate_norm(&OperatorHandle::identity(&sp), kind, &s).unwrap();
            assert!((id.value - 1.0).abs() < 1e-15, "{kind}: {}", id.value);
            let z = estimate_norm(&OperatorHandle::zero(&sp, &sp), kind, &s).unwrap();
            assert_eq!(z.value, 0.0);
        }
        let z = estimate_norm(&OperatorHandle::zero(&sp, &sp), NormKind::Pk { k: 3.0 }, &s).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn square_in_pk_two() {
        let s = SampleSet::scalars(&[1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 0.0], &r1()).unwrap();
        let est = estimate_norm(&square(), NormKind::Pk { k: 2.0 }, &s).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn equivalence_examples() {
        let s = SampleSet::scalars(&[0.5, -1.0, 2.0], &r1()).unwrap();
        let rep = norm_equivalence_report(&linear_1d(2.0), &s, tolerance::EXACT).unwrap();
        assert_eq!((rep.p, rep.p_star, rep.holds), (2.0, 2.0, true));

        let constant = OperatorHandle::new("y0", r1(), r1(), |_| vec![c(1.0)]);
        let rep = norm_equivalence_report(&constant, &s, tolerance::EXACT).unwrap();
        assert_eq!((rep.p, rep.p_star, rep.holds), (2.0, 3.0, true));

        let rep = norm_equivalence_report(&OperatorHandle::zero(&r1(), &r1()), &s, tolerance::EXACT).unwrap();
        assert_eq!((rep.p, rep.p_star, rep.holds), (0.0, 0.0, true));
    }

    #[test]
    fn q_reduces_to_p_at_s_one() {
        let constant = OperatorHandle::new("y0+x", r1(), r1(), |x| vec![x[0] + c(0.7)]);
        let s = SampleSet::scalars(&[0.25, 1.0, -3.0], &r1()).unwrap();
        let p = estimate_norm(&constant, NormKind::P, &s).unwrap().value;
        let q = estimate_norm(&constant, NormKind::Q { s: 1.0 }, &s).unwrap().value;
        let ps = estimate_norm(&constant, NormKind::PStar, &s).unwrap().value;
        let qs = estimate_norm(&constant, NormKind::QStar { s: 1.0 }, &s).unwrap().value;
        assert_eq!(p, q);
        assert_eq!(ps, qs);
    }

    #[test]
    fn errors() {
        let empty = SampleSet::new(vec![], &r1()).unwrap();
        assert_eq!(estimate_norm(&square(), NormKind::P, &empty), Err(OpError::EmptySamples));
        let tiny = SampleSet::scalars(&[1e-310], &r1()).unwrap();
        assert!(matches!(
            estimate_norm(&square(), NormKind::P, &tiny),
            Err(OpError::NearZeroSample { index: 0, .. })
        ));
        let no_zero = SampleSet::scalars(&[1.0], &r1()).unwrap();
        assert_eq!(restrict(&square(), &no_zero), Err(OpError::ZeroMissing));
    }

    #[test]
    fn composition_examples() {
        let f1 = linear_1d(2.0);
        let f2 = linear_1d(3.0);
        let comp = compose(&f1, &f2).unwrap();
        assert_eq!(comp.eval(&[c(1.0)]), vec![c(6.0)]);

        let plus_zero = OperatorHandle::componentwise("y+0", &r1(), |z| z + 0.0);
        assert_eq!(compose(&square(), &plus_zero).unwrap().eval(&[c(2.0)]), vec![c(4.0)]);

        let s = SampleSet::scalars(&[1.0, -1.0], &r1()).unwrap();
        let rep = check_composition_bound(&f1, &f2, &s, tolerance::EXACT).unwrap();
        assert_eq!((rep.composite, rep.first, rep.second), (6.0, 2.0, 3.0));
        assert!(rep.holds);

        let cube = OperatorHandle::componentwise("y^3", &r1(), |z| z * z * z);
        let s = SampleSet::scalars(&[1.0, -1.0, 2.0, -2.0], &r1()).unwrap();
        let rep = check_composition_bound(&square(), &cube, &s, tolerance::EXACT).unwrap();
        // brute force: composite ratios x^6/|x| → 32 at |x|=2; first 2; second over {1,4,0}: 16
        assert_eq!((rep.composite, rep.first, rep.second), (32.0, 2.0, 16.0));
        assert!(rep.holds);

        let shifted = OperatorHandle::componentwise("x+1", &r1(), |z| z + 1.0);
        assert!(matches!(
            check_composition_bound(&shifted, &f2, &s, tolerance::EXACT),
            Err(OpError::HypothesisViolated(_))
        ));

        let r2 = FiniteSpace::real(2, NormType::L1);
        assert!(matches!(
            compose(&f1, &OperatorHandle::identity(&r2)),
            Err(OpError::SpaceMismatch(_))
        ));
    }

    #[test]
    fn zero_composed_is_zero() {
        let z = OperatorHandle::zero(&r1(), &r1());
        let comp = compose(&z, &square()).unwrap();
        let s = SampleSet::scalars(&[1.0, -2.5], &r1()).unwrap();
        assert_eq!(estimate_norm(&comp, NormKind::P, &s).unwrap().value, 0.0);
    }

    #[test]
    fn restriction_examples() {
        let s = SampleSet::scalars(&[0.0, 1.0, -1.0], &r1()).unwrap();
        assert_eq!(restrict(&square(), &s).unwrap().value, 1.0);
        assert_eq!(restrict(&OperatorHandle::identity(&r1()), &s).unwrap().value, 1.0);
        assert_eq!(restrict(&OperatorHandle::zero(&r1(), &r1()), &s).unwrap().value, 0.0);
    }

    #[test]
    fn analytic_norms_dominate_samples() {
        let x = FiniteSpace::real(3, NormType::L2);
        let y = FiniteSpace::real(2, NormType::L2);
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]).map(c);
        let f = OperatorHandle::from_matrix("A", x.clone(), y, m).unwrap();
        let exact = analytic_linear_norm(&f).unwrap();
        let s = SampleSet::halton(&x, 500, 1.0, 11).unwrap();
        let sampled = estimate_norm(&f, NormKind::P, &s).unwrap();
        assert!(sampled.value <= exact.value * (1.0 + 1e-12));
        assert!(sampled.value > 0.95 * exact.value);
    }

    #[test]
    fn parse_norm_kinds() {
        assert_eq!("p".parse::<NormKind>().unwrap(), NormKind::P);
        assert_eq!("pstar".parse::<NormKind>().unwrap(), NormKind::PStar);
        assert_eq!("q:2.5".parse::<NormKind>().unwrap(), NormKind::Q { s: 2.5 });
        assert_eq!("qstar".parse::<NormKind>().unwrap(), NormKind::QStar { s: 1.0 });
        assert_eq!("pk:3".parse::<NormKind>().unwrap(), NormKind::Pk { k: 3.0 });
        for bad in ["", "pk", "q:-1", "q:nan", "p:2", "r", "pk:inf"] {
            assert!(bad.parse::<NormKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn linearity_probe() {
        let sp = FiniteSpace::real(2, NormType::L2);
        let s = SampleSet::from_real(&[vec![1.0, 2.0], vec![-0.5, 0.25]], &sp).unwrap();
        let scalars = [c(2.0), c(-3.0)];
        assert!(OperatorHandle::identity(&sp).verify_linearity(&s, &scalars, 1e-9));
        let sq = OperatorHandle::componentwise("sq", &sp, |z| z * z);
        assert!(!sq.verify_linearity(&s, &scalars, 1e-9));
        let _ = real_vector(&[0.0]);
    }
}
