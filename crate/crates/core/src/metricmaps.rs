//! The ratio metric on mappings between metric spaces, membership evidence,
//! the linear bridge, normed structure, completeness, and the ∗-algebra.
//!
//! Domain points are generic so the same code serves vectors and test
//! functions. Codomain values are complex matrices: scalars are `1×1`,
//! vectors `n×1`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::opspace::{max_with_index, NormEstimate, OperatorHandle};
use crate::spaces::{FiniteSpace, MetricDescriptor, SampleSet, Vector, C64};
use crate::tolerance::{self, le_tol};

pub type Value = DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("sample set is empty")]
    EmptySamples,
    #[error("codomain has no multiplication")]
    NotAlgebra,
    #[error("codomain has no unit of norm one")]
    NotUnital,
    #[error("mapping is not linear on probe pair ({0}, {1})")]
    NotLinearOnProbes(usize, usize),
    #[error("sequence is not Cauchy: tail diameter {tail:e}, overall diameter {overall:e}")]
    NotCauchy { tail: f64, overall: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

pub fn scalar(z: C64) -> Value {
    DMatrix::from_element(1, 1, z)
}

pub fn column(v: &[C64]) -> Value {
    DMatrix::from_column_slice(v.len(), 1, v)
}

/// Metric or norm on the codomain.
#[derive(Debug, Clone)]
pub enum CodomainMetric {
    /// `|a − b|` on `1×1` values.
    Scalar,
    /// A finite-space norm on column vectors.
    VectorNorm(FiniteSpace),
    /// Max absolute row sum on `n×n` matrices.
    MatrixInf(usize),
    /// Max absolute column sum on `n×n` matrices.
    MatrixOne(usize),
    Frobenius(usize),
    /// A general metric on column vectors.
    Metric(MetricDescriptor),
}

fn column_slice(v: &Value) -> Vec<C64> {
    v.iter().copied().collect()
}

impl CodomainMetric {
    /// `‖v‖` when the metric is norm-induced.
    pub fn norm(&self, v: &Value) -> Option<f64> {
        Some(match self {
            CodomainMetric::Scalar => v[(0, 0)].norm(),
            CodomainMetric::VectorNorm(space) => space.norm(&column_slice(v)),
            CodomainMetric::MatrixInf(_) => v
                .row_iter()
                .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            CodomainMetric::MatrixOne(_) => v
                .column_iter()
                .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            CodomainMetric::Frobenius(_) => v.iter().fold(0.0_f64, |a, z| a.hypot(z.norm())),
            CodomainMetric::Metric(_) => return None,
        })
    }

    pub fn distance(&self, a: &Value, b: &Value) -> f64 {
        match self {
            CodomainMetric::Metric(d) => d.distance(&column_slice(a), &column_slice(b)),
            _ => self.norm(&(a - b)).unwrap_or(f64::NAN),
        }
    }

    pub fn is_normed(&self) -> bool {
        !matches!(self, CodomainMetric::Metric(_))
    }

    pub fn translation_invariant(&self) -> bool {
        match self {
            CodomainMetric::Metric(d) => d.translation_invariant(),
            _ => true,
        }
    }

    /// Shape of codomain values.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            CodomainMetric::Scalar => (1, 1),
            CodomainMetric::VectorNorm(space) => (space.dimension(), 1),
            CodomainMetric::MatrixInf(n) | CodomainMetric::MatrixOne(n) | CodomainMetric::Frobenius(n) => (*n, *n),
            CodomainMetric::Metric(_) => (0, 1),
        }
    }

    pub fn zero(&self) -> Value {
        let (r, c) = self.shape();
        DMatrix::zeros(r, c)
    }

    /// `Err(NotAlgebra)` unless values can be multiplied with a
    /// submultiplicative norm.
    pub fn check_algebra(&self) -> Result<(), MapError> {
        match self {
            CodomainMetric::Scalar
            | CodomainMetric::MatrixInf(_)
            | CodomainMetric::MatrixOne(_)
            | CodomainMetric::Frobenius(_) => Ok(()),
            CodomainMetric::VectorNorm(space) if space.dimension() == 1 => match space.norm_type() {
                crate::spaces::NormType::Weighted(_) => Err(MapError::NotAlgebra),
                _ => Ok(()),
            },
            _ => Err(MapError::NotAlgebra),
        }
    }

    /// The multiplicative unit, which must have norm one.
    pub fn unit(&self) -> Result<Value, MapError> {
        self.check_algebra()?;
        let (n, _) = self.shape();
        if let CodomainMetric::Frobenius(n) = self {
            if *n > 1 {
                return Err(MapError::NotUnital);
            }
        }
        Ok(DMatrix::identity(n, n))
    }
}

type MapFn<P> = dyn Fn(&P) -> Value + Send + Sync;

/// A mapping `X → Y` with its cached value at the origin.
pub struct MappingHandle<P> {
    label: String,
    eval: Arc<MapFn<P>>,
    value_at_zero: Value,
    linear: Option<bool>,
}

impl<P> Clone for MappingHandle<P> {
    fn clone(&self) -> Self {
        Self {
            label: self.label.clone(),
            eval: Arc::clone(&self.eval),
            value_at_zero: self.value_at_zero.clone(),
            linear: self.linear,
        }
    }
}

impl<P> fmt::Debug for MappingHandle<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MappingHandle")
            .field("label", &self.label)
            .field("value_at_zero", &self.value_at_zero)
            .field("linear", &self.linear)
            .finish()
    }
}

impl<P: 'static> MappingHandle<P> {
    pub fn new<F>(label: impl Into<String>, zero: &P, eval: F) -> Self
    where
        F: Fn(&P) -> Value + Send + Sync + 'static,
    {
        let value_at_zero = eval(zero);
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            value_at_zero,
            linear: None,
        }
    }

    pub fn zero(shape: (usize, usize), zero: &P) -> Self {
        Self::new("zero", zero, move |_| DMatrix::zeros(shape.0, shape.1)).with_linear_claim(true)
    }

    pub fn with_linear_claim(mut self, linear: bool) -> Self {
        self.linear = Some(linear);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value_at_zero(&self) -> &Value {
        &self.value_at_zero
    }

    pub fn linear_claim(&self) -> Option<bool> {
        self.linear
    }

    pub fn eval(&self, x: &P) -> Value {
        (self.eval)(x)
    }

    pub fn add(&self, other: &Self, zero: &P) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let mut out = Self::new(format!("({} + {})", self.label, other.label), zero, move |x| a.eval(x) + b.eval(x));
        if self.linear == Some(true) && other.linear == Some(true) {
            out.linear = Some(true);
        }
        out
    }

    pub fn scale(&self, alpha: C64, zero: &P) -> Self {
        let a = self.clone();
        let mut out = Self::new(format!("{alpha}*{}", self.label), zero, move |x| a.eval(x) * alpha);
        out.linear = self.linear;
        out
    }
}

impl MappingHandle<Vector> {
    /// Wraps an operator; values become column vectors.
    pub fn from_operator(op: &OperatorHandle) -> Self {
        let inner = op.clone();
        let zero = op.domain().zero();
        let mut out = Self::new(op.label().to_string(), &zero, move |x: &Vector| column(&inner.eval(x)));
        out.linear = op.linear_claim();
        out
    }
}

type DistFn<P> = dyn Fn(&P, &P) -> f64 + Send + Sync;
type DiffFn<P> = dyn Fn(&P, &P) -> P + Send + Sync;

/// `d_X`, `d_Y` and the shared sample set.
pub struct MappingMetric<P> {
    zero: P,
    dx: Arc<DistFn<P>>,
    difference: Option<Arc<DiffFn<P>>>,
    dy: CodomainMetric,
    samples: Vec<P>,
    seed: Option<u64>,
}

impl<P: Clone> Clone for MappingMetric<P> {
    fn clone(&self) -> Self {
        Self {
            zero: self.zero.clone(),
            dx: Arc::clone(&self.dx),
            difference: self.difference.clone(),
            dy: self.dy.clone(),
            samples: self.samples.clone(),
            seed: self.seed,
        }
    }
}

impl<P: Clone + Send + Sync + 'static> MappingMetric<P> {
    pub fn new<D>(zero: P, dx: D, dy: CodomainMetric, samples: Vec<P>) -> Self
    where
        D: Fn(&P, &P) -> f64 + Send + Sync + 'static,
    {
        Self {
            zero,
            dx: Arc::new(dx),
            difference: None,
            dy,
            samples,
            seed: None,
        }
    }

    /// Supplies `x1 − x2`, needed by the linear bridge.
    pub fn with_difference<D>(mut self, diff: D) -> Self
    where
        D: Fn(&P, &P) -> P + Send + Sync + 'static,
    {
        self.difference = Some(Arc::new(diff));
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(&self, samples: Vec<P>) -> Self {
        let mut out = self.clone();
        out.samples = samples;
        out
    }

    pub fn zero(&self) -> &P {
        &self.zero
    }

    pub fn samples(&self) -> &[P] {
        &self.samples
    }

    pub fn codomain(&self) -> &CodomainMetric {
        &self.dy
    }

    pub fn dx(&self, a: &P, b: &P) -> f64 {
        (self.dx)(a, b)
    }

    pub fn dx_zero(&self, a: &P) -> f64 {
        (self.dx)(a, &self.zero)
    }

    pub fn difference(&self, a: &P, b: &P) -> Option<P> {
        self.difference.as_ref().map(|d| d(a, b))
    }

    fn certificate_samples(&self) -> SampleSet {
        SampleSet::new(Vec::new(), &FiniteSpace::real(1, crate::spaces::NormType::L1))
            .expect("empty sample set is valid")
            .with_seed(self.seed)
    }
}

impl MappingMetric<Vector> {
    /// Norm-induced metrics on both sides.
    pub fn normed(x: &FiniteSpace, y: CodomainMetric, samples: &SampleSet) -> Self {
        let sx = x.clone();
        Self::new(
            x.zero(),
            move |a: &Vector, b: &Vector| sx.norm(&crate::spaces::sub(a, b)),
            y,
            samples.points().to_vec(),
        )
        .with_difference(|a: &Vector, b: &Vector| crate::spaces::sub(a, b))
        .with_seed(samples.seed())
    }
}

/// `max(max_{x≠0} d_Y(F1 x, F2 x)/d_X(x, 0), d_Y(F1 0, F2 0))`; ratios above
/// the extended-real cutoff are reported as `+inf` with the witness.
pub fn metric_d<P>(f1: &MappingHandle<P>, f2: &MappingHandle<P>, mm: &MappingMetric<P>) -> Result<NormEstimate, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    if mm.samples.is_empty() {
        return Err(MapError::EmptySamples);
    }
    let at_zero = mm.dy.distance(f1.value_at_zero(), f2.value_at_zero());
    let ratio_at = |i: usize| -> (f64, Option<usize>) {
        let x = &mm.samples[i];
        let dx = mm.dx_zero(x);
        if dx == 0.0 {
            return (0.0, None);
        }
        (mm.dy.distance(&f1.eval(x), &f2.eval(x)) / dx, Some(i))
    };
    let (sup, witness) = if mm.samples.len() > 256 {
        (0..mm.samples.len())
            .into_par_iter()
            .map(ratio_at)
            .reduce(|| (0.0, None), max_with_index)
    } else {
        (0..mm.samples.len()).map(ratio_at).fold((0.0, None), max_with_index)
    };
    let (value, witness) = if sup > tolerance::EXTENDED_REAL_CUTOFF {
        (f64::INFINITY, witness)
    } else if at_zero > sup {
        (at_zero, None)
    } else {
        (sup, witness)
    };
    let cert = mm.certificate_samples();
    let mut est = NormEstimate::sampled(value, &cert, None, witness);
    if let crate::opspace::Certificate::SampledLowerBound { sample_count, .. } = &mut est.certificate {
        *sample_count = mm.samples.len();
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallCheck {
    pub eps_x: f64,
    pub eps_y: f64,
    pub contained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub near_zero_ratios: Vec<f64>,
    pub near_zero_trend: Trend,
    pub far_max: f64,
    pub balls: Vec<BallCheck>,
    pub distance_to_zero: f64,
    pub member: bool,
}

/// Heuristic: the ratio sequence diverges when it is increasing over its last
/// three entries and has grown by more than 100× overall, or has overflowed.
fn trend_of(ratios: &[f64]) -> Trend {
    if ratios.iter().any(|r| !r.is_finite() || *r > tolerance::EXTENDED_REAL_CUTOFF) {
        return Trend::Diverging;
    }
    let n = ratios.len();
    if n >= 3 {
        let tail_increasing = ratios[n - 3] < ratios[n - 2] && ratios[n - 2] < ratios[n - 1];
        if tail_increasing && ratios[n - 1] > 100.0 * ratios[0].max(f64::MIN_POSITIVE) {
            return Trend::Diverging;
        }
    }
    Trend::Bounded
}

/// Evidence for finiteness of `d(F, 0)`: near-zero ratio trend, far-field
/// size, and ball-into-ball containment over all supplied points.
pub fn check_membership_criteria<P>(
    f: &MappingHandle<P>,
    mm: &MappingMetric<P>,
    near_zero: &[P],
    far: &[P],
    ball_pairs: &[(f64, f64)],
) -> Result<MembershipReport, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    let zero_value = mm.dy.zero();
    let zero_value = if zero_value.nrows() == 0 {
        f.value_at_zero().map(|_| C64::new(0.0, 0.0))
    } else {
        zero_value
    };
    let size = |x: &P| mm.dy.distance(&f.eval(x), &zero_value);
    let near_zero_ratios: Vec<f64> = near_zero
        .iter()
        .map(|x| {
            let d = mm.dx_zero(x);
            if d == 0.0 {
                0.0
            } else {
                size(x) / d
            }
        })
        .collect();
    let near_zero_trend = trend_of(&near_zero_ratios);
    let far_max = far.iter().map(size).fold(0.0, f64::max);
    let all: Vec<&P> = mm.samples.iter().chain(near_zero).chain(far).collect();
    let sizes: Vec<(f64, f64)> = all.iter().map(|x| (mm.dx_zero(x), size(x))).collect();
    let balls = ball_pairs
        .iter()
        .map(|&(eps_x, eps_y)| BallCheck {
            eps_x,
            eps_y,
            contained: sizes.iter().filter(|(dx, _)| *dx <= eps_x).all(|(_, dy)| *dy <= eps_y),
        })
        .collect::<Vec<_>>();
    let extended = mm.with_samples(all.into_iter().cloned().collect());
    let distance_to_zero = metric_d(f, &MappingHandle::zero(zero_value.shape(), &mm.zero), &extended)?.value;
    let member = distance_to_zero.is_finite() && near_zero_trend == Trend::Bounded && balls.iter().all(|b| b.contained);
    Ok(MembershipReport {
        near_zero_ratios,
        near_zero_trend,
        far_max,
        balls,
        distance_to_zero,
        member,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeVerdict {
    pub d_hat: f64,
    pub worst_margin: f64,
    pub pairs_checked: usize,
    pub holds: bool,
}

/// `d_Y(F x1, F x2) ≤ d̂(F, 0)·d_X(x1 − x2, 0)` on probe pairs, with `d̂`
/// sampled over the metric's samples plus all probe differences.
pub fn check_linear_bridge<P>(
    f: &MappingHandle<P>,
    mm: &MappingMetric<P>,
    probes: &[P],
    tol: f64,
) -> Result<BridgeVerdict, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    if f.linear_claim() != Some(true) {
        return Err(MapError::HypothesisViolated(format!("{} is not claimed linear", f.label())));
    }
    if !mm.dy.translation_invariant() {
        return Err(MapError::HypothesisViolated("codomain metric is not translation invariant".into()));
    }
    let mut closure = mm.samples.clone();
    let mut diffs = Vec::new();
    for (i, a) in probes.iter().enumerate() {
        for (j, b) in probes.iter().enumerate() {
            let d = mm
                .difference(a, b)
                .ok_or_else(|| MapError::HypothesisViolated("metric has no difference map".into()))?;
            let lhs = f.eval(&d);
            let rhs = f.eval(a) - f.eval(b);
            let gap = mm.dy.distance(&lhs, &rhs);
            let scale = mm.dy.distance(&lhs, &(&lhs * C64::new(0.0, 0.0))).max(1.0);
            if gap > 1e-9 * scale {
                return Err(MapError::NotLinearOnProbes(i, j));
            }
            closure.push(d.clone());
            diffs.push((i, j, d));
        }
    }
    let zero_map = MappingHandle::zero(f.value_at_zero().shape(), &mm.zero);
    let d_hat = metric_d(f, &zero_map, &mm.with_samples(closure))?.value;
    let mut worst = f64::INFINITY;
    let mut holds = true;
    for (i, j, d) in &diffs {
        let lhs = mm.dy.distance(&f.eval(&probes[*i]), &f.eval(&probes[*j]));
        let rhs = d_hat * mm.dx_zero(d);
        worst = worst.min(rhs - lhs);
        if !le_tol(lhs, rhs, tol) {
            holds = false;
        }
    }
    Ok(BridgeVerdict {
        d_hat,
        worst_margin: worst,
        pairs_checked: diffs.len(),
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormStructureVerdict {
    pub homogeneity_max_error: f64,
    pub triangle_margin: f64,
    pub zero_iff_vanishing: bool,
    pub translation_discrepancy: f64,
    pub holds: bool,
}

/// Normed-space axioms of `‖F‖ = d(F, 0)` on the shared samples.
pub fn norm_structure_check<P>(
    mm: &MappingMetric<P>,
    f1: &MappingHandle<P>,
    f2: &MappingHandle<P>,
    f3: &MappingHandle<P>,
    scalars: &[C64],
    tol: f64,
) -> Result<NormStructureVerdict, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    if !mm.dy.is_normed() {
        return Err(MapError::HypothesisViolated("codomain is not normed".into()));
    }
    let z = &mm.zero;
    let zero_map = MappingHandle::zero(f1.value_at_zero().shape(), z);
    let norm = |f: &MappingHandle<P>| metric_d(f, &zero_map, mm).map(|e| e.value);
    let n1 = norm(f1)?;
    let n2 = norm(f2)?;
    let mut homogeneity_max_error = 0.0_f64;
    for &a in scalars {
        let lhs = norm(&f1.scale(a, z))?;
        let rhs = a.norm() * n1;
        homogeneity_max_error = homogeneity_max_error.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    let sum = norm(&f1.add(f2, z))?;
    let triangle_margin = n1 + n2 - sum;
    let vanishes = |f: &MappingHandle<P>| {
        mm.dy.norm(f.value_at_zero()) == Some(0.0)
            && mm.samples.iter().all(|x| mm.dy.norm(&f.eval(x)) == Some(0.0))
    };
    let zero_iff_vanishing = [f1, f2, f3]
        .iter()
        .map(|f| (norm(f).map(|n| n == 0.0), vanishes(f)))
        .all(|(n, v)| n.is_ok_and(|n| n == v));
    let base = metric_d(f1, f2, mm)?.value;
    let shifted = metric_d(&f1.add(f3, z), &f2.add(f3, z), mm)?.value;
    let translation_discrepancy = (shifted - base).abs();
    let holds = homogeneity_max_error <= tol
        && le_tol(sum, n1 + n2, tol)
        && zero_iff_vanishing
        && translation_discrepancy <= tol * base.abs().max(1.0);
    Ok(NormStructureVerdict {
        homogeneity_max_error,
        triangle_margin,
        zero_iff_vanishing,
        translation_discrepancy,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessVerdict {
    /// `d(F_n, F)` per index.
    pub distances_to_limit: Vec<f64>,
    /// Largest `d(F_n, F_m)` within the last quarter of the sequence.
    pub tail_diameter: f64,
    pub diameter: f64,
    pub final_distance: f64,
    pub converged: bool,
}

/// Final distance below which a sequence counts as converged.
pub const COMPLETENESS_THRESHOLD: f64 = 1e-9;

pub fn completeness_harness<P>(
    seq: &[MappingHandle<P>],
    limit: &MappingHandle<P>,
    mm: &MappingMetric<P>,
) -> Result<CompletenessVerdict, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    if seq.is_empty() {
        return Err(MapError::HypothesisViolated("empty sequence".into()));
    }
    let n = seq.len();
    let distances_to_limit = seq
        .iter()
        .map(|f| metric_d(f, limit, mm).map(|e| e.value))
        .collect::<Result<Vec<_>, _>>()?;
    let tail_start = n - (n / 4).max(2).min(n);
    let mut diameter = 0.0_f64;
    let mut tail_diameter = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            let d = metric_d(&seq[i], &seq[j], mm)?.value;
            diameter = diameter.max(d);
            if j >= tail_start {
                tail_diameter = tail_diameter.max(d);
            }
        }
    }
    if tail_diameter > 1e-6 * diameter.max(1.0) {
        return Err(MapError::NotCauchy {
            tail: tail_diameter,
            overall: diameter,
        });
    }
    let final_distance = distances_to_limit[n - 1];
    Ok(CompletenessVerdict {
        distances_to_limit,
        tail_diameter,
        diameter,
        final_distance,
        converged: final_distance < COMPLETENESS_THRESHOLD,
    })
}

/// A mapping into a normed algebra; `unit` marks the identity element.
#[derive(Debug, Clone)]
pub struct AlgebraElement<P> {
    pub mapping: MappingHandle<P>,
    pub unit: bool,
}

impl<P: 'static> AlgebraElement<P> {
    pub fn new(mapping: MappingHandle<P>) -> Self {
        Self { mapping, unit: false }
    }
}

/// `(F1 ∗ F2)(x) = F1(x)F2(x)/d_X(x, 0)`, and `F1(0)F2(0)` at the origin.
pub fn star_multiply<P>(
    f1: &AlgebraElement<P>,
    f2: &AlgebraElement<P>,
    mm: &MappingMetric<P>,
) -> Result<AlgebraElement<P>, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    mm.dy.check_algebra()?;
    let (a, b) = (f1.mapping.clone(), f2.mapping.clone());
    let dx = Arc::clone(&mm.dx);
    let zero = mm.zero.clone();
    let mapping = MappingHandle::new(
        format!("{} * {}", f1.mapping.label(), f2.mapping.label()),
        &mm.zero,
        move |x| {
            let prod = a.eval(x) * b.eval(x);
            let d = dx(x, &zero);
            if d == 0.0 {
                prod
            } else {
                prod.unscale(d)
            }
        },
    );
    Ok(AlgebraElement { mapping, unit: false })
}

/// `e(x) = d_X(x, 0)·1`, `e(0) = 1`.
pub fn unit_element<P>(mm: &MappingMetric<P>) -> Result<AlgebraElement<P>, MapError>
where
    P: Clone + Send + Sync + 'static,
{
    let one = mm.dy.unit()?;
    let dx = Arc::clone(&mm.dx);
    let zero = mm.zero.clone();
    let mapping = MappingHandle::new("e", &mm.zero, move |x| {
        let d = dx(x, &zero);
        if d == 0.0 {
            one.clone()
        } else {
            &one * C64::new(d, 0.0)
        }
    });
    Ok(AlgebraElement { mapping, unit: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspace::{estimate_norm, NormKind};
    use crate::spaces::NormType;

    fn r1() -> FiniteSpace {
        FiniteSpace::real(1, NormType::L1)
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn scalar_map(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> MappingHandle<Vector> {
        MappingHandle::new(label, &vec![c(0.0)], move |x: &Vector| scalar(c(f(x[0].re))))
    }

    fn mm(values: &[f64]) -> MappingMetric<Vector> {
        MappingMetric::normed(&r1(), CodomainMetric::Scalar, &SampleSet::scalars(values, &r1()).unwrap())
    }

    #[test]
    fn metric_examples() {
        let m = mm(&[1.0, -1.0, 2.0, -2.0]);
        let id = scalar_map("x", |x| x).with_linear_claim(true);
        let zero = MappingHandle::zero((1, 1), &vec![c(0.0)]);
        assert_eq!(metric_d(&id, &id, &m).unwrap().value, 0.0);
        assert_eq!(metric_d(&id, &zero, &m).unwrap().value, 1.0);
        let blow = scalar_map("1/x", |x| if x == 0.0 { 0.0 } else { 1.0 / x });
        let tiny = mm(&[1e-9]);
        let est = metric_d(&blow, &zero, &tiny).unwrap();
        assert_eq!(est.value, f64::INFINITY);
        assert_eq!(est.witness, Some(0));
    }

    #[test]
    fn metric_axioms_on_samples() {
        let m = mm(&[0.5, -1.0, 2.0, 3.0, 0.0]);
        let maps = [scalar_map("a", |x| x * x), scalar_map("b", |x| x.sin()), scalar_map("c", |x| 1.0 - x)];
        for f in &maps {
            for g in &maps {
                let dfg = metric_d(f, g, &m).unwrap().value;
                assert_eq!(dfg, metric_d(g, f, &m).unwrap().value);
                for h in &maps {
                    let via = metric_d(f, h, &m).unwrap().value + metric_d(h, g, &m).unwrap().value;
                    assert!(le_tol(dfg, via, 1e-12));
                }
            }
        }
    }

    #[test]
    fn recovers_operator_norm() {
        let x = FiniteSpace::real(2, NormType::L2);
        let s = SampleSet::halton(&x, 40, 2.0, 9).unwrap();
        let op = OperatorHandle::new("nl", x.clone(), x.clone(), |v| {
            vec![v[0] * v[1] + 0.3, v[0].sin()]
        });
        let m = MappingMetric::normed(&x, CodomainMetric::VectorNorm(x.clone()), &s);
        let zero = MappingHandle::zero((2, 1), &x.zero());
        let d = metric_d(&MappingHandle::from_operator(&op), &zero, &m).unwrap().value;
        assert_eq!(d, estimate_norm(&op, NormKind::P, &s).unwrap().value);
    }

    #[test]
    fn membership_examples() {
        let m = mm(&[0.5, 1.0, 2.0]);
        let near: Vec<Vector> = (1..8).map(|k| vec![c(10f64.powi(-k))]).collect();
        let far: Vec<Vector> = [10.0, 100.0].iter().map(|&v| vec![c(v)]).collect();
        let f = scalar_map("sin", f64::sin);
        let d = metric_d(&f, &MappingHandle::zero((1, 1), &vec![c(0.0)]), &m.with_samples(
            m.samples().iter().chain(&near).chain(&far).cloned().collect(),
        ))
        .unwrap()
        .value;
        let balls: Vec<(f64, f64)> = [0.1_f64, 1.0, 5.0].iter().map(|&e| (e, d * e.max(1.0))).collect();
        let rep = check_membership_criteria(&f, &m, &near, &far, &balls).unwrap();
        assert!(rep.member, "{rep:?}");

        let zero = MappingHandle::zero((1, 1), &vec![c(0.0)]);
        let rep = check_membership_criteria(&zero, &m, &near, &far, &[(1.0, 0.0)]).unwrap();
        assert!(rep.member && rep.far_max == 0.0);

        let blow = scalar_map("1/x", |x| if x == 0.0 { 0.0 } else { 1.0 / x.abs() });
        let rep = check_membership_criteria(&blow, &m, &near, &far, &[]).unwrap();
        assert_eq!(rep.near_zero_trend, Trend::Diverging);
        assert!(!rep.member);
    }

    #[test]
    fn bridge_examples() {
        let m = mm(&[1.0, -2.0]);
        let probes: Vec<Vector> = [0.0, 1.0, 2.0].iter().map(|&v| vec![c(v)]).collect();
        let id = scalar_map("x", |x| x).with_linear_claim(true);
        let v = check_linear_bridge(&id, &m, &probes, 1e-12).unwrap();
        assert!(v.holds && v.d_hat == 1.0);
        let three = scalar_map("3x", |x| 3.0 * x).with_linear_claim(true);
        let v = check_linear_bridge(&three, &m, &probes, 1e-12).unwrap();
        assert!(v.holds && v.d_hat == 3.0);
        let sq = scalar_map("x^2", |x| x * x).with_linear_claim(true);
        assert!(matches!(check_linear_bridge(&sq, &m, &probes, 1e-12), Err(MapError::NotLinearOnProbes(..))));
    }

    #[test]
    fn norm_structure_examples() {
        let m = mm(&[0.25, -1.0, 3.0, 0.0]);
        let x = scalar_map("x", |x| x);
        let neg = scalar_map("-x", |x| -x);
        let f3 = scalar_map("cos", f64::cos);
        let v = norm_structure_check(&m, &x, &neg, &f3, &[c(2.0), c(-0.5)], 1e-12).unwrap();
        assert!(v.holds, "{v:?}");
        let zero = MappingHandle::zero((1, 1), &vec![c(0.0)]);
        let sum = x.add(&neg, &vec![c(0.0)]);
        assert_eq!(metric_d(&sum, &zero, &m).unwrap().value, 0.0);
        assert_eq!(metric_d(&x.scale(c(2.0), &vec![c(0.0)]), &zero, &m).unwrap().value, 2.0);
    }

    #[test]
    fn completeness_examples() {
        let m = mm(&[0.5, 1.0, -2.0, 0.0]);
        let base = scalar_map("x", |x| x);
        let g = scalar_map("x^2", |x| x * x);
        let seq: Vec<_> = (0..40)
            .map(|n| base.add(&g.scale(c(2f64.powi(-n)), &vec![c(0.0)]), &vec![c(0.0)]))
            .collect();
        let zero = MappingHandle::zero((1, 1), &vec![c(0.0)]);
        let dg = metric_d(&g, &zero, &m).unwrap().value;
        let v = completeness_harness(&seq, &base, &m).unwrap();
        assert!(v.converged);
        for (n, d) in v.distances_to_limit.iter().enumerate() {
            assert_eq!(*d, 2f64.powi(-(n as i32)) * dg);
        }
        let v = completeness_harness(&vec![base.clone(); 5], &base, &m).unwrap();
        assert_eq!(v.diameter, 0.0);
        let alt: Vec<_> = (0..8).map(|n| if n % 2 == 0 { base.clone() } else { g.clone() }).collect();
        assert!(matches!(completeness_harness(&alt, &base, &m), Err(MapError::NotCauchy { .. })));
    }

    #[test]
    fn algebra_examples() {
        let m = mm(&[2.0, -1.0, 0.5, 0.0]);
        let x = AlgebraElement::new(scalar_map("x", |x| x));
        let xx = star_multiply(&x, &x, &m).unwrap();
        assert_eq!(xx.mapping.eval(&vec![c(2.0)])[(0, 0)], c(2.0));
        let e = unit_element(&m).unwrap();
        assert_eq!(e.mapping.value_at_zero()[(0, 0)], c(1.0));
        assert_eq!(e.mapping.eval(&vec![c(2.0)])[(0, 0)], c(2.0));
        let zero = MappingHandle::zero((1, 1), &vec![c(0.0)]);
        assert_eq!(metric_d(&e.mapping, &zero, &m).unwrap().value, 1.0);
        let f = AlgebraElement::new(scalar_map("f", |x| x.sin() + 0.25));
        let fe = star_multiply(&f, &e, &m).unwrap();
        let ef = star_multiply(&e, &f, &m).unwrap();
        for x in m.samples() {
            assert!((fe.mapping.eval(x) - f.mapping.eval(x)).norm() < 1e-15);
            assert!((ef.mapping.eval(x) - f.mapping.eval(x)).norm() < 1e-15);
        }
        let z = AlgebraElement::new(zero.clone());
        assert_eq!(metric_d(&star_multiply(&z, &f, &m).unwrap().mapping, &zero, &m).unwrap().value, 0.0);

        let frob = MappingMetric::normed(&r1(), CodomainMetric::Frobenius(2), &SampleSet::scalars(&[1.0], &r1()).unwrap());
        assert_eq!(unit_element(&frob).unwrap_err(), MapError::NotUnital);
        let vecs = MappingMetric::normed(
            &r1(),
            CodomainMetric::VectorNorm(FiniteSpace::real(2, NormType::L2)),
            &SampleSet::scalars(&[1.0], &r1()).unwrap(),
        );
        assert_eq!(unit_element(&vecs).unwrap_err(), MapError::NotAlgebra);
    }
}
