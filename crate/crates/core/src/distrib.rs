//! Functionals on test functions: point evaluations, derivative evaluations,
//! integral functionals, their norms, the position and momentum operators,
//! and ∗-squares.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metricmaps::{scalar, star_multiply, AlgebraElement, CodomainMetric, MapError, MappingHandle, MappingMetric};
use crate::quadrature::{integrate_adaptive, Integral, PanelRule, QuadratureBudgetExceeded};
use crate::testfn::{frechet_norm, BumpFamily, FrechetMetricParams, MetricValue, MetricVariant, TestFnError, TestFunction};

/// Relative accuracy demanded of kernel L1 norms.
pub const KERNEL_L1_TOLERANCE: f64 = 1e-10;
/// Agreement required between a kernel's rule and its doubled rule before
/// falling back to adaptive integration.
pub const KERNEL_EVAL_TOLERANCE: f64 = 1e-9;
pub const MAX_PANELS: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistribError {
    #[error(transparent)]
    TestFn(#[from] TestFnError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureBudgetExceeded),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("[{lo}, {hi}] is not covered by K_N")]
    SupportNotCovered { lo: f64, hi: f64 },
    #[error("no analytic upper bound for `{0}`")]
    NoUpperBoundAvailable(String),
    #[error("empty probe family")]
    EmptyFamily,
    #[error("non-finite value from `{0}`")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

type KernelFn = dyn Fn(f64) -> C64 + Send + Sync;

/// A kernel `m` on `[lo, hi]` with a fixed panel rule and its L1 norm.
#[derive(Clone)]
pub struct IntegralKernel {
    label: String,
    m: Arc<KernelFn>,
    breaks: Vec<f64>,
    rule: PanelRule,
    l1_norm: f64,
    l1_error: f64,
}

impl fmt::Debug for IntegralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegralKernel")
            .field("label", &self.label)
            .field("support", &self.support())
            .field("panels", &self.rule.panels)
            .field("l1_norm", &self.l1_norm)
            .field("l1_error", &self.l1_error)
            .finish()
    }
}

impl IntegralKernel {
    pub fn new<F>(label: impl Into<String>, lo: f64, hi: f64, m: F) -> Result<Self, DistribError>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Self::with_breaks(label, vec![lo, hi], m)
    }

    /// `breaks` are the support ends plus any interior kinks of `m`.
    pub fn with_breaks<F>(label: impl Into<String>, breaks: Vec<f64>, m: F) -> Result<Self, DistribError>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(DistribError::InvalidParameter("kernel breaks must be finite and increasing".into()));
        }
        let l1 = integrate_adaptive(|t| C64::new(m(t).norm(), 0.0), &breaks, KERNEL_L1_TOLERANCE, 2, MAX_PANELS)?;
        let per_segment = l1.panels / (breaks.len() - 1);
        let rule = PanelRule::with_breaks(&breaks, per_segment);
        let l1_norm = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| w * m(*t).norm()).sum();
        Ok(Self {
            label: label.into(),
            m: Arc::new(m),
            breaks,
            rule,
            l1_norm,
            l1_error: l1.error,
        })
    }

    /// The indicator of `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self, DistribError> {
        Self::new(format!("1[{lo},{hi}]"), lo, hi, |_| C64::new(1.0, 0.0))
    }

    pub fn zero(lo: f64, hi: f64) -> Result<Self, DistribError> {
        Self::new("0", lo, hi, |_| C64::new(0.0, 0.0))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap_or(&self.breaks[0]))
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn l1_error(&self) -> f64 {
        self.l1_error
    }

    pub fn panels(&self) -> usize {
        self.rule.panels
    }

    pub fn m(&self, t: f64) -> C64 {
        (self.m)(t)
    }

    /// Quadrature nodes of the fixed rule.
    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }
}

/// The ramp `λ_n(t) = n(t − c)` on `[c, c + 1/n]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RampWitness {
    pub n: u32,
    pub c: f64,
}

impl RampWitness {
    pub fn new(n: u32, c: f64) -> Result<Self, DistribError> {
        if n == 0 || !c.is_finite() {
            return Err(DistribError::InvalidParameter(format!("ramp n={n}, c={c}")));
        }
        Ok(Self { n, c })
    }

    /// `‖λ_n‖_{L1} = 1/(2n)`.
    pub fn l1_norm(&self) -> f64 {
        0.5 / self.n as f64
    }

    pub fn support(&self) -> (f64, f64) {
        (self.c, self.c + 1.0 / self.n as f64)
    }

    pub fn kernel(&self) -> Result<IntegralKernel, DistribError> {
        let (n, c) = (self.n as f64, self.c);
        let (lo, hi) = self.support();
        IntegralKernel::new(format!("ramp(n={}, c={c})", self.n), lo, hi, move |t| C64::new(n * (t - c), 0.0))
    }
}

/// `δ_c(f) = f(c)`.
pub fn eval_delta(c: &[f64], f: &TestFunction) -> Result<C64, DistribError> {
    Ok(f.eval(c)?)
}

/// `δ^(k)(f) = (−1)^{|k|} ∂^k f(0)`.
pub fn eval_deriv_delta(k: &[u16], f: &TestFunction) -> Result<C64, DistribError> {
    let origin = vec![0.0; f.dimension()];
    let d = f.derivative_at(k, &origin)?;
    let order: u32 = k.iter().map(|&v| v as u32).sum();
    Ok(if order % 2 == 1 { -d } else { d })
}

/// `Λ_m(f) = ∫ m f` on a one-dimensional domain.
pub fn eval_lambda_m(kernel: &IntegralKernel, f: &TestFunction) -> Result<Integral, DistribError> {
    if f.dimension() != 1 {
        return Err(TestFnError::DimensionMismatch {
            expected: 1,
            got: f.dimension(),
        }
        .into());
    }
    let (lo, hi) = kernel.support();
    let (lo, hi) = match f.support() {
        Some(s) => (lo.max(s.lo[0]), hi.min(s.hi[0])),
        None => (lo, hi),
    };
    if lo >= hi {
        return Ok(Integral {
            value: C64::new(0.0, 0.0),
            error: 0.0,
            panels: 0,
        });
    }
    let integrand = |t: f64| kernel.m(t) * f.value(&[t]);
    let base = kernel.rule.integrate(integrand);
    let fine = PanelRule::with_breaks(&kernel.breaks, 2 * kernel.rule.panels / (kernel.breaks.len() - 1)).integrate(integrand);
    let err = (base - fine).norm();
    if err <= KERNEL_EVAL_TOLERANCE * (1.0 + fine.norm()) {
        return Ok(Integral {
            value: base,
            error: err,
            panels: kernel.rule.panels,
        });
    }
    // f varies on a finer scale than the kernel rule resolves
    let mut breaks: Vec<f64> = kernel.breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    breaks.insert(0, lo);
    breaks.push(hi);
    Ok(integrate_adaptive(integrand, &breaks, KERNEL_EVAL_TOLERANCE, 4, MAX_PANELS)?)
}

/// What a functional is, for reporting and analytic bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FunctionalTag {
    Zero,
    Delta { c: Vec<f64> },
    DerivDelta { k: Vec<u16> },
    Integral { kernel: String, lo: f64, hi: f64, l1: f64 },
    Scaled { alpha: (f64, f64), inner: Box<FunctionalTag> },
    Position(Box<FunctionalTag>),
    Momentum { alpha: u16, inner: Box<FunctionalTag> },
    StarSquare(Box<FunctionalTag>),
    User(String),
}

type FunctionalFn = dyn Fn(&TestFunction) -> Result<C64, DistribError> + Send + Sync;

/// A functional `Λ: test functions → C`.
#[derive(Clone)]
pub struct FunctionalHandle {
    label: String,
    tag: FunctionalTag,
    eval: Arc<FunctionalFn>,
    sample_points: Vec<Vec<f64>>,
}

impl fmt::Debug for FunctionalHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalHandle")
            .field("label", &self.label)
            .field("tag", &self.tag)
            .finish()
    }
}

impl FunctionalHandle {
    pub fn user<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&TestFunction) -> Result<C64, DistribError> + Send + Sync + 'static,
    {
        let label = label.into();
        Self {
            tag: FunctionalTag::User(label.clone()),
            label,
            eval: Arc::new(eval),
            sample_points: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self {
            label: "0".into(),
            tag: FunctionalTag::Zero,
            eval: Arc::new(|_| Ok(C64::new(0.0, 0.0))),
            sample_points: Vec::new(),
        }
    }

    pub fn delta(c: Vec<f64>) -> Self {
        let at = c.clone();
        Self {
            label: format!("delta({c:?})"),
            tag: FunctionalTag::Delta { c: c.clone() },
            eval: Arc::new(move |f| eval_delta(&at, f)),
            sample_points: vec![c],
        }
    }

    pub fn deriv_delta(k: Vec<u16>) -> Self {
        let kk = k.clone();
        let dim = k.len();
        Self {
            label: format!("dderiv({k:?})"),
            tag: FunctionalTag::DerivDelta { k },
            eval: Arc::new(move |f| eval_deriv_delta(&kk, f)),
            sample_points: vec![vec![0.0; dim]],
        }
    }

    pub fn integral(kernel: IntegralKernel) -> Self {
        let (lo, hi) = kernel.support();
        let sample_points = kernel.nodes().iter().map(|t| vec![*t]).collect();
        let tag = FunctionalTag::Integral {
            kernel: kernel.label().to_string(),
            lo,
            hi,
            l1: kernel.l1_norm(),
        };
        Self {
            label: format!("Lambda[{}]", kernel.label()),
            tag,
            eval: Arc::new(move |f| Ok(eval_lambda_m(&kernel, f)?.value)),
            sample_points,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tag(&self) -> &FunctionalTag {
        &self.tag
    }

    /// Points at which the functional reads its argument.
    pub fn sample_points(&self) -> &[Vec<f64>] {
        &self.sample_points
    }

    pub fn eval(&self, f: &TestFunction) -> Result<C64, DistribError> {
        (self.eval)(f)
    }

    pub fn scale(&self, alpha: C64) -> Self {
        let inner = self.clone();
        Self {
            label: format!("{alpha}*{}", self.label),
            tag: FunctionalTag::Scaled {
                alpha: (alpha.re, alpha.im),
                inner: Box::new(self.tag.clone()),
            },
            eval: Arc::new(move |f| Ok(alpha * inner.eval(f)?)),
            sample_points: self.sample_points.clone(),
        }
    }
}

/// `|Λ(αf + g) − αΛ(f) − Λ(g)|` maximised over the pairs, relative to `1 + |Λ(αf+g)|`.
pub fn linearity_defect(
    functional: &FunctionalHandle,
    pairs: &[(TestFunction, TestFunction)],
    alpha: C64,
) -> Result<f64, DistribError> {
    let mut worst = 0.0_f64;
    for (f, g) in pairs {
        let lhs = functional.eval(&f.scale(alpha).add(g))?;
        let rhs = alpha * functional.eval(f)? + functional.eval(g)?;
        worst = worst.max((lhs - rhs).norm() / (1.0 + lhs.norm()));
    }
    Ok(worst)
}

fn variant_name(params: &FrechetMetricParams) -> &'static str {
    match params.variant {
        MetricVariant::CInfinity(_) => "C-infinity",
        MetricVariant::Distribution { .. } => "D(Omega)",
    }
}

/// The set against which analytic chains need containment: `K_N`, or Ω.
fn covers(params: &FrechetMetricParams, dim: usize, pts: &[Vec<f64>]) -> bool {
    match params.region(params.n, dim) {
        Some(region) => pts.iter().all(|p| region.contains(p)),
        None => true,
    }
}

/// Analytic upper bound for the norm of `tag`, with the chain that justifies it.
pub fn analytic_upper_bound(tag: &FunctionalTag, params: &FrechetMetricParams, dim: usize) -> Result<(f64, String), DistribError> {
    let none = || DistribError::NoUpperBoundAvailable(format!("{tag:?}"));
    match tag {
        FunctionalTag::Zero => Ok((0.0, "zero functional".into())),
        FunctionalTag::Delta { c } if covers(params, dim, std::slice::from_ref(c)) => {
            Ok((1.0, "|f(c)| <= p_N(f) <= d(f,0)".into()))
        }
        FunctionalTag::DerivDelta { k } => {
            let order: usize = k.iter().map(|&v| v as usize).sum();
            if order <= params.n && covers(params, dim, &[vec![0.0; dim]]) {
                Ok((1.0, "|f^(k)(0)| <= p_N(f) <= d(f,0) for |k| <= N".into()))
            } else {
                Err(none())
            }
        }
        FunctionalTag::Integral { lo, hi, l1, .. } if covers(params, dim, &[vec![*lo], vec![*hi]]) => {
            Ok((*l1, "|Lambda_m f| <= ||m||_L1 p_N(f) <= ||m||_L1 d(f,0)".into()))
        }
        FunctionalTag::Scaled { alpha, inner } => {
            let (b, why) = analytic_upper_bound(inner, params, dim)?;
            Ok((C64::new(alpha.0, alpha.1).norm() * b, format!("|alpha| * ({why})")))
        }
        FunctionalTag::Position(inner) => match inner.as_ref() {
            FunctionalTag::Delta { c } if c.len() == 1 && covers(params, dim, std::slice::from_ref(c)) => {
                Ok((c[0].abs(), "|c f(c)| <= |c| p_N(f)".into()))
            }
            _ => Err(none()),
        },
        _ => Err(none()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRatio {
    pub probe: String,
    pub abs_value: f64,
    pub distance: f64,
    pub ratio: f64,
}

/// Sampled lower bound of `‖Λ‖ = sup |Λ(f)|/d(f,0)` with an analytic upper bound when one exists.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalNorm {
    pub functional: String,
    pub lower: f64,
    pub upper: Option<f64>,
    pub upper_chain: Option<String>,
    pub variant: &'static str,
    pub n: usize,
    pub witness: Option<usize>,
    pub probes: Vec<ProbeRatio>,
}

impl FunctionalNorm {
    /// Probes whose ratio exceeds the upper bound by more than `tol`.
    pub fn violations(&self, tol: f64) -> usize {
        match self.upper {
            Some(u) => self.probes.iter().filter(|p| p.ratio > u + tol).count(),
            None => 0,
        }
    }

    pub fn ratio_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["probe", "abs_value", "distance", "ratio"]);
        for p in &self.probes {
            let _ = w.write_record([
                p.probe.clone(),
                format!("{:e}", p.abs_value),
                format!("{:e}", p.distance),
                format!("{:e}", p.ratio),
            ]);
        }
        String::from_utf8_lossy(&w.into_inner().unwrap_or_default()).into_owned()
    }
}

/// `params` with the functional's read points added to every grid.
pub fn params_for(functional: &FunctionalHandle, params: &FrechetMetricParams) -> FrechetMetricParams {
    let mut p = params.clone();
    p.extra_points.extend(functional.sample_points().iter().cloned());
    p
}

pub fn functional_norm(
    functional: &FunctionalHandle,
    family: &[TestFunction],
    params: &FrechetMetricParams,
) -> Result<FunctionalNorm, DistribError> {
    if family.is_empty() {
        return Err(DistribError::EmptyFamily);
    }
    let dim = family[0].dimension();
    let grid_params = params_for(functional, params);
    let probes = family
        .par_iter()
        .map(|f| {
            let value = functional.eval(f)?;
            let d = frechet_norm(f, &grid_params)?.value;
            let ratio = if d > 0.0 { value.norm() / d } else { 0.0 };
            Ok(ProbeRatio {
                probe: f.label().to_string(),
                abs_value: value.norm(),
                distance: d,
                ratio,
            })
        })
        .collect::<Result<Vec<_>, DistribError>>()?;
    let mut lower = 0.0;
    let mut witness = None;
    for (i, p) in probes.iter().enumerate() {
        if p.ratio > lower {
            lower = p.ratio;
            witness = Some(i);
        }
    }
    let (upper, upper_chain) = match analytic_upper_bound(functional.tag(), params, dim) {
        Ok((u, why)) => (Some(u), Some(why)),
        Err(DistribError::NoUpperBoundAvailable(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(FunctionalNorm {
        functional: functional.label().to_string(),
        lower,
        upper,
        upper_chain,
        variant: variant_name(params),
        n: params.n,
        witness,
        probes,
    })
}

/// `F(Λ)(φ) = Λ(x·φ)` in one dimension.
pub fn position_operator(functional: &FunctionalHandle) -> FunctionalHandle {
    let inner = functional.clone();
    FunctionalHandle {
        label: format!("X[{}]", functional.label),
        tag: FunctionalTag::Position(Box::new(functional.tag.clone())),
        eval: Arc::new(move |phi| {
            let x = TestFunction::coordinate(0, phi.dimension());
            inner.eval(&x.mul(phi))
        }),
        sample_points: functional.sample_points.clone(),
    }
}

/// `F(Λ)(φ) = (−1)^α Λ(φ^{(α)})` in one dimension.
pub fn momentum_operator(functional: &FunctionalHandle, alpha: u16) -> FunctionalHandle {
    let inner = functional.clone();
    FunctionalHandle {
        label: format!("D^{alpha}[{}]", functional.label),
        tag: FunctionalTag::Momentum {
            alpha,
            inner: Box::new(functional.tag.clone()),
        },
        eval: Arc::new(move |phi| {
            let d = phi.derivative(&[alpha])?;
            let v = inner.eval(&d)?;
            Ok(if alpha % 2 == 1 { -v } else { v })
        }),
        sample_points: functional.sample_points.clone(),
    }
}

/// Ratios `‖F(δ_c)‖ / ‖δ_c‖` for the position operator over the given centers.
#[derive(Debug, Clone, Serialize)]
pub struct PositionNormReport {
    pub centers: Vec<f64>,
    pub ratios: Vec<f64>,
    pub estimate: f64,
    /// `sup_{c ∈ K_N} |c|`.
    pub bound: f64,
    /// Largest `|F(δ_c)φ − c·δ_c φ|` over centers and probes.
    pub max_pointwise_gap: f64,
}

pub fn position_norm_over_deltas(
    centers: &[f64],
    family: &[TestFunction],
    params: &FrechetMetricParams,
) -> Result<PositionNormReport, DistribError> {
    if family.is_empty() {
        return Err(DistribError::EmptyFamily);
    }
    let mut grid_params = params.clone();
    grid_params.extra_points.extend(centers.iter().map(|c| vec![*c]));
    let distances = family
        .par_iter()
        .map(|f| Ok(frechet_norm(f, &grid_params)?.value))
        .collect::<Result<Vec<f64>, DistribError>>()?;
    let mut ratios = Vec::with_capacity(centers.len());
    let mut gap = 0.0_f64;
    for &c in centers {
        let delta = FunctionalHandle::delta(vec![c]);
        let image = position_operator(&delta);
        let scaled = delta.scale(C64::new(c, 0.0));
        let (mut num, mut den) = (0.0_f64, 0.0_f64);
        for (f, &d) in family.iter().zip(&distances) {
            let a = image.eval(f)?;
            gap = gap.max((a - scaled.eval(f)?).norm());
            if d > 0.0 {
                num = num.max(a.norm() / d);
                den = den.max(delta.eval(f)?.norm() / d);
            }
        }
        ratios.push(if den > 0.0 { num / den } else { 0.0 });
    }
    let bound = match params.region(params.n, 1) {
        Some(k) => k.lo[0].abs().max(k.hi[0].abs()),
        None => f64::INFINITY,
    };
    Ok(PositionNormReport {
        centers: centers.to_vec(),
        estimate: ratios.iter().cloned().fold(0.0, f64::max),
        ratios,
        bound,
        max_pointwise_gap: gap,
    })
}

/// Coordinate-search settings for the momentum witness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSearch {
    pub max_evaluations: usize,
    pub min_step: f64,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        Self {
            max_evaluations: 80,
            min_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchStep {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
    pub value: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub n: u32,
    pub c: f64,
    /// `max |F(Λ_n)φ| / d⁺(φ,0)` with `d⁺` the inflated metric estimate.
    pub numerator_lb: f64,
    /// Same maximum with the plain grid metric in the denominator.
    pub numerator_grid: f64,
    /// `‖λ_n‖_{L1} = 1/(2n)`.
    pub denominator_ub: f64,
    pub certified_ratio: f64,
    /// Whether the certified ratio reaches `2n`.
    pub attains_2n: bool,
    pub best: Option<BumpFamily>,
    pub trace: Vec<SearchStep>,
}

struct WitnessObjective<'a> {
    functional: &'a FunctionalHandle,
    params: FrechetMetricParams,
    evaluations: usize,
}

impl WitnessObjective<'_> {
    fn score(&mut self, b: &BumpFamily) -> Result<(f64, f64, f64), DistribError> {
        self.evaluations += 1;
        let phi = b.to_test_function()?;
        let v = self.functional.eval(&phi)?.norm();
        let d: MetricValue = frechet_norm(&phi, &self.params)?;
        let grid = if d.value > 0.0 { v / d.value } else { 0.0 };
        let certified = if d.upper > 0.0 { v / d.upper } else { 0.0 };
        Ok((certified, grid, v))
    }
}

/// Certified lower bound of `‖F(Λ_n)‖/‖Λ_n‖` for `F = d/dt`.
pub fn momentum_witness_ratio(
    witness: &RampWitness,
    family: &[BumpFamily],
    params: &FrechetMetricParams,
    search: &WitnessSearch,
) -> Result<WitnessReport, DistribError> {
    if family.is_empty() {
        return Err(DistribError::EmptyFamily);
    }
    let (lo, hi) = witness.support();
    if !covers(params, 1, &[vec![lo], vec![hi]]) {
        return Err(DistribError::SupportNotCovered { lo, hi });
    }
    let lambda = FunctionalHandle::integral(witness.kernel()?);
    let image = momentum_operator(&lambda, 1);
    let mut obj = WitnessObjective {
        functional: &image,
        params: params_for(&lambda, params),
        evaluations: 0,
    };
    let mut trace = Vec::new();
    let mut best: Option<(BumpFamily, f64, f64)> = None;
    let record = |b: &BumpFamily, score: (f64, f64, f64), trace: &mut Vec<SearchStep>, best: &mut Option<(BumpFamily, f64, f64)>| {
        if best.as_ref().is_none_or(|(_, s, _)| score.0 > *s) {
            *best = Some((b.clone(), score.0, score.1));
            trace.push(SearchStep {
                center: b.center[0],
                radius: b.radius,
                amplitude: b.amplitude.norm(),
                value: score.2,
                ratio: score.0,
            });
            true
        } else {
            false
        }
    };
    for b in family {
        let s = obj.score(b)?;
        record(b, s, &mut trace, &mut best);
    }
    // coordinate search over (center, log radius, log amplitude)
    let mut steps = [0.25, 0.5, 1.0];
    while obj.evaluations < search.max_evaluations && steps.iter().any(|s| *s >= search.min_step) {
        let Some((current, _, _)) = best.clone() else { break };
        let mut improved = false;
        for (axis, step) in steps.iter().enumerate() {
            for sign in [1.0, -1.0] {
                if obj.evaluations >= search.max_evaluations {
                    break;
                }
                let mut cand = current.clone();
                match axis {
                    0 => cand.center[0] += sign * step,
                    1 => cand.radius *= (sign * step).exp(),
                    _ => cand.amplitude *= (sign * step).exp(),
                }
                let s = obj.score(&cand)?;
                if record(&cand, s, &mut trace, &mut best) {
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
        }
    }
    let (best_bump, num, grid) = best.map(|(b, s, g)| (Some(b), s, g)).unwrap_or((None, 0.0, 0.0));
    let den = witness.l1_norm();
    let certified = num / den;
    Ok(WitnessReport {
        n: witness.n,
        c: witness.c,
        numerator_lb: num,
        numerator_grid: grid,
        denominator_ub: den,
        certified_ratio: certified,
        attains_2n: certified >= 2.0 * witness.n as f64,
        best: best_bump,
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessLadder {
    pub reports: Vec<WitnessReport>,
    pub strictly_increasing: bool,
    /// `ratio(n_{j+1}) / ratio(n_j)`.
    pub growth: Vec<f64>,
}

/// Runs the witness over an increasing ladder of `n`.
pub fn momentum_witness_ladder(
    ns: &[u32],
    c: f64,
    family: &[BumpFamily],
    params: &FrechetMetricParams,
    search: &WitnessSearch,
) -> Result<WitnessLadder, DistribError> {
    let reports = ns
        .iter()
        .map(|&n| momentum_witness_ratio(&RampWitness::new(n, c)?, family, params, search))
        .collect::<Result<Vec<_>, _>>()?;
    let growth: Vec<f64> = reports
        .windows(2)
        .map(|w| w[1].certified_ratio / w[0].certified_ratio)
        .collect();
    Ok(WitnessLadder {
        strictly_increasing: reports.windows(2).all(|w| w[1].certified_ratio > w[0].certified_ratio),
        growth,
        reports,
    })
}

/// `(Λ∗Λ)(f) = Λ(f)²/d(f,0)`, built with the mapping-algebra product.
pub fn star_square(functional: &FunctionalHandle, params: &FrechetMetricParams, dim: usize) -> Result<FunctionalHandle, DistribError> {
    let grid_params = params_for(functional, params);
    let dx_params = grid_params.clone();
    let mm = MappingMetric::new(
        TestFunction::zero(dim),
        move |a: &TestFunction, b: &TestFunction| {
            frechet_norm(&a.sub(b), &dx_params).map(|m| m.value).unwrap_or(f64::NAN)
        },
        CodomainMetric::Scalar,
        Vec::new(),
    );
    let inner = functional.clone();
    let mapping = MappingHandle::new(functional.label(), mm.zero(), move |f: &TestFunction| {
        scalar(inner.eval(f).unwrap_or(C64::new(f64::NAN, f64::NAN)))
    });
    let element = AlgebraElement::new(mapping);
    let square = star_multiply(&element, &element, &mm)?;
    let label = format!("{0}*{0}", functional.label());
    let err_label = label.clone();
    let check = functional.clone();
    Ok(FunctionalHandle {
        label,
        tag: FunctionalTag::StarSquare(Box::new(functional.tag.clone())),
        eval: Arc::new(move |f| {
            // surface evaluation errors the algebra product would turn into NaN
            check.eval(f)?;
            frechet_norm(f, &grid_params)?;
            let v = square.mapping.eval(f)[(0, 0)];
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(DistribError::NonFinite(err_label.clone()))
            }
        }),
        sample_points: functional.sample_points.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::Exhaustion;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bump(c: f64, rad: f64) -> TestFunction {
        TestFunction::bump(vec![c], rad).unwrap()
    }

    fn params() -> FrechetMetricParams {
        FrechetMetricParams {
            truncation: 12,
            density: 50.0,
            ..Default::default()
        }
    }

    #[test]
    fn delta_examples() {
        let b = bump(0.0, 1.0);
        let e1 = (-1.0f64).exp();
        assert_eq!(eval_delta(&[0.0], &b).unwrap(), r(e1));
        assert_eq!(eval_delta(&[1.5], &b).unwrap(), r(0.0));
        assert_eq!(eval_delta(&[0.0], &b.scale(r(2.0))).unwrap(), r(2.0 * e1));
    }

    #[test]
    fn deriv_delta_examples() {
        let b = bump(0.0, 1.0);
        assert_eq!(eval_deriv_delta(&[1], &b).unwrap().norm(), 0.0);
        let xb = TestFunction::coordinate(0, 1).mul(&b);
        let v = eval_deriv_delta(&[1], &xb).unwrap();
        assert!((v.re + (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(eval_deriv_delta(&[0], &b).unwrap(), eval_delta(&[0.0], &b).unwrap());
    }

    #[test]
    fn lambda_m_examples() {
        let k = IntegralKernel::indicator(0.0, 1.0).unwrap();
        assert!((k.l1_norm() - 1.0).abs() < 1e-12);
        // t windowed by a bump that is flat enough to be checked analytically is
        // awkward; compare against an independent high-order quadrature instead
        let f = TestFunction::coordinate(0, 1).mul(&bump(0.5, 2.0));
        let got = eval_lambda_m(&k, &f).unwrap();
        let oracle: f64 = (0..200_000)
            .map(|j| {
                let t = (j as f64 + 0.5) / 200_000.0;
                t * (-1.0 / (1.0 - ((t - 0.5) / 2.0).powi(2))).exp()
            })
            .sum::<f64>()
            / 200_000.0;
        assert!((got.value.re - oracle).abs() < 1e-6);
        assert_eq!(eval_lambda_m(&k, &TestFunction::zero(1)).unwrap().value, r(0.0));
        let z = IntegralKernel::zero(0.0, 1.0).unwrap();
        assert_eq!(eval_lambda_m(&z, &bump(0.5, 1.0)).unwrap().value, r(0.0));
        assert_eq!(z.l1_norm(), 0.0);
    }

    #[test]
    fn ramp_norm_is_closed_form() {
        let w = RampWitness::new(4, 0.0).unwrap();
        assert_eq!(w.l1_norm(), 0.125);
        assert!((w.kernel().unwrap().l1_norm() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn builtins_are_linear() {
        let pairs = vec![
            (bump(0.1, 0.7), bump(-0.3, 0.5).scale(r(2.0))),
            (bump(0.4, 1.2), bump(0.0, 0.3)),
        ];
        let alpha = C64::new(1.5, -0.5);
        let k = IntegralKernel::new("cos", -0.5, 0.8, |t| C64::new(t.cos(), t)).unwrap();
        for f in [
            FunctionalHandle::delta(vec![0.2]),
            FunctionalHandle::deriv_delta(vec![2]),
            FunctionalHandle::integral(k),
        ] {
            assert!(linearity_defect(&f, &pairs, alpha).unwrap() < 1e-9);
        }
    }

    #[test]
    fn delta_norm_sandwich() {
        let family: Vec<TestFunction> = (0..8).map(|i| bump(-0.6 + 0.15 * i as f64, 0.4 + 0.1 * i as f64)).collect();
        let d = FunctionalHandle::delta(vec![0.25]);
        let rep = functional_norm(&d, &family, &params()).unwrap();
        assert_eq!(rep.upper, Some(1.0));
        assert!(rep.lower <= 1.0);
        assert_eq!(rep.violations(1e-12), 0);
        assert_eq!(rep.variant, "C-infinity");
        assert!(rep.ratio_csv().lines().count() == 9);
    }

    #[test]
    fn kernel_norm_bounded_by_l1() {
        let k = IntegralKernel::indicator(0.0, 0.25).unwrap();
        assert!((k.l1_norm() - 0.25).abs() < 1e-12);
        let family: Vec<TestFunction> = (0..6).map(|i| bump(0.1 * i as f64, 0.5).scale(r(0.5 + i as f64))).collect();
        let rep = functional_norm(&FunctionalHandle::integral(k), &family, &params()).unwrap();
        assert_eq!(rep.violations(1e-6), 0);
        assert!(rep.lower <= 0.25 + 1e-6);
    }

    #[test]
    fn zero_functional_has_zero_norm() {
        let rep = functional_norm(&FunctionalHandle::zero(), &[bump(0.0, 1.0)], &params()).unwrap();
        assert_eq!(rep.lower, 0.0);
        assert_eq!(rep.upper, Some(0.0));
    }

    #[test]
    fn momentum_has_no_analytic_bound() {
        let m = momentum_operator(&FunctionalHandle::delta(vec![0.0]), 1);
        let rep = functional_norm(&m, &[bump(0.2, 1.0)], &params()).unwrap();
        assert!(rep.upper.is_none());
    }

    #[test]
    fn delta_outside_k_n_has_no_bound() {
        let p = params();
        let far = FunctionalHandle::delta(vec![5.0]);
        assert!(matches!(
            analytic_upper_bound(far.tag(), &p, 1),
            Err(DistribError::NoUpperBoundAvailable(_))
        ));
        let whole = FrechetMetricParams {
            variant: MetricVariant::Distribution { omega: None },
            ..p
        };
        assert_eq!(analytic_upper_bound(far.tag(), &whole, 1).unwrap().0, 1.0);
    }

    #[test]
    fn position_of_delta_is_scaled_delta() {
        let d2 = FunctionalHandle::delta(vec![2.0]);
        let x = position_operator(&d2);
        for phi in [bump(1.8, 0.5), bump(2.0, 1.0).scale(C64::new(0.3, 0.7))] {
            assert_eq!(x.eval(&phi).unwrap(), r(2.0) * phi.eval(&[2.0]).unwrap());
        }
        assert_eq!(position_operator(&FunctionalHandle::zero()).eval(&bump(0.0, 1.0)).unwrap(), r(0.0));
    }

    #[test]
    fn position_norm_bounded_by_k_n() {
        let family: Vec<TestFunction> = (0..5).map(|i| bump(-1.5 + 0.7 * i as f64, 0.8)).collect();
        let rep = position_norm_over_deltas(&[-1.5, -0.2, 0.6, 1.9], &family, &params()).unwrap();
        assert_eq!(rep.bound, 2.0);
        assert!(rep.estimate <= rep.bound + 1e-12);
        assert!(rep.max_pointwise_gap <= 1e-12);
        for (c, ratio) in rep.centers.iter().zip(&rep.ratios) {
            assert!((ratio - c.abs()).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn momentum_of_delta_is_negative_derivative() {
        let m = momentum_operator(&FunctionalHandle::delta(vec![0.3]), 1);
        let phi = bump(0.1, 0.8);
        let want = -phi.derivative_at(&[1], &[0.3]).unwrap();
        assert_eq!(m.eval(&phi).unwrap(), want);
        assert_eq!(momentum_operator(&FunctionalHandle::zero(), 1).eval(&phi).unwrap(), r(0.0));
    }

    #[test]
    fn momentum_of_smooth_kernel_matches_parts() {
        // m(t) = sin(t) on [-1, 1]: -∫ m φ' = ∫ m' φ - [m φ] with the boundary term
        let k = IntegralKernel::new("sin", -1.0, 1.0, |t| C64::new(t.sin(), 0.0)).unwrap();
        let dk = IntegralKernel::new("cos", -1.0, 1.0, |t| C64::new(t.cos(), 0.0)).unwrap();
        let phi = bump(0.2, 0.7);
        let lhs = momentum_operator(&FunctionalHandle::integral(k), 1).eval(&phi).unwrap();
        let rhs = eval_lambda_m(&dk, &phi).unwrap().value;
        assert!((lhs - rhs).norm() < 1e-6);
    }

    #[test]
    fn ramp_identity_by_parts() {
        let w = RampWitness::new(4, 0.0).unwrap();
        let phi = bump(0.1, 0.3);
        let f = momentum_operator(&FunctionalHandle::integral(w.kernel().unwrap()), 1);
        let lhs = f.eval(&phi).unwrap();
        let (lo, hi) = w.support();
        let integral = integrate_adaptive(|t| phi.value(&[t]), &[lo, hi], 1e-12, 4, 1 << 12).unwrap();
        let rhs = -phi.eval(&[hi]).unwrap() + integral.value * w.n as f64;
        assert!((lhs - rhs).norm() < 1e-6);
    }

    #[test]
    fn witness_requires_cover() {
        let w = RampWitness::new(4, 1.9).unwrap();
        let fam = vec![BumpFamily {
            center: vec![1.9],
            radius: 0.5,
            amplitude: r(1.0),
        }];
        assert!(matches!(
            momentum_witness_ratio(&w, &fam, &params(), &WitnessSearch::default()),
            Err(DistribError::SupportNotCovered { .. })
        ));
    }

    #[test]
    fn witness_ratio_is_bounded_by_one_over_l1() {
        // |Λ_n(φ')| ≤ ‖λ_n‖₁ p_N(φ) ≤ ‖λ_n‖₁ d(φ,0), so the certified ratio is at most 1
        let fam = vec![BumpFamily {
            center: vec![0.3],
            radius: 0.8,
            amplitude: r(1.0),
        }];
        let search = WitnessSearch {
            max_evaluations: 20,
            ..Default::default()
        };
        let rep = momentum_witness_ratio(&RampWitness::new(4, 0.0).unwrap(), &fam, &params(), &search).unwrap();
        assert!(rep.certified_ratio > 0.0);
        assert!(rep.certified_ratio <= 1.0);
        assert!(rep.numerator_lb <= rep.numerator_grid);
        assert!(!rep.trace.is_empty());
    }

    #[test]
    fn star_square_examples() {
        let p = FrechetMetricParams {
            truncation: 8,
            density: 40.0,
            variant: MetricVariant::CInfinity(Exhaustion::Linear { step: 1.0 }),
            ..Default::default()
        };
        let delta = FunctionalHandle::delta(vec![0.1]);
        let sq = star_square(&delta, &p, 1).unwrap();
        let f = bump(0.0, 1.0);
        let g = bump(0.3, 0.5).scale(r(2.0));
        let pp = params_for(&delta, &p);
        let want = f.eval(&[0.1]).unwrap().powi(2) / frechet_norm(&f, &pp).unwrap().value;
        assert!((sq.eval(&f).unwrap() - want).norm() <= 1e-15 * want.norm());
        let sum = sq.eval(&f.add(&g)).unwrap();
        let parts = sq.eval(&f).unwrap() + sq.eval(&g).unwrap();
        assert!((sum - parts).norm() > 1e-3);
        let zero_sq = star_square(&FunctionalHandle::zero(), &p, 1).unwrap();
        assert_eq!(zero_sq.eval(&f).unwrap(), r(0.0));
        assert_eq!(sq.eval(&TestFunction::zero(1)).unwrap(), r(0.0));
    }
}
