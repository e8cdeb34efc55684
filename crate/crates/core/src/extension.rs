//! Constructive extension of functionals dominated by a sub-additive
//! functional: the one-point step, iteration over finite target lists, the
//! positive/negative-part and complex variants, the one-direction Hilbert
//! step, and norm-preserving `f(|T|)` extensions.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::opspace::{estimate_norm, NormKind, OperatorHandle};
use crate::spaces::{self, FiniteSpace, InnerProductSpace, NormType, SampleSet, SpaceError, C64};
use crate::tolerance;

pub type RVec = Vec<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error("points must share dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0} appears twice in the domain")]
    DuplicatePoint(usize),
    #[error("{0} points but {1} values")]
    LengthMismatch(usize, usize),
    #[error("domain is empty")]
    EmptyDomain,
    #[error("target {0:?} already lies in the domain")]
    PointInDomain(RVec),
    #[error("precheck failed{}: pair ({i}, {j}) has margin {margin:e}", part_suffix(part))]
    PrecheckFailed {
        part: Option<String>,
        i: usize,
        j: usize,
        margin: f64,
    },
    #[error("extended functional violates the inequality at pair ({i}, {j}), margin {margin:e}")]
    ConstructionViolated { i: usize, j: usize, margin: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("continuity report requested but the functional has no modulus")]
    ModulusMissing,
    #[error("directions are not orthonormal: {0}")]
    NotOrthonormal(String),
    #[error("wrapper is not nondecreasing near u = {0}")]
    NotMonotone(f64),
    #[error("{part} part: {source}")]
    InPart {
        part: String,
        #[source]
        source: Box<ExtensionError>,
    },
}

fn part_suffix(part: &Option<String>) -> String {
    part.as_ref().map(|p| format!(" for {p}")).unwrap_or_default()
}

impl From<SpaceError> for ExtensionError {
    fn from(e: SpaceError) -> Self {
        ExtensionError::NotOrthonormal(e.to_string())
    }
}

fn add(a: &[f64], b: &[f64]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn scaled(t: f64, a: &[f64]) -> RVec {
    a.iter().map(|x| t * x).collect()
}

fn is_origin(a: &[f64]) -> bool {
    a.iter().all(|&x| x == 0.0)
}

/// One recorded one-point step: the point added, the constant `c`, and the
/// new value `-c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionStep {
    pub point: RVec,
    pub c: f64,
    pub value: f64,
}

/// A real functional known on finitely many distinct points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialFunctional {
    points: Vec<RVec>,
    values: Vec<f64>,
    steps: Vec<ExtensionStep>,
}

impl PartialFunctional {
    pub fn new(points: Vec<RVec>, values: Vec<f64>) -> Result<Self, ExtensionError> {
        if points.len() != values.len() {
            return Err(ExtensionError::LengthMismatch(points.len(), values.len()));
        }
        if let Some(first) = points.first() {
            let dim = first.len();
            for p in &points {
                if p.len() != dim {
                    return Err(ExtensionError::DimensionMismatch {
                        expected: dim,
                        got: p.len(),
                    });
                }
            }
        }
        for j in 1..points.len() {
            if points[..j].contains(&points[j]) {
                return Err(ExtensionError::DuplicatePoint(j));
            }
        }
        Ok(Self {
            points,
            values,
            steps: Vec::new(),
        })
    }

    /// The functional `x ↦ f(x)` on the given points.
    pub fn from_fn(points: Vec<RVec>, f: impl Fn(&[f64]) -> f64) -> Result<Self, ExtensionError> {
        let values = points.iter().map(|p| f(p)).collect();
        Self::new(points, values)
    }

    pub fn points(&self) -> &[RVec] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.points.first().map(|p| p.len())
    }

    /// Steps taken since construction, in target order.
    pub fn steps(&self) -> &[ExtensionStep] {
        &self.steps
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.points.iter().position(|p| p == x).map(|i| self.values[i])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.points.iter().any(|p| p == x)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            points: self.points.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            steps: Vec::new(),
        }
    }

    /// `max(F, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map_values(|v| v.max(0.0))
    }

    /// `max(-F, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map_values(|v| (-v).max(0.0))
    }
}

/// Uniform-continuity modulus `δ ↦ ε` with respect to Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Modulus {
    Lipschitz(f64),
    /// Rows `(δ, ε)` sorted by `δ`; `ε(d)` is the first row with `δ ≥ d`.
    Table(Vec<(f64, f64)>),
}

impl Modulus {
    pub fn eps(&self, delta: f64) -> f64 {
        match self {
            Modulus::Lipschitz(l) => l * delta,
            Modulus::Table(rows) => rows
                .iter()
                .find(|(d, _)| *d >= delta)
                .map_or(f64::INFINITY, |&(_, e)| e),
        }
    }
}

type Eval = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A sub-additive functional `p` on `R^n`.
#[derive(Clone)]
pub struct SubadditiveFunctional {
    label: String,
    eval: Arc<Eval>,
    sublinear: bool,
    modulus: Option<Modulus>,
}

impl fmt::Debug for SubadditiveFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubadditiveFunctional")
            .field("label", &self.label)
            .field("sublinear", &self.sublinear)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl SubadditiveFunctional {
    pub fn new<F>(label: impl Into<String>, sublinear: bool, eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            sublinear,
            modulus: None,
        }
    }

    pub fn with_modulus(mut self, modulus: Modulus) -> Self {
        self.modulus = Some(modulus);
        self
    }

    pub fn l1(dimension: usize) -> Self {
        Self::new("l1", true, |x| x.iter().map(|v| v.abs()).sum())
            .with_modulus(Modulus::Lipschitz((dimension as f64).sqrt()))
    }

    pub fn l2() -> Self {
        Self::new("l2", true, InnerProductSpace::norm).with_modulus(Modulus::Lipschitz(1.0))
    }

    /// `Σ w_i |x_i|`; Lipschitz constant `‖w‖₂` by Cauchy–Schwarz.
    pub fn weighted_l1(weights: Vec<f64>) -> Self {
        let l = InnerProductSpace::norm(&weights);
        Self::new("weighted-l1", true, move |x| {
            x.iter().zip(&weights).map(|(v, w)| w * v.abs()).sum()
        })
        .with_modulus(Modulus::Lipschitz(l))
    }

    /// The norm of a finite real space.
    pub fn from_space(space: &FiniteSpace) -> Self {
        let sp = space.clone();
        let l = match space.norm_type() {
            NormType::L1 => (space.dimension() as f64).sqrt(),
            NormType::L2 | NormType::Linf => 1.0,
            NormType::Weighted(w) => InnerProductSpace::norm(w),
        };
        Self::new(format!("{:?}", space.norm_type()), true, move |x| sp.norm_real(x))
            .with_modulus(Modulus::Lipschitz(l))
    }

    /// `factor · p`.
    pub fn scaled(&self, factor: f64) -> Self {
        let inner = Arc::clone(&self.eval);
        Self {
            label: format!("{factor}*{}", self.label),
            eval: Arc::new(move |x| factor * inner(x)),
            sublinear: self.sublinear,
            modulus: self.modulus.as_ref().map(|m| match m {
                Modulus::Lipschitz(l) => Modulus::Lipschitz(factor * l),
                Modulus::Table(rows) => Modulus::Table(rows.iter().map(|&(d, e)| (d, factor * e)).collect()),
            }),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_sublinear(&self) -> bool {
        self.sublinear
    }

    pub fn modulus(&self) -> Option<&Modulus> {
        self.modulus.as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Probes sub-additivity, homogeneity (when claimed) and the modulus.
    pub fn verify(&self, probes: &[RVec], tol: f64) -> bool {
        for x in probes {
            let px = self.eval(x);
            for y in probes {
                let py = self.eval(y);
                if !tolerance::le_tol(self.eval(&add(x, y)), px + py, tol) {
                    return false;
                }
                if let Some(m) = &self.modulus {
                    let d = InnerProductSpace::norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
                    if !tolerance::le_tol((px - py).abs(), m.eps(d), tol) {
                        return false;
                    }
                }
            }
            if self.sublinear {
                for t in [0.5, 2.0, 3.0] {
                    if !tolerance::close(self.eval(&scaled(t, x)), t * px, tol) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Which pairs the dominance inequality is imposed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// `s1 ≠ s2` only.
    StrictPairs,
    /// Every pair, including `s1 = s2`.
    AllPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseVerdict {
    /// `min p(s1+s2) − F(s1) − F(s2)`; `+inf` when no pair exists.
    pub worst_margin: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub pairs_checked: usize,
    pub holds: bool,
}

fn pair_margin(f: &PartialFunctional, p: &SubadditiveFunctional, i: usize, j: usize) -> (f64, f64) {
    let bound = p.eval(&add(&f.points[i], &f.points[j]));
    (bound - f.values[i] - f.values[j], bound)
}

/// Checks `F(s1) + F(s2) ≤ p(s1 + s2)`; pairs whose first index lies in
/// `rows` only, when given.
fn pairwise_over(
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    mode: PairMode,
    rows: std::ops::Range<usize>,
    tol: f64,
) -> PairwiseVerdict {
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    let mut holds = true;
    let mut count = 0;
    for i in rows {
        let upper = match mode {
            PairMode::StrictPairs => i,
            PairMode::AllPairs => i + 1,
        };
        for j in 0..upper {
            let (margin, bound) = pair_margin(f, p, i, j);
            count += 1;
            if margin < worst {
                worst = margin;
                worst_pair = Some((j, i));
            }
            if margin < -tol * bound.abs().max(1.0) {
                holds = false;
            }
        }
    }
    PairwiseVerdict {
        worst_margin: worst,
        worst_pair,
        pairs_checked: count,
        holds,
    }
}

pub fn check_pairwise_inequality(
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    mode: PairMode,
    tol: f64,
) -> PairwiseVerdict {
    pairwise_over(f, p, mode, 0..f.len(), tol)
}

fn require(verdict: &PairwiseVerdict, part: Option<&str>) -> Result<(), ExtensionError> {
    if verdict.holds {
        return Ok(());
    }
    let (i, j) = verdict.worst_pair.unwrap_or((0, 0));
    Err(ExtensionError::PrecheckFailed {
        part: part.map(str::to_string),
        i,
        j,
        margin: verdict.worst_margin,
    })
}

fn require_zero(f: &PartialFunctional) -> Result<(), ExtensionError> {
    match f.points.iter().position(|p| is_origin(p)) {
        Some(i) if f.values[i] == 0.0 => Ok(()),
        Some(_) => Err(ExtensionError::HypothesisViolated("F(0) != 0".into())),
        None => Err(ExtensionError::HypothesisViolated("0 is not in the domain".into())),
    }
}

/// `c = max_{x ∈ Dom} [F(x) − p(x + y)]`.
pub fn extension_constant(f: &PartialFunctional, p: &SubadditiveFunctional, y: &[f64]) -> f64 {
    f.points
        .iter()
        .zip(&f.values)
        .map(|(x, v)| v - p.eval(&add(x, y)))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn step_unchecked(
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    y: &[f64],
    mode: PairMode,
    tol: f64,
) -> Result<PartialFunctional, ExtensionError> {
    if f.is_empty() {
        return Err(ExtensionError::EmptyDomain);
    }
    if let Some(dim) = f.dimension() {
        if y.len() != dim {
            return Err(ExtensionError::DimensionMismatch {
                expected: dim,
                got: y.len(),
            });
        }
    }
    if f.contains(y) {
        return Err(ExtensionError::PointInDomain(y.to_vec()));
    }
    let c = extension_constant(f, p, y);
    let mut out = f.clone();
    out.points.push(y.to_vec());
    out.values.push(-c);
    out.steps.push(ExtensionStep {
        point: y.to_vec(),
        c,
        value: -c,
    });
    let n = out.len();
    let post = pairwise_over(&out, p, mode, n - 1..n, tol);
    if !post.holds {
        let (i, j) = post.worst_pair.unwrap_or((n - 1, n - 1));
        return Err(ExtensionError::ConstructionViolated {
            i,
            j,
            margin: post.worst_margin,
        });
    }
    Ok(out)
}

fn precheck(f: &PartialFunctional, p: &SubadditiveFunctional, mode: PairMode, tol: f64) -> Result<(), ExtensionError> {
    if mode == PairMode::AllPairs {
        if !p.is_sublinear() {
            return Err(ExtensionError::HypothesisViolated(format!(
                "{} is not sub-linear",
                p.label()
            )));
        }
        require_zero(f)?;
    }
    require(&check_pairwise_inequality(f, p, mode, tol), None)
}

/// Adds `y` with value `-c`. In [`PairMode::AllPairs`] the domain must
/// contain the origin with `F(0) = 0` and `p` must be sub-linear.
pub fn extend_one_point(
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    y: &[f64],
    mode: PairMode,
    tol: f64,
) -> Result<PartialFunctional, ExtensionError> {
    precheck(f, p, mode, tol)?;
    step_unchecked(f, p, y, mode, tol)
}

/// Sequential one-point steps over `targets`, in order.
pub fn extend_over_set(
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    targets: &[RVec],
    mode: PairMode,
    tol: f64,
) -> Result<PartialFunctional, ExtensionError> {
    precheck(f, p, mode, tol)?;
    let mut current = f.clone();
    for y in targets {
        current = step_unchecked(&current, p, y, mode, tol)?;
    }
    let post = check_pairwise_inequality(&current, p, mode, tol);
    if !post.holds {
        let (i, j) = post.worst_pair.unwrap_or((0, 0));
        return Err(ExtensionError::ConstructionViolated {
            i,
            j,
            margin: post.worst_margin,
        });
    }
    Ok(current)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosNegExtension {
    pub positive: PartialFunctional,
    pub negative: PartialFunctional,
    /// `F̂ = F̂⁺ − F̂⁻` on the extended domain.
    pub combined: PartialFunctional,
    /// `min (M1+M2)‖x1+x2‖ − |F̂(x1)+F̂(x2)|` over all pairs.
    pub worst_pair_margin: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// `min (M1+M2)‖x‖ − |F̂(x)|` over the domain.
    pub worst_point_margin: f64,
    pub holds: bool,
}

/// Extends `F⁺` against `M1‖·‖` and `F⁻` against `M2‖·‖` separately and
/// returns their difference with the combined bound report.
pub fn extend_posneg(
    f: &PartialFunctional,
    m1: f64,
    m2: f64,
    space: &FiniteSpace,
    targets: &[RVec],
    tol: f64,
) -> Result<PosNegExtension, ExtensionError> {
    require_zero(f)?;
    let norm = SubadditiveFunctional::from_space(space);
    let p1 = norm.scaled(m1);
    let p2 = norm.scaled(m2);
    let plus = f.positive_part();
    let minus = f.negative_part();
    require(
        &check_pairwise_inequality(&plus, &p1, PairMode::AllPairs, tol),
        Some("positive part"),
    )?;
    require(
        &check_pairwise_inequality(&minus, &p2, PairMode::AllPairs, tol),
        Some("negative part"),
    )?;
    let label = |part: &str| {
        let part = part.to_string();
        move |e| ExtensionError::InPart {
            part: part.clone(),
            source: Box::new(e),
        }
    };
    let positive = extend_over_set(&plus, &p1, targets, PairMode::AllPairs, tol).map_err(label("positive"))?;
    let negative = extend_over_set(&minus, &p2, targets, PairMode::AllPairs, tol).map_err(label("negative"))?;
    let mut combined = positive.clone();
    combined.values = positive.values.iter().zip(&negative.values).map(|(a, b)| a - b).collect();
    combined.steps.clear();

    let total = m1 + m2;
    let mut worst_pair_margin = f64::INFINITY;
    let mut worst_pair = None;
    let mut holds = true;
    let pts = &combined.points;
    let vals = &combined.values;
    for i in 0..pts.len() {
        for j in 0..=i {
            let bound = total * norm.eval(&add(&pts[i], &pts[j]));
            let margin = bound - (vals[i] + vals[j]).abs();
            if margin < worst_pair_margin {
                worst_pair_margin = margin;
                worst_pair = Some((j, i));
            }
            if margin < -tol * bound.max(1.0) {
                holds = false;
            }
        }
    }
    let mut worst_point_margin = f64::INFINITY;
    for (x, v) in pts.iter().zip(vals) {
        let bound = total * norm.eval(x);
        let margin = bound - v.abs();
        worst_point_margin = worst_point_margin.min(margin);
        if margin < -tol * bound.max(1.0) {
            holds = false;
        }
    }
    Ok(PosNegExtension {
        positive,
        negative,
        combined,
        worst_pair_margin,
        worst_pair,
        worst_point_margin,
        holds,
    })
}

/// Extends real and imaginary parts independently; errors name the part.
pub fn extend_complex(
    f_r: &PartialFunctional,
    f_c: &PartialFunctional,
    p_r: &SubadditiveFunctional,
    p_c: &SubadditiveFunctional,
    targets: &[RVec],
    mode: PairMode,
    tol: f64,
) -> Result<(PartialFunctional, PartialFunctional), ExtensionError> {
    if f_r.points != f_c.points {
        return Err(ExtensionError::HypothesisViolated(
            "real and imaginary parts must share a domain".into(),
        ));
    }
    let wrap = |part: &str, e: ExtensionError| ExtensionError::InPart {
        part: part.to_string(),
        source: Box::new(e),
    };
    let real = extend_over_set(f_r, p_r, targets, mode, tol).map_err(|e| wrap("real", e))?;
    let imag = extend_over_set(f_c, p_c, targets, mode, tol).map_err(|e| wrap("imaginary", e))?;
    Ok((real, imag))
}

/// Symmetric geometric ladder with `density` magnitudes in `[1/4, 4]`.
pub fn line_ladder(density: usize) -> Vec<f64> {
    let density = density.max(1);
    let mut out = Vec::with_capacity(2 * density);
    for i in 0..density {
        let e = if density == 1 {
            0.0
        } else {
            -2.0 + 4.0 * i as f64 / (density - 1) as f64
        };
        let t = 2f64.powf(e);
        out.push(t);
        out.push(-t);
    }
    out
}

/// Multiples of each direction on the ladder, plus the origin.
pub fn line_samples(directions: &[RVec], ladder: &[f64]) -> Vec<RVec> {
    let dim = directions.first().map_or(0, |d| d.len());
    let mut out = vec![vec![0.0; dim]];
    for e in directions {
        for &t in ladder {
            if t != 0.0 {
                out.push(scaled(t, e));
            }
        }
    }
    out
}

/// The orthonormal directions `{e_j} ∪ {e*_i}` spanning the current domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertExtensionState {
    base: Vec<RVec>,
    added: Vec<RVec>,
    density: usize,
    r_tables: Vec<Vec<(f64, f64)>>,
}

impl HilbertExtensionState {
    pub fn new(base: Vec<RVec>, density: usize) -> Result<Self, ExtensionError> {
        spaces::check_orthonormal(&base, tolerance::EXACT)?;
        if density == 0 {
            return Err(ExtensionError::HypothesisViolated("density must be positive".into()));
        }
        Ok(Self {
            base,
            added: Vec::new(),
            density,
            r_tables: Vec::new(),
        })
    }

    pub fn base(&self) -> &[RVec] {
        &self.base
    }

    pub fn added_directions(&self) -> &[RVec] {
        &self.added
    }

    pub fn density(&self) -> usize {
        self.density
    }

    pub fn r_tables(&self) -> &[Vec<(f64, f64)>] {
        &self.r_tables
    }

    pub fn directions(&self) -> Vec<RVec> {
        self.base.iter().chain(&self.added).cloned().collect()
    }

    pub fn ladder(&self) -> Vec<f64> {
        line_ladder(self.density)
    }

    /// Line samples of the union of one-dimensional spans.
    pub fn samples(&self) -> Vec<RVec> {
        line_samples(&self.directions(), &self.ladder())
    }
}

/// Index of the direction whose line contains `x`, if exactly one does.
fn line_of(x: &[f64], directions: &[RVec]) -> Option<usize> {
    let nx = InnerProductSpace::norm(x);
    if nx == 0.0 {
        return None;
    }
    directions.iter().position(|e| {
        let t = InnerProductSpace::inner(x, e);
        let resid: RVec = x.iter().zip(e).map(|(a, b)| a - t * b).collect();
        InnerProductSpace::norm(&resid) <= 1e-12 * nx
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalPairReport {
    pub worst_margin: f64,
    pub pairs_checked: usize,
    /// Pairs lying on two different non-basis directions; not constrained.
    pub unchecked_pairs: usize,
    pub holds: bool,
}

/// Checks `F(x1) + F(x2) ≤ p(x1 + x2)` for sample pairs on distinct basis
/// lines (or involving the origin).
pub fn check_orthogonal_pairs(
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    directions: &[RVec],
    tol: f64,
) -> OrthogonalPairReport {
    let lines: Vec<Option<usize>> = f.points.iter().map(|x| line_of(x, directions)).collect();
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut unchecked = 0;
    let mut holds = true;
    for i in 0..f.len() {
        for j in 0..i {
            let zero_i = is_origin(&f.points[i]);
            let zero_j = is_origin(&f.points[j]);
            let eligible = zero_i
                || zero_j
                || matches!((lines[i], lines[j]), (Some(a), Some(b)) if a != b);
            if !eligible {
                if lines[i].is_none() || lines[j].is_none() {
                    unchecked += 1;
                }
                continue;
            }
            let (margin, bound) = pair_margin(f, p, i, j);
            checked += 1;
            worst = worst.min(margin);
            if margin < -tol * bound.abs().max(1.0) {
                holds = false;
            }
        }
    }
    OrthogonalPairReport {
        worst_margin: worst,
        pairs_checked: checked,
        unchecked_pairs: unchecked,
        holds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    /// `max (|r(t1) − r(t2)| − ε(|t1 − t2|))` over grid pairs.
    pub max_excess: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HilbertStepReport {
    pub state: HilbertExtensionState,
    pub r_table: Vec<(f64, f64)>,
    /// `F₁` on the line samples of the enlarged union of lines.
    pub line_functional: PartialFunctional,
    /// `F₁(x + t e*) = F̂(x) − r(t)` for sampled `x` and grid `t`.
    pub span_values: Vec<(RVec, f64)>,
    pub orthogonal_pairs: OrthogonalPairReport,
    pub continuity: Option<ContinuityReport>,
}

/// Adds one orthonormal direction `e*` with `r(t) = max_x [F̂(x) − p(x + t e*)]`.
pub fn hilbert_step(
    state: &HilbertExtensionState,
    f: &PartialFunctional,
    p: &SubadditiveFunctional,
    direction: &[f64],
    t_grid: &[f64],
    report_continuity: bool,
    tol: f64,
) -> Result<HilbertStepReport, ExtensionError> {
    let mut all = state.directions();
    all.push(direction.to_vec());
    spaces::check_orthonormal(&all, tolerance::EXACT)?;
    if report_continuity && p.modulus().is_none() {
        return Err(ExtensionError::ModulusMissing);
    }
    require_zero(f)?;
    let dim = direction.len();
    let p0 = p.eval(&vec![0.0; dim]);
    if p0 != 0.0 {
        return Err(ExtensionError::HypothesisViolated(format!("p(0) = {p0}")));
    }
    let pre = check_orthogonal_pairs(f, p, &state.directions(), tol);
    if !pre.holds {
        return Err(ExtensionError::PrecheckFailed {
            part: Some("base lines".into()),
            i: 0,
            j: 0,
            margin: pre.worst_margin,
        });
    }

    let r_table: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let shift = scaled(t, direction);
            let r = f
                .points
                .iter()
                .zip(&f.values)
                .map(|(x, v)| v - p.eval(&add(x, &shift)))
                .fold(f64::NEG_INFINITY, f64::max);
            (t, r)
        })
        .collect();

    let mut line_functional = f.clone();
    line_functional.steps.clear();
    let mut span_values = Vec::new();
    for &(t, r) in &r_table {
        let shift = scaled(t, direction);
        for (x, v) in f.points.iter().zip(&f.values) {
            let point = add(x, &shift);
            if is_origin(x) {
                if !line_functional.contains(&point) {
                    line_functional.points.push(point.clone());
                    line_functional.values.push(-r);
                }
            } else {
                span_values.push((point, v - r));
            }
        }
    }
    let orthogonal_pairs = check_orthogonal_pairs(&line_functional, p, &all, tol);

    let continuity = if report_continuity {
        let modulus = p.modulus().ok_or(ExtensionError::ModulusMissing)?;
        let mut max_excess = f64::NEG_INFINITY;
        let mut holds = true;
        for (a, &(t1, r1)) in r_table.iter().enumerate() {
            for &(t2, r2) in &r_table[..a] {
                let eps = modulus.eps((t1 - t2).abs());
                let excess = (r1 - r2).abs() - eps;
                max_excess = max_excess.max(excess);
                if excess > tol * eps.max(1.0) {
                    holds = false;
                }
            }
        }
        Some(ContinuityReport { max_excess, holds })
    } else {
        None
    };

    let mut next = state.clone();
    next.added.push(direction.to_vec());
    next.r_tables.push(r_table.clone());
    Ok(HilbertStepReport {
        state: next,
        r_table,
        line_functional,
        span_values,
        orthogonal_pairs,
        continuity,
    })
}

/// The nondecreasing wrapper `f` in `F(z) = f(|T z|)`.
#[derive(Clone)]
pub enum Wrapper {
    Identity,
    Power(f64),
    /// Piecewise-linear through `(u, f(u))` rows sorted by `u`, constant past the ends.
    Table(Vec<(f64, f64)>),
    Custom(String, Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Wrapper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wrapper::Identity => write!(f, "Identity"),
            Wrapper::Power(k) => write!(f, "Power({k})"),
            Wrapper::Table(rows) => write!(f, "Table({} rows)", rows.len()),
            Wrapper::Custom(label, _) => write!(f, "Custom({label})"),
        }
    }
}

impl Wrapper {
    pub fn apply(&self, u: f64) -> f64 {
        match self {
            Wrapper::Identity => u,
            Wrapper::Power(k) => u.powf(*k),
            Wrapper::Table(rows) => {
                let Some(first) = rows.first() else {
                    return 0.0;
                };
                if u <= first.0 {
                    return first.1;
                }
                for w in rows.windows(2) {
                    let ((u0, f0), (u1, f1)) = (w[0], w[1]);
                    if u <= u1 {
                        return f0 + (f1 - f0) * (u - u0) / (u1 - u0);
                    }
                }
                rows[rows.len() - 1].1
            }
            Wrapper::Custom(_, f) => f(u),
        }
    }

    /// Sampled monotonicity probe on `[0, u_max]`.
    pub fn check_monotone(&self, u_max: f64, count: usize) -> Result<(), ExtensionError> {
        if let Wrapper::Power(k) = self {
            if !(*k > 0.0) {
                return Err(ExtensionError::NotMonotone(0.0));
            }
        }
        let mut prev = self.apply(0.0);
        for i in 1..=count {
            let u = u_max * i as f64 / count as f64;
            let v = self.apply(u);
            if v < prev || v.is_nan() {
                return Err(ExtensionError::NotMonotone(u));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `T` on `Z = span{u_i}` given by `T(u_i) = c_i`, wrapped by `f`.
#[derive(Debug, Clone)]
pub struct LinearFormExtension {
    pub subspace_basis: Vec<RVec>,
    pub coefficients: Vec<f64>,
    pub wrapper: Wrapper,
}

#[derive(Debug, Clone)]
pub struct LinearExtensionReport {
    pub operator: OperatorHandle,
    /// Representing vector `w = Σ c_i u_i` of `T̂ = T ∘ proj_Z`.
    pub representer: RVec,
    pub t_norm: f64,
    pub t_hat_norm: f64,
    /// `‖T‖^k` for power wrappers, `‖T‖` for the identity.
    pub exact_norm: Option<f64>,
    pub norm_kind: NormKind,
    pub sampled_norm: f64,
    pub norms_agree: bool,
}

/// Builds `F̂(x) = f(|⟨w, x⟩|)` on `R^n` with the Euclidean norm.
pub fn extend_via_linear(
    ext: &LinearFormExtension,
    ambient: &InnerProductSpace,
    samples: &SampleSet,
) -> Result<LinearExtensionReport, ExtensionError> {
    let n = ambient.dimension();
    if ext.subspace_basis.len() != ext.coefficients.len() {
        return Err(ExtensionError::LengthMismatch(
            ext.subspace_basis.len(),
            ext.coefficients.len(),
        ));
    }
    for u in &ext.subspace_basis {
        if u.len() != n {
            return Err(ExtensionError::DimensionMismatch { expected: n, got: u.len() });
        }
    }
    spaces::check_orthonormal(&ext.subspace_basis, tolerance::EXACT)?;
    let t_norm = InnerProductSpace::norm(&ext.coefficients);
    ext.wrapper.check_monotone(4.0 * t_norm.max(1.0), 256)?;

    let mut w = vec![0.0; n];
    for (u, c) in ext.subspace_basis.iter().zip(&ext.coefficients) {
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi += c * ui;
        }
    }
    let t_hat_norm = InnerProductSpace::norm(&w);
    let (exact_norm, k) = match &ext.wrapper {
        Wrapper::Identity => (Some(t_norm), 1.0),
        Wrapper::Power(k) => (Some(t_norm.powf(*k)), *k),
        _ => (None, 1.0),
    };
    let space = FiniteSpace::real(n, NormType::L2);
    let scalar = FiniteSpace::real(1, NormType::L1);
    let (w_eval, wrapper) = (w.clone(), ext.wrapper.clone());
    let operator = OperatorHandle::new("f(|<w,x>|)", space.clone(), scalar, move |x| {
        let t: f64 = x.iter().zip(&w_eval).map(|(a, b)| a.re * b).sum();
        vec![C64::new(wrapper.apply(t.abs()), 0.0)]
    });
    let mut probe_points = samples.points().to_vec();
    if t_hat_norm > 0.0 {
        probe_points.push(spaces::real_vector(&scaled(1.0 / t_hat_norm, &w)));
    }
    let probes = SampleSet::new(probe_points, &space)?;
    let norm_kind = NormKind::Pk { k };
    let sampled_norm = estimate_norm(&operator, norm_kind, &probes)
        .map_err(|e| ExtensionError::HypothesisViolated(e.to_string()))?
        .value;
    let norms_agree = (t_norm - t_hat_norm).abs() <= 1e-9;
    Ok(LinearExtensionReport {
        operator,
        representer: w,
        t_norm,
        t_hat_norm,
        exact_norm,
        norm_kind,
        sampled_norm,
        norms_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = tolerance::EXACT;

    fn pf(points: &[&[f64]], values: &[f64]) -> PartialFunctional {
        PartialFunctional::new(points.iter().map(|p| p.to_vec()).collect(), values.to_vec()).unwrap()
    }

    #[test]
    fn pairwise_examples() {
        let l1 = SubadditiveFunctional::l1(2);
        let f = pf(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1.0, -1.0]);
        let v = check_pairwise_inequality(&f, &l1, PairMode::StrictPairs, TOL);
        assert!(v.holds);
        assert_eq!(v.worst_margin, 0.0);

        let zero = pf(&[&[1.0, 0.0], &[0.0, 2.0]], &[0.0, 0.0]);
        let v = check_pairwise_inequality(&zero, &SubadditiveFunctional::l2(), PairMode::StrictPairs, TOL);
        assert!(v.holds && v.worst_margin >= 0.0);

        let single = pf(&[&[1.0, 0.0]], &[2.0]);
        let v = check_pairwise_inequality(&single, &l1, PairMode::AllPairs, TOL);
        assert!(!v.holds);
        assert_eq!(v.worst_margin, -2.0);
        let v = check_pairwise_inequality(&single, &l1, PairMode::StrictPairs, TOL);
        assert!(v.holds && v.worst_margin == f64::INFINITY);
    }

    #[test]
    fn one_point_examples() {
        let l1 = SubadditiveFunctional::l1(2);
        let f = pf(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1.0, -1.0]);
        let g = extend_one_point(&f, &l1, &[0.0, 1.0], PairMode::StrictPairs, TOL).unwrap();
        assert_eq!(g.steps()[0].c, -1.0);
        assert_eq!(g.value_at(&[0.0, 1.0]), Some(1.0));

        let f = pf(&[&[0.0, 0.0]], &[0.0]);
        let g = extend_one_point(&f, &l1, &[1.0, 0.0], PairMode::StrictPairs, TOL).unwrap();
        assert_eq!(g.steps()[0].c, -1.0);
        assert_eq!(g.value_at(&[1.0, 0.0]), Some(1.0));

        let f = pf(&[&[1.0, 0.0]], &[1.0]);
        let g = extend_one_point(&f, &l1.scaled(2.0), &[0.0, 1.0], PairMode::StrictPairs, TOL).unwrap();
        assert_eq!(g.steps()[0].c, -3.0);
        assert_eq!(g.value_at(&[0.0, 1.0]), Some(3.0));

        assert!(matches!(
            extend_one_point(&f, &l1, &[1.0, 0.0], PairMode::StrictPairs, TOL),
            Err(ExtensionError::PointInDomain(_))
        ));
        let bad = pf(&[&[1.0, 0.0], &[0.0, 1.0]], &[5.0, 5.0]);
        assert!(matches!(
            extend_one_point(&bad, &l1, &[1.0, 1.0], PairMode::StrictPairs, TOL),
            Err(ExtensionError::PrecheckFailed { .. })
        ));
    }

    #[test]
    fn set_examples() {
        let l1 = SubadditiveFunctional::l1(2);
        let f = pf(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1.0, -1.0]);
        let same = extend_over_set(&f, &l1, &[], PairMode::StrictPairs, TOL).unwrap();
        assert_eq!(same, f);

        let l1_3 = SubadditiveFunctional::l1(3);
        let f3 = pf(&[&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]], &[1.0, -1.0]);
        let g = extend_over_set(&f3, &l1_3, &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], PairMode::StrictPairs, TOL)
            .unwrap();
        assert_eq!(g.len(), 4);
        assert!(check_pairwise_inequality(&g, &l1_3, PairMode::StrictPairs, TOL).worst_margin >= 0.0);
    }

    #[test]
    fn all_pairs_mode_needs_origin() {
        let l1 = SubadditiveFunctional::l1(1);
        let f = pf(&[&[1.0]], &[0.5]);
        assert!(matches!(
            extend_one_point(&f, &l1, &[2.0], PairMode::AllPairs, TOL),
            Err(ExtensionError::HypothesisViolated(_))
        ));
        let f = pf(&[&[0.0], &[1.0]], &[0.0, 0.5]);
        let g = extend_over_set(&f, &l1, &[vec![-3.0], vec![2.0]], PairMode::AllPairs, TOL).unwrap();
        for (x, v) in g.points().iter().zip(g.values()) {
            assert!(2.0 * v <= l1.eval(&scaled(2.0, x)) + 1e-12);
        }
    }

    #[test]
    fn posneg_examples() {
        let r1 = FiniteSpace::real(1, NormType::L1);
        let zero = pf(&[&[0.0], &[1.0]], &[0.0, 0.0]);
        let out = extend_posneg(&zero, 1.0, 1.0, &r1, &[vec![2.0], vec![-0.5]], TOL).unwrap();
        assert!(out.holds);
        assert!(out.combined.values().iter().all(|&v| v.abs() <= 2.0 * 2.0));

        // F(s) = s on {-1, 0, 1}: F⁺(1) + F⁺(-1) = 1 > 0 = ‖1 + (-1)‖
        let identity = pf(&[&[-1.0], &[0.0], &[1.0]], &[-1.0, 0.0, 1.0]);
        assert!(matches!(
            extend_posneg(&identity, 1.0, 1.0, &r1, &[vec![2.0]], TOL),
            Err(ExtensionError::PrecheckFailed { .. })
        ));

        let f = pf(&[&[0.0], &[1.0]], &[0.0, 1.0]);
        let targets = [vec![2.0], vec![0.5]];
        let out = extend_posneg(&f, 1.0, 1.0, &r1, &targets, TOL).unwrap();
        assert!(out.holds, "{out:?}");
        let flipped = extend_posneg(&f.map_values(|v| -v), 1.0, 1.0, &r1, &targets, TOL).unwrap();
        for (a, b) in out.combined.values().iter().zip(flipped.combined.values()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn complex_examples() {
        let l1 = SubadditiveFunctional::l1(2);
        let f = pf(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1.0, -1.0]);
        let zero = f.map_values(|_| 0.0);
        let targets = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        let (re, im) = extend_complex(&f, &zero, &l1, &l1, &targets, PairMode::StrictPairs, TOL).unwrap();
        assert_eq!(re, extend_over_set(&f, &l1, &targets, PairMode::StrictPairs, TOL).unwrap());
        assert!(check_pairwise_inequality(&im, &l1, PairMode::StrictPairs, TOL).holds);

        let reversed: Vec<_> = targets.iter().rev().cloned().collect();
        let (re2, _) = extend_complex(&f, &f, &l1, &l1, &reversed, PairMode::StrictPairs, TOL).unwrap();
        assert!(check_pairwise_inequality(&re2, &l1, PairMode::StrictPairs, TOL).holds);

        let bad = f.map_values(|v| 10.0 * v.abs());
        let err = extend_complex(&f, &bad, &l1, &l1, &targets, PairMode::StrictPairs, TOL).unwrap_err();
        assert!(matches!(err, ExtensionError::InPart { ref part, .. } if part == "imaginary"));
    }

    #[test]
    fn hilbert_zero_functional() {
        let state = HilbertExtensionState::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 5).unwrap();
        let samples = state.samples();
        let f = PartialFunctional::from_fn(samples, |_| 0.0).unwrap();
        let grid: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.25).collect();
        let rep = hilbert_step(&state, &f, &SubadditiveFunctional::l2(), &[0.0, 0.0, 1.0], &grid, true, TOL).unwrap();
        for &(t, r) in &rep.r_table {
            assert_eq!(r, -t.abs());
        }
        assert!(rep.orthogonal_pairs.holds);
        assert!(rep.continuity.unwrap().holds);
        assert_eq!(rep.state.added_directions().len(), 1);
        assert_eq!(rep.r_table.iter().find(|(t, _)| *t == 0.0).unwrap().1, 0.0);
    }

    #[test]
    fn hilbert_linear_functional() {
        let state = HilbertExtensionState::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 9).unwrap();
        let a = [0.6, -0.8, 0.0];
        let f = PartialFunctional::from_fn(state.samples(), |x| InnerProductSpace::inner(&a, x)).unwrap();
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.3).collect();
        let p = SubadditiveFunctional::l2();
        let rep = hilbert_step(&state, &f, &p, &[0.0, 0.0, 1.0], &grid, true, TOL).unwrap();
        // brute-force r over the same line samples
        for &(t, r) in &rep.r_table {
            let oracle = f
                .points()
                .iter()
                .map(|x| InnerProductSpace::inner(&a, x) - InnerProductSpace::norm(&[x[0], x[1], x[2] + t]))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(r, oracle);
        }
        assert!(rep.orthogonal_pairs.holds);
        assert!(rep.continuity.unwrap().holds);

        let no_modulus = SubadditiveFunctional::new("l2", true, InnerProductSpace::norm);
        assert_eq!(
            hilbert_step(&state, &f, &no_modulus, &[0.0, 0.0, 1.0], &grid, true, TOL).unwrap_err(),
            ExtensionError::ModulusMissing
        );
        assert!(matches!(
            hilbert_step(&state, &f, &p, &[0.0, 0.6, 0.8], &grid, false, TOL),
            Err(ExtensionError::NotOrthonormal(_))
        ));
    }

    fn standard_basis(n: usize, k: usize) -> Vec<RVec> {
        (0..k)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn linear_form_examples() {
        let r2 = InnerProductSpace::standard(2);
        let sp2 = FiniteSpace::real(2, NormType::L2);
        let samples = SampleSet::halton(&sp2, 50, 1.0, 1).unwrap();
        let ext = LinearFormExtension {
            subspace_basis: standard_basis(2, 1),
            coefficients: vec![2.0],
            wrapper: Wrapper::Power(2.0),
        };
        let rep = extend_via_linear(&ext, &r2, &samples).unwrap();
        assert_eq!(rep.exact_norm, Some(4.0));
        assert!((rep.sampled_norm - 4.0).abs() < 1e-12);
        assert_eq!(rep.operator.eval(&spaces::real_vector(&[1.0, 5.0]))[0].re, 4.0);

        let zero = LinearFormExtension {
            coefficients: vec![0.0],
            ..ext.clone()
        };
        let rep = extend_via_linear(&zero, &r2, &samples).unwrap();
        assert_eq!((rep.exact_norm, rep.sampled_norm), (Some(0.0), 0.0));

        let r3 = InnerProductSpace::standard(3);
        let sp3 = FiniteSpace::real(3, NormType::L2);
        let s3 = SampleSet::halton(&sp3, 50, 1.0, 1).unwrap();
        let ext = LinearFormExtension {
            subspace_basis: standard_basis(3, 1),
            coefficients: vec![1.0],
            wrapper: Wrapper::Power(1.0),
        };
        let rep = extend_via_linear(&ext, &r3, &s3).unwrap();
        assert_eq!(rep.exact_norm, Some(1.0));
        assert_eq!(rep.operator.eval(&spaces::real_vector(&[-0.5, 2.0, 3.0]))[0].re, 0.5);

        let decreasing = LinearFormExtension {
            wrapper: Wrapper::Table(vec![(0.0, 1.0), (1.0, 0.0)]),
            ..ext
        };
        assert!(matches!(
            extend_via_linear(&decreasing, &r3, &s3),
            Err(ExtensionError::NotMonotone(_))
        ));
    }
}
