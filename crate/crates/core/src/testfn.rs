//! Smooth test functions with exact derivative oracles, the seminorms `p_i`,
//! the Fréchet metrics on C∞(Ω) and D(Ω), and Schwartz-type seminorms.

pub mod jet;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use jet::{Jet, JetLayout};

/// Highest derivative order the primitive oracles are exposed for. Beyond
/// this the jet coefficients near a bump's boundary can overflow.
pub const MAX_ORACLE_ORDER: usize = 100;

/// Boundary-to-interior ratio above which a Schwartz grid is rejected.
pub const BOUNDARY_DECAY: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestFnError {
    #[error("order {requested} exceeds the derivative oracle limit {max}")]
    OrderExceedsOracle { requested: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid too small: boundary envelope {boundary:e} exceeds {BOUNDARY_DECAY:e} of interior max {interior:e}")]
    GridTooSmall { boundary: f64, interior: f64 },
    #[error("function `{0}` is neither compactly supported nor rapidly decreasing")]
    NotRapidlyDecreasing(String),
    #[error("grid region is unbounded")]
    UnboundedGrid,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, TestFnError> {
        if lo.len() != hi.len() {
            return Err(TestFnError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(TestFnError::InvalidParameter("box with lo > hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// Strict containment in the interior.
    pub fn contains_in_interior(&self, other: &BoxRegion) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a < b) && self.hi.iter().zip(&other.hi).all(|(a, b)| a > b)
    }

    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
            Some(BoxRegion { lo, hi })
        } else {
            None
        }
    }

    pub fn hull(&self, other: &BoxRegion) -> BoxRegion {
        BoxRegion {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// Lattice points `j / density` inside the box, in row-major order.
    pub fn lattice(&self, density: f64) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let first = (l * density).ceil() as i64;
                let last = (h * density).floor() as i64;
                (first..=last).map(|j| j as f64 / density).collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &v in axis {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

#[derive(Debug)]
enum Node {
    Zero,
    Constant(C64),
    Coordinate(usize),
    Bump { center: Vec<f64>, radius: f64 },
    Gaussian { center: Vec<f64>, sigma: f64 },
    Sum(Arc<Node>, Arc<Node>),
    Product(Arc<Node>, Arc<Node>),
    Scale(C64, Arc<Node>),
    Derivative(Vec<u16>, Arc<Node>),
}

fn squared_radius_jet(layout: &Arc<JetLayout>, x: &[f64], center: &[f64], scale: f64) -> Jet {
    let mut v = Jet::zero(layout);
    for (j, (xj, cj)) in x.iter().zip(center).enumerate() {
        let u = Jet::variable(layout, *xj - cj, j).scale(C64::new(1.0 / scale, 0.0));
        v = v.add(&u.mul(&u));
    }
    v
}

fn squared_radius(x: &[f64], center: &[f64], scale: f64) -> f64 {
    x.iter()
        .zip(center)
        .map(|(a, c)| {
            let u = (a - c) / scale;
            u * u
        })
        .sum()
}

impl Node {
    fn value(&self, x: &[f64]) -> C64 {
        match self {
            Node::Zero => C64::new(0.0, 0.0),
            Node::Constant(c) => *c,
            Node::Coordinate(j) => C64::new(x[*j], 0.0),
            Node::Bump { center, radius } => {
                let v = squared_radius(x, center, *radius);
                if v >= 1.0 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new((-1.0 / (1.0 - v)).exp(), 0.0)
                }
            }
            Node::Gaussian { center, sigma } => C64::new((-0.5 * squared_radius(x, center, *sigma)).exp(), 0.0),
            Node::Sum(a, b) => a.value(x) + b.value(x),
            Node::Product(a, b) => a.value(x) * b.value(x),
            Node::Scale(s, a) => s * a.value(x),
            Node::Derivative(..) => self.jet(x, &JetLayout::get(x.len(), 0)).value(),
        }
    }

    fn jet(&self, x: &[f64], layout: &Arc<JetLayout>) -> Jet {
        match self {
            Node::Zero => Jet::zero(layout),
            Node::Constant(c) => Jet::constant(layout, *c),
            Node::Coordinate(j) => Jet::variable(layout, x[*j], *j),
            Node::Bump { center, radius } => {
                if squared_radius(x, center, *radius) >= 1.0 {
                    return Jet::zero(layout);
                }
                let v = squared_radius_jet(layout, x, center, *radius);
                let one_minus = v.scale(C64::new(-1.0, 0.0)).add_constant(C64::new(1.0, 0.0));
                let w = one_minus.recip().scale(C64::new(-1.0, 0.0));
                if w.value().re < -745.0 {
                    return Jet::zero(layout);
                }
                w.exp()
            }
            Node::Gaussian { center, sigma } => squared_radius_jet(layout, x, center, *sigma)
                .scale(C64::new(-0.5, 0.0))
                .exp(),
            Node::Sum(a, b) => a.jet(x, layout).add(&b.jet(x, layout)),
            Node::Product(a, b) => {
                let ja = a.jet(x, layout);
                if ja.is_zero() {
                    return ja;
                }
                ja.mul(&b.jet(x, layout))
            }
            Node::Scale(s, a) => a.jet(x, layout).scale(*s),
            Node::Derivative(gamma, a) => {
                let extra: usize = gamma.iter().map(|&g| g as usize).sum();
                let big = JetLayout::get(layout.dimension(), layout.order() + extra);
                a.jet(x, &big).shift(gamma, layout)
            }
        }
    }
}

/// A smooth complex-valued function on R^n with an exact derivative oracle.
#[derive(Clone)]
pub struct TestFunction {
    label: String,
    dim: usize,
    node: Arc<Node>,
    support: Option<BoxRegion>,
    rapid: bool,
    max_order: usize,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("rapid", &self.rapid)
            .field("max_order", &self.max_order)
            .finish()
    }
}

/// Parameters of a scaled canonical bump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpFamily {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: C64,
}

impl BumpFamily {
    pub fn to_test_function(&self) -> Result<TestFunction, TestFnError> {
        Ok(TestFunction::bump(self.center.clone(), self.radius)?.scale(self.amplitude))
    }
}

impl TestFunction {
    fn primitive(label: String, dim: usize, node: Node, support: Option<BoxRegion>, rapid: bool) -> Self {
        Self {
            label,
            dim,
            node: Arc::new(node),
            support,
            rapid,
            max_order: MAX_ORACLE_ORDER,
        }
    }

    /// `exp(−1/(1−‖(x−c)/r‖²))` inside the ball, 0 outside.
    pub fn bump(center: Vec<f64>, radius: f64) -> Result<Self, TestFnError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("bump radius {radius}")));
        }
        if center.is_empty() {
            return Err(TestFnError::InvalidParameter("empty center".into()));
        }
        let support = BoxRegion {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        };
        let label = format!("bump(c={center:?}, r={radius})");
        let dim = center.len();
        Ok(Self::primitive(label, dim, Node::Bump { center, radius }, Some(support), false))
    }

    /// `exp(−‖x−c‖²/(2σ²))`.
    pub fn gaussian(center: Vec<f64>, sigma: f64) -> Result<Self, TestFnError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("gaussian sigma {sigma}")));
        }
        if center.is_empty() {
            return Err(TestFnError::InvalidParameter("empty center".into()));
        }
        let label = format!("gaussian(c={center:?}, s={sigma})");
        let dim = center.len();
        Ok(Self::primitive(label, dim, Node::Gaussian { center, sigma }, None, true))
    }

    pub fn zero(dim: usize) -> Self {
        Self::primitive(
            "0".into(),
            dim,
            Node::Zero,
            Some(BoxRegion::cube(dim, 0.0)),
            true,
        )
    }

    /// The coordinate `x_j`; a multiplier, not itself a test function.
    pub fn coordinate(j: usize, dim: usize) -> Self {
        Self::primitive(format!("x{j}"), dim, Node::Coordinate(j), None, false)
    }

    pub fn constant(value: C64, dim: usize) -> Self {
        Self::primitive(format!("{value}"), dim, Node::Constant(value), None, false)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> Option<&BoxRegion> {
        self.support.as_ref()
    }

    /// Compactly supported or rapidly decreasing.
    pub fn is_rapidly_decreasing(&self) -> bool {
        self.rapid || self.support.is_some()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    fn is_zero_node(&self) -> bool {
        matches!(*self.node, Node::Zero)
    }

    pub fn add(&self, other: &TestFunction) -> TestFunction {
        if other.is_zero_node() {
            return self.clone();
        }
        if self.is_zero_node() {
            return other.clone();
        }
        let support = match (&self.support, &other.support) {
            (Some(a), Some(b)) => Some(a.hull(b)),
            _ => None,
        };
        TestFunction {
            label: format!("({} + {})", self.label, other.label),
            dim: self.dim,
            node: Arc::new(Node::Sum(Arc::clone(&self.node), Arc::clone(&other.node))),
            rapid: self.is_rapidly_decreasing() && other.is_rapidly_decreasing(),
            support,
            max_order: self.max_order.min(other.max_order),
        }
    }

    pub fn sub(&self, other: &TestFunction) -> TestFunction {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, alpha: C64) -> TestFunction {
        if self.is_zero_node() {
            return self.clone();
        }
        TestFunction {
            label: format!("{alpha}*{}", self.label),
            dim: self.dim,
            node: Arc::new(Node::Scale(alpha, Arc::clone(&self.node))),
            support: self.support.clone(),
            rapid: self.rapid,
            max_order: self.max_order,
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &TestFunction) -> TestFunction {
        if self.is_zero_node() || other.is_zero_node() {
            return TestFunction::zero(self.dim);
        }
        let support = match (&self.support, &other.support) {
            (Some(a), Some(b)) => Some(a.intersect(b).unwrap_or_else(|| BoxRegion::cube(self.dim, 0.0))),
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (None, None) => None,
        };
        TestFunction {
            label: format!("{}*{}", self.label, other.label),
            dim: self.dim,
            node: Arc::new(Node::Product(Arc::clone(&self.node), Arc::clone(&other.node))),
            rapid: self.rapid || other.rapid,
            support,
            max_order: self.max_order.min(other.max_order),
        }
    }

    /// `∂^γ f`.
    pub fn derivative(&self, gamma: &[u16]) -> Result<TestFunction, TestFnError> {
        self.check_dim(gamma.len())?;
        let order: usize = gamma.iter().map(|&g| g as usize).sum();
        if order > self.max_order {
            return Err(TestFnError::OrderExceedsOracle {
                requested: order,
                max: self.max_order,
            });
        }
        if self.is_zero_node() {
            return Ok(self.clone());
        }
        Ok(TestFunction {
            label: format!("D{gamma:?} {}", self.label),
            dim: self.dim,
            node: Arc::new(Node::Derivative(gamma.to_vec(), Arc::clone(&self.node))),
            support: self.support.clone(),
            rapid: self.rapid,
            max_order: self.max_order - order,
        })
    }

    fn check_dim(&self, got: usize) -> Result<(), TestFnError> {
        if got != self.dim {
            return Err(TestFnError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    fn check_order(&self, order: usize) -> Result<(), TestFnError> {
        if order > self.max_order {
            return Err(TestFnError::OrderExceedsOracle {
                requested: order,
                max: self.max_order,
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<C64, TestFnError> {
        self.check_dim(x.len())?;
        Ok(self.node.value(x))
    }

    /// Evaluation without the dimension check, for hot loops.
    pub fn value(&self, x: &[f64]) -> C64 {
        self.node.value(x)
    }

    /// All derivatives up to `order` at `x`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet, TestFnError> {
        self.check_dim(x.len())?;
        self.check_order(order)?;
        Ok(self.node.jet(x, &JetLayout::get(self.dim, order)))
    }

    /// `∂^α f(x)`.
    pub fn derivative_at(&self, alpha: &[u16], x: &[f64]) -> Result<C64, TestFnError> {
        self.check_dim(alpha.len())?;
        let order: usize = alpha.iter().map(|&a| a as usize).sum();
        let j = self.jet(x, order)?;
        Ok(j.derivative(alpha).unwrap_or_default())
    }

    /// CSV table `x_1..x_n, alpha, re, im` of all derivatives up to `order`.
    pub fn derivative_table_csv(&self, points: &[Vec<f64>], order: usize) -> Result<String, TestFnError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{}", j + 1)).collect();
        header.extend(["alpha".into(), "re".into(), "im".into()]);
        w.write_record(&header).map_err(|e| TestFnError::InvalidParameter(e.to_string()))?;
        for x in points {
            let jet = self.jet(x, order)?;
            for alpha in jet.layout().indices() {
                let d = jet.derivative(alpha).unwrap_or_default();
                let mut row: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
                row.push(alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(":"));
                row.push(format!("{:e}", d.re));
                row.push(format!("{:e}", d.im));
                w.write_record(&row).map_err(|e| TestFnError::InvalidParameter(e.to_string()))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| TestFnError::InvalidParameter(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

/// How the compact sets `K_i` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Exhaustion {
    /// Ω = R^n with `K_i = [−i·step, i·step]^n`.
    Linear { step: f64 },
    /// Ω the open box `(lo, hi)`, with `K_i` shrunk toward the center by `1/(i+1)` of the half-width.
    Interior { omega: BoxRegion },
    /// Explicit nested boxes `K_1, K_2, ...`; the last is reused for larger indices.
    Explicit(Vec<BoxRegion>),
}

impl Exhaustion {
    pub fn region(&self, i: usize, dim: usize) -> BoxRegion {
        let i = i.max(1);
        match self {
            Exhaustion::Linear { step } => BoxRegion::cube(dim, step * i as f64),
            Exhaustion::Interior { omega } => {
                let shrink = 1.0 / (i as f64 + 1.0);
                let (lo, hi) = omega
                    .lo
                    .iter()
                    .zip(&omega.hi)
                    .map(|(l, h)| {
                        let c = 0.5 * (l + h);
                        let half = 0.5 * (h - l) * (1.0 - shrink);
                        (c - half, c + half)
                    })
                    .unzip();
                BoxRegion { lo, hi }
            }
            Exhaustion::Explicit(boxes) => boxes[(i - 1).min(boxes.len() - 1)].clone(),
        }
    }

    /// Smallest `i ≥ 1` (up to `max`) with `x ∈ K_i`.
    fn first_index(&self, x: &[f64], max: usize) -> Option<usize> {
        match self {
            Exhaustion::Linear { step } => {
                let dim = x.len();
                let r = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let mut i = ((r / step).ceil() as usize).max(1);
                while i > 1 && self.region(i - 1, dim).contains(x) {
                    i -= 1;
                }
                while i <= max && !self.region(i, dim).contains(x) {
                    i += 1;
                }
                (i <= max).then_some(i)
            }
            _ => (1..=max).find(|&i| self.region(i, x.len()).contains(x)),
        }
    }

    fn validate(&self, dim: usize, upto: usize) -> Result<(), TestFnError> {
        match self {
            Exhaustion::Linear { step } if !(*step > 0.0 && step.is_finite()) => {
                Err(TestFnError::InvalidParameter(format!("exhaustion step {step}")))
            }
            Exhaustion::Explicit(boxes) if boxes.is_empty() => {
                Err(TestFnError::InvalidParameter("empty exhaustion".into()))
            }
            _ => {
                for i in 1..upto.min(64) {
                    let (a, b) = (self.region(i, dim), self.region(i + 1, dim));
                    if a.dimension() != dim {
                        return Err(TestFnError::DimensionMismatch {
                            expected: dim,
                            got: a.dimension(),
                        });
                    }
                    if matches!(self, Exhaustion::Explicit(bx) if i >= bx.len()) {
                        break;
                    }
                    if !b.contains_in_interior(&a) {
                        return Err(TestFnError::InvalidParameter(format!(
                            "K_{i} is not in the interior of K_{}",
                            i + 1
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Which Fréchet metric is computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MetricVariant {
    /// C∞(Ω): `p_i` is a maximum over `K_i`.
    CInfinity(Exhaustion),
    /// D(Ω): every `p_i` is a maximum over all of Ω (`None` for R^n).
    Distribution { omega: Option<BoxRegion> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrechetMetricParams {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub truncation: usize,
    pub variant: MetricVariant,
    /// Lattice points per unit length.
    pub density: f64,
    /// Points always added to the grid (evaluation points of functionals).
    pub extra_points: Vec<Vec<f64>>,
}

/// Truncation index making the geometric tail `base^{−I}/(base−1)` fall below 1e-9.
pub fn default_truncation(base: f64) -> usize {
    ((1e-9 * (base - 1.0)).ln() / (1.0 / base).ln()).ceil().max(1.0) as usize
}

impl Default for FrechetMetricParams {
    fn default() -> Self {
        Self {
            a: 2.0,
            b: 1.0,
            n: 2,
            truncation: default_truncation(2.0),
            variant: MetricVariant::CInfinity(Exhaustion::Linear { step: 1.0 }),
            density: 100.0,
            extra_points: Vec::new(),
        }
    }
}

impl FrechetMetricParams {
    pub fn validate(&self, dim: usize) -> Result<(), TestFnError> {
        if !(self.a > 1.0 && self.a.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("a = {} must exceed 1", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("b = {} must be positive", self.b)));
        }
        if self.n == 0 || self.truncation == 0 {
            return Err(TestFnError::InvalidParameter("N and I must be positive".into()));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("grid density {}", self.density)));
        }
        if let MetricVariant::CInfinity(ex) = &self.variant {
            ex.validate(dim, self.truncation.max(self.n) + 1)?;
        }
        Ok(())
    }

    pub fn tail_bound(&self) -> f64 {
        self.a.powi(-(self.truncation as i32)) / (self.a - 1.0)
    }

    pub fn with_extra_points(mut self, pts: Vec<Vec<f64>>) -> Self {
        self.extra_points = pts;
        self
    }

    /// The compact set over which `p_i` is taken (`None` for all of R^n).
    pub fn region(&self, i: usize, dim: usize) -> Option<BoxRegion> {
        match &self.variant {
            MetricVariant::CInfinity(ex) => Some(ex.region(i, dim)),
            MetricVariant::Distribution { omega } => omega.clone(),
        }
    }
}

/// Grid maxima of derivative magnitudes.
#[derive(Debug, Clone, Serialize)]
pub struct SeminormTable {
    /// `p[i]` for `i = 0..=order`.
    pub p: Vec<f64>,
    /// Largest magnitude of an exactly-order-`k` derivative over the whole grid.
    pub top_order: Vec<f64>,
    pub grid_points: usize,
    pub spacing: f64,
}

fn merge_max(mut a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    for (x, y) in a.iter_mut().zip(b) {
        if y > *x {
            *x = y;
        }
    }
    a
}

/// Per-order maxima of `|∂^α f(x)|`.
fn order_maxima(jet: &Jet, order: usize) -> Vec<f64> {
    let layout = jet.layout();
    let mut out = vec![0.0; order + 1];
    for i in 0..layout.len() {
        let d = layout.degree(i);
        let v = jet.derivative_abs_at(i);
        if v > out[d] {
            out[d] = v;
        }
    }
    out
}

fn grid_for(f: &TestFunction, region: Option<BoxRegion>, params: &FrechetMetricParams) -> Result<Vec<Vec<f64>>, TestFnError> {
    let area = match (region, f.support()) {
        (Some(r), Some(s)) => r.intersect(s),
        (Some(r), None) => Some(r),
        (None, Some(s)) => Some(s.clone()),
        (None, None) => return Err(TestFnError::UnboundedGrid),
    };
    let Some(area) = area else {
        return Ok(Vec::new());
    };
    let mut pts = area.lattice(params.density);
    for e in &params.extra_points {
        if e.len() == f.dimension() && area.contains(e) && !pts.contains(e) {
            pts.push(e.clone());
        }
    }
    Ok(pts)
}

/// All `p_i(f)` for `i ≤ order`, plus the order `order + 1` maxima for the upper estimate.
pub fn seminorm_table(f: &TestFunction, order: usize, params: &FrechetMetricParams) -> Result<SeminormTable, TestFnError> {
    params.validate(f.dimension())?;
    f.check_order(order + 1)?;
    let dim = f.dimension();
    let outer = params.region(order.max(1), dim);
    let pts = grid_for(f, outer, params)?;
    let layout = JetLayout::get(dim, order + 1);
    let width = order + 2;
    let (p, top) = pts
        .par_iter()
        .map(|x| {
            let first = match &params.variant {
                MetricVariant::CInfinity(ex) => ex.first_index(x, order.max(1)),
                MetricVariant::Distribution { .. } => Some(0),
            };
            let mut p = vec![0.0; order + 1];
            let jet = f.node.jet(x, &layout);
            let by_order = order_maxima(&jet, order + 1);
            if let Some(first) = first {
                // p_i over K_i takes derivatives up to order i; K_0 is K_1
                let mut run = 0.0_f64;
                for (i, slot) in p.iter_mut().enumerate() {
                    run = run.max(by_order[i]);
                    if i >= first || (i == 0 && first <= 1) {
                        *slot = run;
                    }
                }
            }
            let mut top = vec![0.0; width];
            top[..by_order.len()].copy_from_slice(&by_order);
            (p, top)
        })
        .reduce(
            || (vec![0.0; order + 1], vec![0.0; width]),
            |(pa, ta), (pb, tb)| (merge_max(pa, pb), merge_max(ta, tb)),
        );
    Ok(SeminormTable {
        p,
        top_order: top,
        grid_points: pts.len(),
        spacing: 1.0 / params.density,
    })
}

/// `p_i(f)`: grid maximum of `|∂^α f|` over `K_i`, `|α| ≤ i`.
pub fn seminorm_p_i(f: &TestFunction, i: usize, params: &FrechetMetricParams) -> Result<f64, TestFnError> {
    f.check_order(i)?;
    let dim = f.dimension();
    params.validate(dim)?;
    let region = params.region(i, dim);
    let pts = grid_for(f, region, params)?;
    let layout = JetLayout::get(dim, i);
    Ok(pts
        .par_iter()
        .map(|x| {
            let jet = f.node.jet(x, &layout);
            order_maxima(&jet, i).into_iter().fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// A truncated Fréchet-series metric value.
#[derive(Debug, Clone, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub series: f64,
    /// The max-term (`p_N` or `‖·‖_N`).
    pub p_n: f64,
    /// Bound on the omitted series terms.
    pub tail_bound: f64,
    /// Heuristic upper estimate: seminorms inflated by a mean-value step
    /// against the next-order grid maxima, plus the tail bound.
    pub upper: f64,
    pub seminorms: Vec<f64>,
    pub n: usize,
    pub grid_points: usize,
}

/// `max(Σ_{i=1}^{I} a^{−i} p_i/(b+p_i), p_N)` from precomputed `p_1..p_I`.
pub fn frechet_combine(p: &[f64], p_n: f64, a: f64, b: f64) -> (f64, f64) {
    let series = p
        .iter()
        .enumerate()
        .map(|(k, &pi)| a.powi(-(k as i32 + 1)) * pi / (b + pi))
        .sum::<f64>();
    (series, series.max(p_n))
}

/// `max(Σ_{k=0}^{I} b^{−k} s_k/(a+s_k), s_N)` from precomputed `s_0..s_I`.
pub fn schwartz_combine(s: &[f64], s_n: f64, a: f64, b: f64) -> (f64, f64) {
    let series = s
        .iter()
        .enumerate()
        .map(|(k, &sk)| b.powi(-(k as i32)) * sk / (a + sk))
        .sum::<f64>();
    (series, series.max(s_n))
}

/// The metric `d(f, g)` on C∞(Ω) or D(Ω).
pub fn frechet_metric(f: &TestFunction, g: &TestFunction, params: &FrechetMetricParams) -> Result<MetricValue, TestFnError> {
    if f.dimension() != g.dimension() {
        return Err(TestFnError::DimensionMismatch {
            expected: f.dimension(),
            got: g.dimension(),
        });
    }
    frechet_norm(&f.sub(g), params)
}

/// `d(h, 0)`.
pub fn frechet_norm(h: &TestFunction, params: &FrechetMetricParams) -> Result<MetricValue, TestFnError> {
    let order = params.truncation.max(params.n);
    let table = seminorm_table(h, order, params)?;
    let p = &table.p;
    let (series, value) = frechet_combine(&p[1..=params.truncation], p[params.n], params.a, params.b);
    let step = table.spacing * (h.dimension() as f64).sqrt();
    let inflated: Vec<f64> = (0..=order)
        .map(|i| {
            let next = table.top_order[..=i + 1].iter().cloned().fold(0.0, f64::max);
            p[i] + step * next
        })
        .collect();
    let (series_up, _) = frechet_combine(&inflated[1..=params.truncation], inflated[params.n], params.a, params.b);
    let tail = params.tail_bound();
    Ok(MetricValue {
        value,
        series,
        p_n: p[params.n],
        tail_bound: tail,
        upper: (series_up + tail).max(inflated[params.n]),
        seminorms: p.clone(),
        n: params.n,
        grid_points: table.grid_points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchwartzParams {
    /// Denominator offset, `a > 0`.
    pub a: f64,
    /// Series base, `b > 1`.
    pub b: f64,
    pub n: usize,
    pub truncation: usize,
    /// The grid covers `[−window, window]^n`.
    pub window: f64,
    pub density: f64,
}

impl Default for SchwartzParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 2.0,
            n: 2,
            truncation: default_truncation(2.0),
            window: 16.0,
            density: 20.0,
        }
    }
}

impl SchwartzParams {
    pub fn validate(&self) -> Result<(), TestFnError> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("a = {} must be positive", self.a)));
        }
        if !(self.b > 1.0 && self.b.is_finite()) {
            return Err(TestFnError::InvalidParameter(format!("b = {} must exceed 1", self.b)));
        }
        if !(self.window > 0.0 && self.density > 0.0 && self.window.is_finite() && self.density.is_finite()) {
            return Err(TestFnError::InvalidParameter("window and density must be positive".into()));
        }
        Ok(())
    }

    pub fn tail_bound(&self) -> f64 {
        self.b.powi(-(self.truncation as i32)) / (self.b - 1.0)
    }
}

/// `‖f‖_k` for every `k ≤ order`, each checked for boundary decay.
pub fn schwartz_table(f: &TestFunction, order: usize, params: &SchwartzParams) -> Result<Vec<f64>, TestFnError> {
    params.validate()?;
    if !f.is_rapidly_decreasing() {
        return Err(TestFnError::NotRapidlyDecreasing(f.label().to_string()));
    }
    f.check_order(order)?;
    let dim = f.dimension();
    let window = BoxRegion::cube(dim, params.window);
    let pts = window.lattice(params.density);
    let h = 1.0 / params.density;
    let edge = params.window - 1.5 * h;
    let layout = JetLayout::get(dim, order);
    let (interior, boundary) = pts
        .par_iter()
        .map(|x| {
            let jet = f.node.jet(x, &layout);
            let by_order = order_maxima(&jet, order);
            let w = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            let mut run = 0.0_f64;
            let weighted: Vec<f64> = by_order
                .iter()
                .enumerate()
                .map(|(k, &m)| {
                    run = run.max(m);
                    w.powi(k as i32) * run
                })
                .collect();
            let on_edge = x.iter().any(|v| v.abs() > edge);
            if on_edge {
                (vec![0.0; order + 1], weighted)
            } else {
                (weighted, vec![0.0; order + 1])
            }
        })
        .reduce(
            || (vec![0.0; order + 1], vec![0.0; order + 1]),
            |(ia, ba), (ib, bb)| (merge_max(ia, ib), merge_max(ba, bb)),
        );
    for k in 0..=order {
        if boundary[k] > BOUNDARY_DECAY * interior[k] {
            return Err(TestFnError::GridTooSmall {
                boundary: boundary[k],
                interior: interior[k],
            });
        }
    }
    Ok(interior.iter().zip(&boundary).map(|(a, b)| a.max(*b)).collect())
}

/// `‖f‖_k = sup_{|α|≤k} sup_x (1+‖x‖²)^k |∂^α f(x)|` on the grid.
pub fn schwartz_seminorm(f: &TestFunction, k: usize, params: &SchwartzParams) -> Result<f64, TestFnError> {
    Ok(schwartz_table(f, k, params)?[k])
}

/// The Schwartz-space metric `d(f, g)`.
pub fn schwartz_metric(f: &TestFunction, g: &TestFunction, params: &SchwartzParams) -> Result<MetricValue, TestFnError> {
    let h = f.sub(g);
    let order = params.truncation.max(params.n);
    let s = schwartz_table(&h, order, params)?;
    let (series, value) = schwartz_combine(&s[..=params.truncation], s[params.n], params.a, params.b);
    let tail = params.tail_bound();
    Ok(MetricValue {
        value,
        series,
        p_n: s[params.n],
        tail_bound: tail,
        upper: (series + tail).max(s[params.n]),
        seminorms: s,
        n: params.n,
        grid_points: (2.0 * params.window * params.density) as usize + 1,
    })
}

/// Largest deviation between central differences of the order-`j` oracle
/// and the order-`j+1` oracle, relative to `max(1e-6, 1e-4·scale)`.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteDifferenceCheck {
    pub worst_ratio: f64,
    pub worst_point: Vec<f64>,
    pub worst_alpha: Vec<u16>,
    pub holds: bool,
}

pub fn finite_difference_check(
    f: &TestFunction,
    points: &[Vec<f64>],
    max_order: usize,
    h: f64,
) -> Result<FiniteDifferenceCheck, TestFnError> {
    let dim = f.dimension();
    let layout = JetLayout::get(dim, max_order);
    let mut worst = (0.0_f64, Vec::new(), Vec::new());
    for x in points {
        let centre = f.jet(x, max_order)?;
        let scale = (0..layout.len()).map(|i| centre.derivative_abs_at(i)).fold(0.0, f64::max);
        let tol = 1e-6_f64.max(1e-4 * scale);
        for var in 0..dim {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[var] += h;
            xm[var] -= h;
            let jp = f.jet(&xp, max_order)?;
            let jm = f.jet(&xm, max_order)?;
            for (i, alpha) in layout.indices().iter().enumerate() {
                if layout.degree(i) >= max_order {
                    continue;
                }
                let fd = (jp.derivative(alpha).unwrap_or_default() - jm.derivative(alpha).unwrap_or_default()) / (2.0 * h);
                let mut up = alpha.clone();
                up[var] += 1;
                let exact = centre.derivative(&up).unwrap_or_default();
                let ratio = (fd - exact).norm() / tol;
                if ratio > worst.0 {
                    worst = (ratio, x.clone(), up);
                }
            }
        }
    }
    Ok(FiniteDifferenceCheck {
        worst_ratio: worst.0,
        worst_point: worst.1,
        worst_alpha: worst.2,
        holds: worst.0 <= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// `P_k` with `b^{(k)}(u) = P_k(u) (1−u²)^{−2k} b(u)` for the unit bump.
    fn recurrence_poly(k: usize) -> Vec<f64> {
        let mut p = vec![1.0];
        for step in 0..k {
            let kk = step as f64;
            let deg = p.len() + 4;
            let mut next = vec![0.0; deg];
            // (1-u^2)^2 P'
            for (i, &c) in p.iter().enumerate().skip(1) {
                let d = c * i as f64;
                next[i - 1] += d;
                next[i + 1] -= 2.0 * d;
                next[i + 3] += d;
            }
            for (i, &c) in p.iter().enumerate() {
                // 4k u (1-u^2) P
                next[i + 1] += 4.0 * kk * c;
                next[i + 3] -= 4.0 * kk * c;
                // -2u P
                next[i + 1] -= 2.0 * c;
            }
            while next.len() > 1 && *next.last().unwrap() == 0.0 {
                next.pop();
            }
            p = next;
        }
        p
    }

    /// Oracle value together with the magnitude scale of its polynomial
    /// evaluation, which bounds the oracle's own rounding error.
    fn recurrence_derivative(k: usize, u: f64) -> (f64, f64) {
        if u.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let p = recurrence_poly(k);
        let val = p.iter().rev().fold(0.0, |acc, c| acc * u + c);
        let mag = p.iter().rev().fold(0.0, |acc, c: &f64| acc * u.abs() + c.abs());
        let factor = (-1.0 / (1.0 - u * u)).exp() / (1.0 - u * u).powi(2 * k as i32);
        (val * factor, mag * factor)
    }

    fn bump1() -> TestFunction {
        TestFunction::bump(vec![0.0], 1.0).unwrap()
    }

    #[test]
    fn bump_peak_is_exp_minus_one() {
        let params = FrechetMetricParams::default();
        let p0 = seminorm_p_i(&bump1(), 0, &params).unwrap();
        assert!((p0 - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = bump1();
        for x in [1.0, -1.0, 1.5, -3.0] {
            assert_eq!(b.eval(&[x]).unwrap(), r(0.0));
            assert!(b.jet(&[x], 8).unwrap().is_zero());
        }
    }

    #[test]
    fn jet_matches_closed_recurrence() {
        let b = bump1();
        for &u in &[0.0, 0.1, -0.35, 0.5, 0.72, -0.9] {
            let jet = b.jet(&[u], 14).unwrap();
            for k in 0..=14usize {
                let (want, mag) = recurrence_derivative(k, u);
                let got = jet.derivative(&[k as u16]).unwrap();
                let tol = 1e-12 * want.abs() + 64.0 * f64::EPSILON * (k as f64 + 1.0) * mag;
                assert!((got.re - want).abs() <= tol, "k={k} u={u} got={} want={want}", got.re);
                assert_eq!(got.im, 0.0);
            }
        }
        // high-precision reference values at points where the oracle polynomial cancels
        let d10 = b.derivative_at(&[10], &[-0.9]).unwrap().re;
        assert!((d10 - -174832625040570.22).abs() <= 1e-13 * d10.abs());
        let d14 = b.derivative_at(&[14], &[0.72]).unwrap().re;
        assert!((d14 - -32932413366448952.5).abs() <= 1e-13 * d14.abs());
    }

    #[test]
    fn scaled_radius_follows_chain_rule() {
        let b = TestFunction::bump(vec![0.5], 2.0).unwrap();
        let u = 0.3;
        let x = 0.5 + 2.0 * u;
        for k in 0..8 {
            let want = recurrence_derivative(k, u).0 / 2.0f64.powi(k as i32);
            let got = b.derivative_at(&[k as u16], &[x]).unwrap().re;
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-10));
        }
    }

    #[test]
    fn finite_differences_agree_with_oracle() {
        let b = bump1();
        let pts: Vec<Vec<f64>> = [-0.8, -0.3, 0.0, 0.2, 0.6].iter().map(|&x| vec![x]).collect();
        let check = finite_difference_check(&b, &pts, 6, 1e-4).unwrap();
        assert!(check.holds, "{check:?}");
        let b2 = TestFunction::bump(vec![0.1, -0.2], 0.8).unwrap();
        let pts2 = vec![vec![0.2, -0.1], vec![-0.3, 0.1], vec![0.1, -0.2]];
        assert!(finite_difference_check(&b2, &pts2, 4, 1e-4).unwrap().holds);
    }

    #[test]
    fn zero_function_has_zero_seminorms() {
        let params = FrechetMetricParams {
            truncation: 6,
            ..Default::default()
        };
        let z = TestFunction::zero(1);
        for i in 0..5 {
            assert_eq!(seminorm_p_i(&z, i, &params).unwrap(), 0.0);
        }
        assert_eq!(frechet_norm(&z, &params).unwrap().value, 0.0);
    }

    #[test]
    fn scaling_scales_seminorms_exactly() {
        let params = FrechetMetricParams {
            truncation: 6,
            density: 64.0,
            ..Default::default()
        };
        let b = bump1();
        let b3 = b.scale(r(3.0));
        for i in 0..6 {
            let p = seminorm_p_i(&b, i, &params).unwrap();
            let p3 = seminorm_p_i(&b3, i, &params).unwrap();
            assert!((p3 - 3.0 * p).abs() <= 4.0 * f64::EPSILON * p3);
        }
    }

    #[test]
    fn order_beyond_oracle_is_rejected() {
        let params = FrechetMetricParams::default();
        let err = seminorm_p_i(&bump1(), MAX_ORACLE_ORDER + 1, &params).unwrap_err();
        assert!(matches!(err, TestFnError::OrderExceedsOracle { .. }));
        let d = bump1().derivative(&[MAX_ORACLE_ORDER as u16]).unwrap();
        assert!(matches!(d.jet(&[0.0], 1), Err(TestFnError::OrderExceedsOracle { .. })));
    }

    #[test]
    fn geometric_series_example() {
        let p = vec![1.0; 60];
        let (series, value) = frechet_combine(&p, 1.0, 2.0, 1.0);
        assert!((series - 0.5).abs() < 1e-12);
        assert_eq!(value, 1.0);
        let params = FrechetMetricParams {
            truncation: 20,
            ..Default::default()
        };
        assert!((params.tail_bound() - 9.5367431640625e-7).abs() < 1e-18);
        assert_eq!(default_truncation(2.0), 30);
    }

    #[test]
    fn schwartz_series_example() {
        let s = vec![1.0; 61];
        let (series, value) = schwartz_combine(&s, 1.0, 1.0, 2.0);
        assert!((series - 1.0).abs() < 1e-12);
        assert!((value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_of_equal_functions_is_zero() {
        let params = FrechetMetricParams {
            truncation: 8,
            ..Default::default()
        };
        let b = bump1();
        let d = frechet_metric(&b, &b, &params).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn metric_dominates_p_n_and_records_tail() {
        let params = FrechetMetricParams {
            truncation: 10,
            density: 50.0,
            ..Default::default()
        };
        let b = TestFunction::bump(vec![0.2], 0.7).unwrap();
        let d = frechet_norm(&b, &params).unwrap();
        assert!(d.value >= d.p_n);
        assert_eq!(d.tail_bound, 2.0f64.powi(-10));
        assert!(d.upper >= d.value);
    }

    #[test]
    fn translation_invariance_is_exact() {
        let params = FrechetMetricParams {
            truncation: 6,
            density: 40.0,
            ..Default::default()
        };
        let f = TestFunction::bump(vec![0.1], 0.6).unwrap();
        let g = TestFunction::bump(vec![-0.2], 0.5).unwrap().scale(r(2.0));
        let h = TestFunction::bump(vec![0.3], 0.9).unwrap();
        let d1 = frechet_metric(&f.add(&h), &g.add(&h), &params).unwrap().value;
        let d2 = frechet_metric(&f, &g, &params).unwrap().value;
        assert!((d1 - d2).abs() <= 1e-12 * d2.max(1.0));
    }

    #[test]
    fn linear_exhaustion_restricts_to_k_i() {
        let params = FrechetMetricParams {
            truncation: 4,
            density: 20.0,
            ..Default::default()
        };
        // support [2.5, 3.5] only enters K_3 and beyond
        let f = TestFunction::bump(vec![3.0], 0.5).unwrap();
        assert_eq!(seminorm_p_i(&f, 1, &params).unwrap(), 0.0);
        assert_eq!(seminorm_p_i(&f, 2, &params).unwrap(), 0.0);
        assert!(seminorm_p_i(&f, 3, &params).unwrap() > 0.0);
        let table = seminorm_table(&f, 4, &params).unwrap();
        assert_eq!(table.p[2], 0.0);
        assert!((table.p[3] - seminorm_p_i(&f, 3, &params).unwrap()).abs() <= 1e-15 * table.p[3]);
        assert!((table.p[4] - seminorm_p_i(&f, 4, &params).unwrap()).abs() <= 1e-15 * table.p[4]);
    }

    #[test]
    fn distribution_variant_uses_whole_support() {
        let params = FrechetMetricParams {
            truncation: 4,
            density: 20.0,
            variant: MetricVariant::Distribution { omega: None },
            ..Default::default()
        };
        let f = TestFunction::bump(vec![3.0], 0.5).unwrap();
        assert!((seminorm_p_i(&f, 0, &params).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn exhaustion_must_nest() {
        let bad = Exhaustion::Explicit(vec![BoxRegion::cube(1, 1.0), BoxRegion::cube(1, 1.0)]);
        let params = FrechetMetricParams {
            variant: MetricVariant::CInfinity(bad),
            ..Default::default()
        };
        assert!(params.validate(1).is_err());
        let ok = Exhaustion::Interior {
            omega: BoxRegion::new(vec![0.0], vec![1.0]).unwrap(),
        };
        assert!(ok.validate(1, 30).is_ok());
    }

    #[test]
    fn schwartz_gaussian_k0_is_one() {
        let g = TestFunction::gaussian(vec![0.0], std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let params = SchwartzParams::default();
        let s0 = schwartz_seminorm(&g, 0, &params).unwrap();
        assert!((s0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schwartz_k1_matches_dense_oracle() {
        let g = TestFunction::gaussian(vec![0.0], std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let params = SchwartzParams {
            window: 8.0,
            density: 400.0,
            ..Default::default()
        };
        let s1 = schwartz_seminorm(&g, 1, &params).unwrap();
        // dense closed-form oracle: (1+x^2) max(|e^{-x^2}|, |2x e^{-x^2}|)
        let oracle = (0..=2_000_000)
            .map(|j| {
                let x = -4.0 + 8.0 * j as f64 / 2_000_000.0;
                let e = (-x * x).exp();
                (1.0 + x * x) * e.max((2.0 * x * e).abs())
            })
            .fold(0.0, f64::max);
        assert!((s1 - oracle).abs() < 1e-6, "{s1} vs {oracle}");
    }

    #[test]
    fn schwartz_small_window_is_rejected() {
        let g = TestFunction::gaussian(vec![0.0], 1.0).unwrap();
        let params = SchwartzParams {
            window: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            schwartz_seminorm(&g, 2, &params),
            Err(TestFnError::GridTooSmall { .. })
        ));
        let poly = TestFunction::coordinate(0, 1);
        assert!(matches!(
            schwartz_seminorm(&poly, 0, &params),
            Err(TestFnError::NotRapidlyDecreasing(_))
        ));
    }

    #[test]
    fn schwartz_metric_zero_and_homogeneous_max_term() {
        let g = TestFunction::gaussian(vec![0.0], 1.0).unwrap();
        let params = SchwartzParams {
            truncation: 8,
            window: 12.0,
            ..Default::default()
        };
        assert_eq!(schwartz_metric(&g, &g, &params).unwrap().value, 0.0);
        let z = TestFunction::zero(1);
        let d1 = schwartz_metric(&g, &z, &params).unwrap();
        let d2 = schwartz_metric(&g.scale(r(2.0)), &z, &params).unwrap();
        assert!((d2.p_n - 2.0 * d1.p_n).abs() <= 4.0 * f64::EPSILON * d2.p_n);
    }

    #[test]
    fn derivative_node_shifts_oracle() {
        let b = TestFunction::bump(vec![0.0], 1.0).unwrap();
        let db = b.derivative(&[2]).unwrap();
        for x in [-0.5, 0.0, 0.3] {
            let want = b.derivative_at(&[5], &[x]).unwrap();
            let got = db.derivative_at(&[3], &[x]).unwrap();
            assert!((want - got).norm() <= 1e-12 * want.norm().max(1.0));
        }
        assert_eq!(db.max_order(), MAX_ORACLE_ORDER - 2);
    }

    #[test]
    fn derivative_table_exports_rows() {
        let csv = bump1().derivative_table_csv(&[vec![0.0], vec![0.5]], 2).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 3);
        assert!(csv.starts_with("x1,alpha,re,im"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn metric_axioms_on_bump_triples(
            c in prop::collection::vec(-0.8f64..0.8, 3),
            rad in prop::collection::vec(0.3f64..0.9, 3),
            amp in prop::collection::vec(-2.0f64..2.0, 3),
        ) {
            let params = FrechetMetricParams { truncation: 6, density: 30.0, ..Default::default() };
            let fs: Vec<TestFunction> = (0..3)
                .map(|i| TestFunction::bump(vec![c[i]], rad[i]).unwrap().scale(r(amp[i])))
                .collect();
            let d = |a: &TestFunction, b: &TestFunction| frechet_metric(a, b, &params).unwrap().value;
            let (d01, d12, d02) = (d(&fs[0], &fs[1]), d(&fs[1], &fs[2]), d(&fs[0], &fs[2]));
            prop_assert!(d02 <= d01 + d12 + 1e-9);
            prop_assert!((d01 - d(&fs[1], &fs[0])).abs() <= 1e-9);
            prop_assert!(d01 >= 0.0);
        }

        #[test]
        fn series_term_is_subadditive(u in 0.0f64..1e6, v in 0.0f64..1e6, b in 0.01f64..10.0) {
            let phi = |t: f64| t / (b + t);
            prop_assert!(phi(u + v) <= phi(u) + phi(v) + 1e-15);
        }
    }
}
