//! Finite-dimensional carriers: normed and inner-product spaces, deterministic
//! sample sets, and metric descriptors with the translation-invariance and
//! scale-boundedness probes.
//!
//! Every vector is stored with complex coordinates. Real spaces simply keep
//! the imaginary parts at zero, so a single code path serves both fields.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance;

pub type C64 = Complex64;

/// A point of a finite-dimensional space.
pub type Vector = Vec<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("weight {index} is {value}; weights must be strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("vector has length {got}, space has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis is not orthonormal: <e{i}, e{j}> = {value}")]
    NotOrthonormal { i: usize, j: usize, value: f64 },
    #[error("every probe has zero distance to the origin")]
    DegenerateProbe,
    #[error("sample set is empty")]
    EmptySamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormType {
    L1,
    L2,
    Linf,
    /// Weighted ℓ1: `Σ w_i |x_i|`.
    Weighted(Vec<f64>),
}

/// A finite-dimensional normed space over R or C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    dimension: usize,
    field: ScalarField,
    norm: NormType,
}

impl FiniteSpace {
    pub fn new(dimension: usize, field: ScalarField, norm: NormType) -> Result<Self, SpaceError> {
        if dimension == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        if let NormType::Weighted(w) = &norm {
            if w.len() != dimension {
                return Err(SpaceError::WeightCount {
                    expected: dimension,
                    got: w.len(),
                });
            }
            if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(SpaceError::NonPositiveWeight { index, value });
            }
        }
        Ok(Self {
            dimension,
            field,
            norm,
        })
    }

    /// Real space with the given norm. Panics on zero dimension or bad weights;
    /// use [`FiniteSpace::new`] for fallible construction.
    pub fn real(dimension: usize, norm: NormType) -> Self {
        Self::new(dimension, ScalarField::Real, norm).expect("invalid real space")
    }

    pub fn complex(dimension: usize, norm: NormType) -> Self {
        Self::new(dimension, ScalarField::Complex, norm).expect("invalid complex space")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn field(&self) -> ScalarField {
        self.field
    }

    pub fn norm_type(&self) -> &NormType {
        &self.norm
    }

    pub fn zero(&self) -> Vector {
        vec![C64::new(0.0, 0.0); self.dimension]
    }

    pub fn check(&self, v: &[C64]) -> Result<(), SpaceError> {
        if v.len() != self.dimension {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dimension,
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, v: &[C64]) -> f64 {
        debug_assert_eq!(v.len(), self.dimension);
        match &self.norm {
            NormType::L1 => v.iter().map(|z| z.norm()).sum(),
            NormType::L2 => v.iter().fold(0.0_f64, |acc, z| acc.hypot(z.norm())),
            NormType::Linf => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
            NormType::Weighted(w) => v.iter().zip(w).map(|(z, w)| w * z.norm()).sum(),
        }
    }

    /// Norm of a real vector, with the same arithmetic as [`FiniteSpace::norm`].
    pub fn norm_real(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dimension);
        match &self.norm {
            NormType::L1 => v.iter().map(|x| x.abs()).sum(),
            NormType::L2 => v.iter().fold(0.0_f64, |acc, x| acc.hypot(*x)),
            NormType::Linf => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
            NormType::Weighted(w) => v.iter().zip(w).map(|(x, w)| w * x.abs()).sum(),
        }
    }
}

pub fn real_vector(xs: &[f64]) -> Vector {
    xs.iter().map(|&x| C64::new(x, 0.0)).collect()
}

pub fn add(a: &[C64], b: &[C64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: C64, a: &[C64]) -> Vector {
    a.iter().map(|x| alpha * x).collect()
}

pub fn is_zero(v: &[C64]) -> bool {
    v.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// A real inner-product space `R^n` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerProductSpace {
    dimension: usize,
    basis: Vec<Vec<f64>>,
}

impl InnerProductSpace {
    pub fn standard(dimension: usize) -> Self {
        let basis = (0..dimension)
            .map(|i| {
                let mut e = vec![0.0; dimension];
                e[i] = 1.0;
                e
            })
            .collect();
        Self { dimension, basis }
    }

    pub fn with_basis(dimension: usize, basis: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        if dimension == 0 {
            return Err(SpaceError::ZeroDimension);
        }
        for b in &basis {
            if b.len() != dimension {
                return Err(SpaceError::DimensionMismatch {
                    expected: dimension,
                    got: b.len(),
                });
            }
        }
        check_orthonormal(&basis, tolerance::EXACT)?;
        Ok(Self { dimension, basis })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn inner(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn norm(x: &[f64]) -> f64 {
        Self::inner(x, x).sqrt()
    }
}

/// Pairwise inner products must match the Kronecker delta within `tol`.
pub fn check_orthonormal(vectors: &[Vec<f64>], tol: f64) -> Result<(), SpaceError> {
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate().skip(i) {
            let value = InnerProductSpace::inner(u, v);
            let target = if i == j { 1.0 } else { 0.0 };
            if (value - target).abs() > tol {
                return Err(SpaceError::NotOrthonormal { i, j, value });
            }
        }
    }
    Ok(())
}

/// A finite, duplicate-free set of probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<Vector>,
    contains_zero: bool,
    min_nonzero_norm: f64,
    seed: Option<u64>,
}

impl SampleSet {
    /// Builds the set, dropping exact duplicates while keeping first-seen order.
    pub fn new(points: Vec<Vector>, space: &FiniteSpace) -> Result<Self, SpaceError> {
        let mut unique: Vec<Vector> = Vec::with_capacity(points.len());
        for p in points {
            space.check(&p)?;
            if !unique.iter().any(|q| bitwise_eq(q, &p)) {
                unique.push(p);
            }
        }
        let contains_zero = unique.iter().any(|p| is_zero(p));
        let min_nonzero_norm = unique
            .iter()
            .filter(|p| !is_zero(p))
            .map(|p| space.norm(p))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            points: unique,
            contains_zero,
            min_nonzero_norm: if min_nonzero_norm.is_finite() {
                min_nonzero_norm
            } else {
                0.0
            },
            seed: None,
        })
    }

    pub fn from_real(rows: &[Vec<f64>], space: &FiniteSpace) -> Result<Self, SpaceError> {
        Self::new(rows.iter().map(|r| real_vector(r)).collect(), space)
    }

    /// Scalar grid on a one-dimensional space.
    pub fn scalars(values: &[f64], space: &FiniteSpace) -> Result<Self, SpaceError> {
        Self::new(values.iter().map(|&v| vec![C64::new(v, 0.0)]).collect(), space)
    }

    /// Seeded scrambled Halton points in the cube `[-radius, radius]^d`
    /// (real and imaginary parts both sampled on complex spaces).
    pub fn halton(
        space: &FiniteSpace,
        count: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Self, SpaceError> {
        let coords = match space.field() {
            ScalarField::Real => space.dimension(),
            ScalarField::Complex => 2 * space.dimension(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts: Vec<f64> = (0..coords).map(|_| rng.random::<f64>()).collect();
        let points = (1..=count)
            .map(|i| {
                let u: Vec<f64> = (0..coords)
                    .map(|d| {
                        let h = radical_inverse(i as u64, PRIMES[d % PRIMES.len()]) + shifts[d];
                        radius * (2.0 * h.fract() - 1.0)
                    })
                    .collect();
                match space.field() {
                    ScalarField::Real => real_vector(&u),
                    ScalarField::Complex => u.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
                }
            })
            .collect();
        let mut set = Self::new(points, space)?;
        set.seed = Some(seed);
        Ok(set)
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains_zero(&self) -> bool {
        self.contains_zero
    }

    pub fn min_nonzero_norm(&self) -> f64 {
        self.min_nonzero_norm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_zero(&self, space: &FiniteSpace) -> Self {
        let mut pts = self.points.clone();
        pts.push(space.zero());
        Self::new(pts, space)
            .expect("points already validated")
            .with_seed(self.seed)
    }

    pub fn union(&self, other: &SampleSet, space: &FiniteSpace) -> Result<Self, SpaceError> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        Ok(Self::new(pts, space)?.with_seed(self.seed))
    }

    pub fn is_subset_of(&self, other: &SampleSet) -> bool {
        self.points
            .iter()
            .all(|p| other.points.iter().any(|q| bitwise_eq(p, q)))
    }
}

fn bitwise_eq(a: &[C64], b: &[C64]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
        })
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

type MetricFn = dyn Fn(&[C64], &[C64]) -> f64 + Send + Sync;

/// A metric on a finite-dimensional space, with the claims the caller makes
/// about it.
#[derive(Clone)]
pub struct MetricDescriptor {
    label: String,
    eval: Arc<MetricFn>,
    translation_invariant: bool,
    /// `α ↦ C_α` with `d(αs, 0) ≤ C_α d(s, 0)`.
    scale_constants: Option<Vec<(C64, f64)>>,
}

impl fmt::Debug for MetricDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricDescriptor")
            .field("label", &self.label)
            .field("translation_invariant", &self.translation_invariant)
            .field("scale_constants", &self.scale_constants)
            .finish()
    }
}

impl MetricDescriptor {
    pub fn new<F>(label: impl Into<String>, translation_invariant: bool, eval: F) -> Self
    where
        F: Fn(&[C64], &[C64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            translation_invariant,
            scale_constants: None,
        }
    }

    /// `d(x, y) = ‖x − y‖`. Translation invariant, with `C_α = |α|`.
    pub fn norm_induced(space: &FiniteSpace) -> Self {
        let space = space.clone();
        Self::new(format!("norm:{:?}", space.norm_type()), true, move |x, y| {
            space.norm(&sub(x, y))
        })
    }

    pub fn with_scale_constants(mut self, constants: Vec<(C64, f64)>) -> Self {
        self.scale_constants = Some(constants);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    pub fn scale_constants(&self) -> Option<&[(C64, f64)]> {
        self.scale_constants.as_deref()
    }

    pub fn distance(&self, x: &[C64], y: &[C64]) -> f64 {
        (self.eval)(x, y)
    }

    pub fn to_zero(&self, x: &[C64]) -> f64 {
        let zero = vec![C64::new(0.0, 0.0); x.len()];
        (self.eval)(x, &zero)
    }

    /// Worst violation of the metric axioms over the probe set:
    /// `d(x,x)`, `|d(x,y) − d(y,x)|`, and `d(x,z) − d(x,y) − d(y,z)`.
    pub fn axiom_report(&self, probes: &SampleSet) -> AxiomReport {
        let pts = probes.points();
        let mut report = AxiomReport::default();
        for x in pts {
            report.max_self_distance = report.max_self_distance.max(self.distance(x, x));
            for y in pts {
                let dxy = self.distance(x, y);
                report.max_asymmetry = report.max_asymmetry.max((dxy - self.distance(y, x)).abs());
                for z in pts {
                    let excess = self.distance(x, z) - dxy - self.distance(y, z);
                    report.max_triangle_excess = report.max_triangle_excess.max(excess);
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub max_self_distance: f64,
    pub max_asymmetry: f64,
    pub max_triangle_excess: f64,
}

impl AxiomReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_self_distance <= tol && self.max_asymmetry <= tol && self.max_triangle_excess <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationReport {
    pub max_discrepancy: f64,
    pub claimed: bool,
    /// True iff the discrepancy is within tolerance.
    pub confirmed: bool,
}

/// Max of `|d(x+s, y+s) − d(x, y)|` over all probe pairs and shifts.
pub fn check_translation_invariance(
    d: &MetricDescriptor,
    probes: &SampleSet,
    shifts: &SampleSet,
    tol: f64,
) -> TranslationReport {
    let mut worst = 0.0_f64;
    for x in probes.points() {
        for y in probes.points() {
            let base = d.distance(x, y);
            for s in shifts.points() {
                let moved = d.distance(&add(x, s), &add(y, s));
                worst = worst.max((moved - base).abs());
            }
        }
    }
    TranslationReport {
        max_discrepancy: worst,
        claimed: d.translation_invariant(),
        confirmed: worst <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleConstant {
    pub alpha: C64,
    /// Sampled lower bound on any admissible `C_α`.
    pub c_hat: f64,
    /// `Ĉ_α / |α|`, the empirical bounded factor.
    pub m_hat: f64,
}

/// `Ĉ_α = max_s d(αs, 0) / d(s, 0)` over probes with `d(s, 0) > 0`.
pub fn estimate_scale_constants(
    d: &MetricDescriptor,
    probes: &SampleSet,
    scalars: &[C64],
) -> Result<Vec<ScaleConstant>, SpaceError> {
    let usable: Vec<(&Vector, f64)> = probes
        .points()
        .iter()
        .map(|s| (s, d.to_zero(s)))
        .filter(|(_, r)| *r > 0.0)
        .collect();
    if usable.is_empty() {
        return Err(SpaceError::DegenerateProbe);
    }
    Ok(scalars
        .iter()
        .map(|&alpha| {
            let c_hat = usable
                .iter()
                .map(|(s, r)| d.to_zero(&scale(alpha, s)) / r)
                .fold(0.0, f64::max);
            ScaleConstant {
                alpha,
                c_hat,
                m_hat: c_hat / alpha.norm(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r1() -> FiniteSpace {
        FiniteSpace::real(1, NormType::L1)
    }

    #[test]
    fn rejects_bad_weights() {
        let err = FiniteSpace::new(2, ScalarField::Real, NormType::Weighted(vec![1.0, 0.0]));
        assert_eq!(err, Err(SpaceError::NonPositiveWeight { index: 1, value: 0.0 }));
        assert_eq!(
            FiniteSpace::new(0, ScalarField::Real, NormType::L1),
            Err(SpaceError::ZeroDimension)
        );
    }

    #[test]
    fn norms_on_a_known_vector() {
        let v = real_vector(&[3.0, -4.0]);
        assert_eq!(FiniteSpace::real(2, NormType::L1).norm(&v), 7.0);
        assert_eq!(FiniteSpace::real(2, NormType::L2).norm(&v), 5.0);
        assert_eq!(FiniteSpace::real(2, NormType::Linf).norm(&v), 4.0);
        assert_eq!(FiniteSpace::real(2, NormType::Weighted(vec![2.0, 0.5])).norm(&v), 8.0);
        let z = vec![C64::new(3.0, 4.0)];
        assert_eq!(FiniteSpace::complex(1, NormType::L2).norm(&z), 5.0);
    }

    #[test]
    fn sample_set_dedups_and_tracks_min_norm() {
        let s = SampleSet::scalars(&[0.0, 2.0, -0.5, 2.0], &r1()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains_zero());
        assert_eq!(s.min_nonzero_norm(), 0.5);
    }

    #[test]
    fn halton_is_reproducible_per_seed() {
        let sp = FiniteSpace::real(3, NormType::L2);
        let a = SampleSet::halton(&sp, 32, 2.0, 7).unwrap();
        let b = SampleSet::halton(&sp, 32, 2.0, 7).unwrap();
        let c = SampleSet::halton(&sp, 32, 2.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
        assert_eq!(a.seed(), Some(7));
        assert!(a.points().iter().flatten().all(|z| z.re.abs() <= 2.0));
    }

    #[test]
    fn norm_metric_is_translation_invariant() {
        let sp = FiniteSpace::real(2, NormType::L2);
        let d = MetricDescriptor::norm_induced(&sp);
        let probes = SampleSet::halton(&sp, 8, 1.0, 1).unwrap();
        let shifts = SampleSet::halton(&sp, 4, 3.0, 2).unwrap();
        let rep = check_translation_invariance(&d, &probes, &shifts, tolerance::EXACT);
        assert!(rep.confirmed, "{rep:?}");
    }

    #[test]
    fn weighted_metric_is_not_translation_invariant() {
        // d(x,y) = |x−y|/(1+|x|): d(0,1) = 1 but d(1,2) = 1/2.
        let d = MetricDescriptor::new("ratio", false, |x, y| {
            (x[0] - y[0]).norm() / (1.0 + x[0].norm())
        });
        let probes = SampleSet::scalars(&[0.0, 1.0], &r1()).unwrap();
        let shifts = SampleSet::scalars(&[1.0], &r1()).unwrap();
        let rep = check_translation_invariance(&d, &probes, &shifts, tolerance::EXACT);
        assert_eq!(rep.max_discrepancy, 0.5);
        assert!(!rep.confirmed);
    }

    #[test]
    fn scale_constants_for_norm_and_truncated_metrics() {
        let d = MetricDescriptor::norm_induced(&r1());
        let probes = SampleSet::scalars(&[0.3, -1.7, 2.0], &r1()).unwrap();
        let cs = estimate_scale_constants(&d, &probes, &[C64::new(3.0, 0.0), C64::new(1.0, 0.0)])
            .unwrap();
        assert!((cs[0].c_hat - 3.0).abs() < 1e-12);
        assert!((cs[1].c_hat - 1.0).abs() < 1e-12);

        let trunc = MetricDescriptor::new("min(|x-y|,1)", true, |x, y| (x[0] - y[0]).norm().min(1.0));
        let probes = SampleSet::scalars(&[0.1], &r1()).unwrap();
        let cs = estimate_scale_constants(&trunc, &probes, &[C64::new(100.0, 0.0)]).unwrap();
        assert!((cs[0].c_hat - 10.0).abs() < 1e-12);
        assert!((cs[0].m_hat - 0.1).abs() < 1e-12);
    }

    #[test]
    fn degenerate_probes_are_rejected() {
        let d = MetricDescriptor::norm_induced(&r1());
        let probes = SampleSet::scalars(&[0.0], &r1()).unwrap();
        assert_eq!(
            estimate_scale_constants(&d, &probes, &[C64::new(2.0, 0.0)]),
            Err(SpaceError::DegenerateProbe)
        );
    }

    #[test]
    fn orthonormal_check() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(InnerProductSpace::with_basis(2, vec![vec![s, s], vec![s, -s]]).is_ok());
        assert!(matches!(
            InnerProductSpace::with_basis(2, vec![vec![1.0, 0.0], vec![1.0, 1.0]]),
            Err(SpaceError::NotOrthonormal { .. })
        ));
    }
}
