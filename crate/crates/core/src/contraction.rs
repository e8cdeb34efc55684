//! M-contraction estimates, topology boundedness, the sphere bound, the
//! closedness sequence test and the uniform-boundedness harness.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::opspace::{estimate_norm, OpError, OperatorHandle, NormKind};
use crate::spaces::{self, SampleSet, Vector, C64};
use crate::tolerance::{self, le_tol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractionError {
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("sequence does not converge: {0}")]
    NotConverging(String),
    #[error("family is empty")]
    EmptyFamily,
    #[error("scalar ladder must be nonempty and free of zeros")]
    BadScalars,
}

/// Symmetric geometric ladder `{±2^j : j = -3..=3}`.
pub fn default_scalars() -> Vec<C64> {
    (-3..=3)
        .flat_map(|j| {
            let v = 2f64.powi(j);
            [C64::new(v, 0.0), C64::new(-v, 0.0)]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionWitness {
    pub k: C64,
    pub x: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// Smallest M consistent with the samples; `+inf` when `finite` is false.
    pub m_hat: f64,
    pub witnesses: Vec<ContractionWitness>,
    pub finite: bool,
    pub pairs_checked: usize,
}

impl ContractionReport {
    pub fn admits(&self, m: f64, tol: f64) -> bool {
        self.finite && le_tol(self.m_hat, m, tol)
    }
}

/// `max ‖F(kx)‖ / (|k|‖F(x)‖)` over samples with `F(x) ≠ 0`.
pub fn estimate_m(
    f: &OperatorHandle,
    samples: &SampleSet,
    scalars: &[C64],
) -> Result<ContractionReport, ContractionError> {
    if scalars.is_empty() || scalars.iter().any(|k| k.norm() == 0.0) {
        return Err(ContractionError::BadScalars);
    }
    if samples.is_empty() {
        return Err(OpError::EmptySamples.into());
    }
    let y = f.codomain();
    let mut m_hat = 0.0_f64;
    let mut finite = true;
    let mut witnesses = Vec::new();
    let mut pairs = 0;
    for x in samples.points() {
        if spaces::is_zero(x) {
            continue;
        }
        let fx = y.norm(&f.eval(x));
        for &k in scalars {
            let fkx = y.norm(&f.eval(&spaces::scale(k, x)));
            pairs += 1;
            if fx == 0.0 {
                if fkx != 0.0 && finite {
                    finite = false;
                    witnesses.clear();
                    witnesses.push(ContractionWitness { k, x: x.clone() });
                }
                continue;
            }
            if !finite {
                continue;
            }
            let ratio = fkx / (k.norm() * fx);
            if ratio > m_hat {
                m_hat = ratio;
                witnesses.clear();
                witnesses.push(ContractionWitness { k, x: x.clone() });
            } else if ratio == m_hat && !witnesses.is_empty() {
                witnesses.push(ContractionWitness { k, x: x.clone() });
            }
        }
    }
    Ok(ContractionReport {
        m_hat: if finite { m_hat } else { f64::INFINITY },
        witnesses,
        finite,
        pairs_checked: pairs,
    })
}

/// For each radius `r`, the largest `‖F(x)‖` over generated samples with
/// `‖x‖ ≤ r`, together with `‖F(0)‖`.
pub fn check_topology_bounded<G>(f: &OperatorHandle, radii: &[f64], mut samples_for: G) -> Vec<(f64, f64)>
where
    G: FnMut(f64) -> SampleSet,
{
    let x = f.domain();
    let y = f.codomain();
    let at_zero = y.norm(f.value_at_zero());
    radii
        .iter()
        .map(|&r| {
            let s = samples_for(r);
            let image = s
                .points()
                .iter()
                .filter(|p| x.norm(p) <= r)
                .map(|p| y.norm(&f.eval(p)))
                .fold(at_zero, f64::max);
            (r, image)
        })
        .collect()
}

/// Adds `x/‖x‖` for every nonzero sample.
pub fn sphere_closure(samples: &SampleSet, f: &OperatorHandle) -> Result<SampleSet, ContractionError> {
    let x_space = f.domain();
    let mut pts = samples.points().to_vec();
    for p in samples.points() {
        let n = x_space.norm(p);
        if n > 0.0 {
            pts.push(spaces::scale(C64::new(1.0 / n, 0.0), p));
        }
    }
    SampleSet::new(pts, x_space)
        .map(|s| s.with_seed(samples.seed()))
        .map_err(|e| OpError::SpaceMismatch(e.to_string()).into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereBoundVerdict {
    pub m_hat: f64,
    pub k_bar: f64,
    pub p_hat: f64,
    pub at_zero: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `p̂(F) ≤ max(M k̄, ‖F(0)‖)` on the sphere closure of `samples`.
///
/// `M̂` is estimated over the closure with `scalars` plus every sample norm,
/// so each `x = ‖x‖u` is covered by the pair `(‖x‖, u)`.
pub fn sphere_bound_check(
    f: &OperatorHandle,
    m: f64,
    samples: &SampleSet,
    scalars: &[C64],
    tol: f64,
) -> Result<SphereBoundVerdict, ContractionError> {
    let closed = sphere_closure(samples, f)?;
    let x_space = f.domain();
    let y_space = f.codomain();
    let mut all_scalars = scalars.to_vec();
    for p in samples.points() {
        let n = x_space.norm(p);
        if n > 0.0 {
            all_scalars.push(C64::new(n, 0.0));
        }
    }
    let report = estimate_m(f, &closed, &all_scalars)?;
    if !report.admits(m, tol) {
        return Err(ContractionError::HypothesisViolated(format!(
            "sampled M {} exceeds M = {m}",
            report.m_hat
        )));
    }
    let k_bar = closed
        .points()
        .iter()
        .filter(|p| !spaces::is_zero(p) && tolerance::close(x_space.norm(p), 1.0, tolerance::EXACT))
        .map(|u| y_space.norm(&f.eval(u)))
        .fold(0.0, f64::max);
    let p_hat = estimate_norm(f, NormKind::P, &closed)?.value;
    let at_zero = y_space.norm(f.value_at_zero());
    let bound = (m * k_bar).max(at_zero);
    Ok(SphereBoundVerdict {
        m_hat: report.m_hat,
        k_bar,
        p_hat,
        at_zero,
        bound,
        holds: le_tol(p_hat, bound, tol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosednessVerdict {
    /// `p̂(F_n − F)` on `S ∪ kS`, per member.
    pub distances: Vec<f64>,
    pub member_m_hat: Vec<f64>,
    pub limit_m_hat: f64,
    /// Largest excess of `‖F(kx)‖` over the inflated bound, per member (≤ 0 when it holds).
    pub max_excess: Vec<f64>,
    pub holds: bool,
}

/// Distance threshold a closedness sequence must reach.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-6;

/// For every member and pair `(k, x)`, checks
/// `‖F(kx)‖ ≤ M|k|‖F(x)‖ + (M|k| + 1) δ_n max(‖kx‖, ‖x‖, 1)`
/// where `δ_n = p̂(F_n − F)` on the scaled closure of the samples.
pub fn closedness_sequence_test(
    seq: &[OperatorHandle],
    limit: &OperatorHandle,
    m: f64,
    samples: &SampleSet,
    scalars: &[C64],
    tol: f64,
) -> Result<ClosednessVerdict, ContractionError> {
    if seq.is_empty() {
        return Err(ContractionError::NotConverging("empty sequence".into()));
    }
    if scalars.is_empty() || scalars.iter().any(|k| k.norm() == 0.0) {
        return Err(ContractionError::BadScalars);
    }
    let x_space = limit.domain();
    let y_space = limit.codomain();
    let mut closure = samples.points().to_vec();
    for p in samples.points() {
        for &k in scalars {
            closure.push(spaces::scale(k, p));
        }
    }
    let closure = SampleSet::new(closure, x_space).map_err(|e| OpError::SpaceMismatch(e.to_string()))?;

    let mut distances = Vec::with_capacity(seq.len());
    let mut member_m_hat = Vec::with_capacity(seq.len());
    let mut max_excess = Vec::with_capacity(seq.len());
    for f_n in seq {
        let rep = estimate_m(f_n, samples, scalars)?;
        if !rep.admits(m, tol) {
            return Err(ContractionError::HypothesisViolated(format!(
                "{} has sampled M {} > {m}",
                f_n.label(),
                rep.m_hat
            )));
        }
        member_m_hat.push(rep.m_hat);
        let diff = f_n.sub(limit)?;
        let delta = estimate_norm(&diff, NormKind::P, &closure)?.value;
        distances.push(delta);
        let mut excess = f64::NEG_INFINITY;
        for x in samples.points() {
            if spaces::is_zero(x) {
                continue;
            }
            let fx = y_space.norm(&limit.eval(x));
            let nx = x_space.norm(x);
            for &k in scalars {
                let kx = spaces::scale(k, x);
                let fkx = y_space.norm(&limit.eval(&kx));
                let ak = k.norm();
                let inflation = (m * ak + 1.0) * delta * x_space.norm(&kx).max(nx).max(1.0);
                let rhs = m * ak * fx + inflation;
                let scale = rhs.abs().max(1.0);
                excess = excess.max((fkx - rhs) / scale);
            }
        }
        max_excess.push(excess);
    }
    let last = *distances.last().unwrap_or(&f64::INFINITY);
    if !(last < CONVERGENCE_THRESHOLD) {
        return Err(ContractionError::NotConverging(format!(
            "final distance {last:e} is not below {CONVERGENCE_THRESHOLD:e}"
        )));
    }
    let limit_m_hat = estimate_m(limit, samples, scalars)?.m_hat;
    let holds = max_excess.iter().all(|&e| e <= tol);
    Ok(ClosednessVerdict {
        distances,
        member_m_hat,
        limit_m_hat,
        max_excess,
        holds,
    })
}

/// A finite indexed family of operators sharing domain and codomain.
#[derive(Debug, Clone)]
pub struct FamilyHandle {
    members: Vec<OperatorHandle>,
    index_labels: Vec<String>,
}

impl FamilyHandle {
    pub fn new(members: Vec<OperatorHandle>) -> Result<Self, ContractionError> {
        let labels = members.iter().map(|m| m.label().to_string()).collect();
        Self::with_labels(members, labels)
    }

    pub fn with_labels(members: Vec<OperatorHandle>, index_labels: Vec<String>) -> Result<Self, ContractionError> {
        let first = members.first().ok_or(ContractionError::EmptyFamily)?;
        if index_labels.len() != members.len() {
            return Err(ContractionError::HypothesisViolated("one label per member".into()));
        }
        for m in &members[1..] {
            if m.domain() != first.domain() || m.codomain() != first.codomain() {
                return Err(OpError::SpaceMismatch(format!("{} differs from {}", m.label(), first.label())).into());
            }
        }
        Ok(Self { members, index_labels })
    }

    pub fn members(&self) -> &[OperatorHandle] {
        &self.members
    }

    pub fn index_labels(&self) -> &[String] {
        &self.index_labels
    }

    pub fn push(&mut self, member: OperatorHandle, label: impl Into<String>) -> Result<(), ContractionError> {
        let first = &self.members[0];
        if member.domain() != first.domain() || member.codomain() != first.codomain() {
            return Err(OpError::SpaceMismatch(member.label().to_string()).into());
        }
        self.members.push(member);
        self.index_labels.push(label.into());
        Ok(())
    }
}

/// A sample pair where `F(x1) + F(x2)` vanishes but `F(x1 + x2)` does not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Obstruction {
    pub member: usize,
    pub i: usize,
    pub j: usize,
    pub numerator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBoundReport {
    /// `c_x = max_α ‖F_α(x)‖` per sample.
    pub pointwise_bounds: Vec<f64>,
    /// `None` when no pair had a usable denominator.
    pub l_hat: Option<f64>,
    pub obstructions: Vec<Obstruction>,
    /// Pairs where both sides vanish to rounding; skipped.
    pub degenerate_pairs: usize,
    pub member_norms: Vec<f64>,
    pub uniform_bound: f64,
    pub bounded: bool,
}

/// Relative size below which `‖F(x1)+F(x2)‖` counts as zero.
pub const DENOMINATOR_ZERO: f64 = 1e-9;

struct MemberStats {
    values: Vec<f64>,
    l_hat: Option<f64>,
    obstructions: Vec<Obstruction>,
    degenerate: usize,
    norm: f64,
}

fn member_stats(idx: usize, f: &OperatorHandle, samples: &SampleSet) -> Result<MemberStats, OpError> {
    let y = f.codomain();
    let pts = samples.points();
    let images: Vec<Vector> = pts.iter().map(|x| f.eval(x)).collect();
    let values = images.iter().map(|v| y.norm(v)).collect::<Vec<_>>();
    let mut l_hat: Option<f64> = None;
    let mut obstructions = Vec::new();
    let mut degenerate = 0;
    for i in 0..pts.len() {
        for j in i..pts.len() {
            let num = y.norm(&f.eval(&spaces::add(&pts[i], &pts[j])));
            let den = y.norm(&spaces::add(&images[i], &images[j]));
            let scale = values[i] + values[j];
            if den <= DENOMINATOR_ZERO * scale || den == 0.0 {
                if num <= DENOMINATOR_ZERO * scale {
                    degenerate += 1;
                } else {
                    obstructions.push(Obstruction {
                        member: idx,
                        i,
                        j,
                        numerator: num,
                    });
                }
                continue;
            }
            let r = num / den;
            l_hat = Some(l_hat.map_or(r, |l| l.max(r)));
        }
    }
    let norm = estimate_norm(f, NormKind::P, samples)?.value;
    Ok(MemberStats {
        values,
        l_hat,
        obstructions,
        degenerate,
        norm,
    })
}

/// Pointwise bounds, the additivity constant `L̂`, and member norms.
/// Members are processed in parallel and merged in index order.
pub fn uniform_boundedness_harness(
    family: &FamilyHandle,
    samples: &SampleSet,
) -> Result<UniformBoundReport, ContractionError> {
    if samples.is_empty() {
        return Err(OpError::EmptySamples.into());
    }
    let stats: Vec<MemberStats> = family
        .members()
        .par_iter()
        .enumerate()
        .map(|(i, f)| member_stats(i, f, samples))
        .collect::<Result<_, _>>()?;
    let mut pointwise_bounds = vec![0.0_f64; samples.len()];
    let mut l_hat: Option<f64> = None;
    let mut obstructions = Vec::new();
    let mut degenerate_pairs = 0;
    let mut member_norms = Vec::with_capacity(stats.len());
    for s in stats {
        for (c, v) in pointwise_bounds.iter_mut().zip(&s.values) {
            *c = c.max(*v);
        }
        l_hat = match (l_hat, s.l_hat) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        obstructions.extend(s.obstructions);
        degenerate_pairs += s.degenerate;
        member_norms.push(s.norm);
    }
    let uniform_bound = member_norms.iter().copied().fold(0.0, f64::max);
    Ok(UniformBoundReport {
        pointwise_bounds,
        l_hat,
        obstructions,
        degenerate_pairs,
        member_norms,
        uniform_bound,
        bounded: uniform_bound.is_finite() && uniform_bound < tolerance::EXTENDED_REAL_CUTOFF,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitVerdict {
    pub limit_norm: f64,
    pub sup_member_norm: f64,
    /// `p̂(F_last − F)`: a finite sequence cannot reach its supremum, so the
    /// last member's distance to the limit is added to the bound.
    pub tail_distance: f64,
    /// Largest `‖F_n(x) − F(x)‖` over the samples, per member.
    pub pointwise_gaps: Vec<f64>,
    pub l_hat: Option<f64>,
    pub l_within_bound: bool,
    pub holds: bool,
}

/// Checks that the limit inherits the sampled bound of a convergent sequence.
pub fn limit_norm_check(
    seq: &[OperatorHandle],
    limit: &OperatorHandle,
    samples: &SampleSet,
    l: f64,
    tol: f64,
) -> Result<LimitVerdict, ContractionError> {
    let last = seq
        .last()
        .ok_or_else(|| ContractionError::NotConverging("empty sequence".into()))?;
    let y = limit.codomain();
    let limit_values: Vec<Vector> = samples.points().iter().map(|x| limit.eval(x)).collect();
    let pointwise_gaps: Vec<f64> = seq
        .iter()
        .map(|f_n| {
            samples
                .points()
                .iter()
                .zip(&limit_values)
                .map(|(x, fx)| y.norm(&spaces::sub(&f_n.eval(x), fx)))
                .fold(0.0, f64::max)
        })
        .collect();
    let first_gap = pointwise_gaps[0];
    let last_gap = *pointwise_gaps.last().unwrap_or(&0.0);
    if last_gap > 0.0 && !(last_gap < first_gap) {
        return Err(ContractionError::NotConverging(format!(
            "pointwise gap went from {first_gap:e} to {last_gap:e}"
        )));
    }
    let family = FamilyHandle::new(seq.to_vec())?;
    let report = uniform_boundedness_harness(&family, samples)?;
    let limit_norm = estimate_norm(limit, NormKind::P, samples)?.value;
    let tail_distance = estimate_norm(&last.sub(limit)?, NormKind::P, samples)?.value;
    let bound = report.uniform_bound + tail_distance;
    Ok(LimitVerdict {
        limit_norm,
        sup_member_norm: report.uniform_bound,
        tail_distance,
        pointwise_gaps,
        l_hat: report.l_hat,
        l_within_bound: report.l_hat.is_none_or(|lh| le_tol(lh, l, tol)),
        holds: limit_norm <= bound + 1e-9,
    })
}
