//! The acceptance battery: fifteen seeded checks with JSON evidence and CSV tables.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::contraction::{
    default_scalars, estimate_m, sphere_closure, sphere_bound_check, uniform_boundedness_harness, FamilyHandle,
};
use crate::distrib::{
    functional_norm, momentum_witness_ladder, position_norm_over_deltas, position_operator, FunctionalHandle,
    IntegralKernel, RampWitness, WitnessSearch,
};
use crate::extension::{
    check_pairwise_inequality, extend_over_set, extend_posneg, extend_via_linear, hilbert_step, HilbertExtensionState,
    LinearFormExtension, PairMode, PartialFunctional, RVec, SubadditiveFunctional, Wrapper,
};
use crate::fourier::{check_l1_c0_bound, frequency_grid, plancherel_check, schwartz_fourier_bounded, IntegrableFunction, SpectralGrid};
use crate::metricmaps::{
    completeness_harness, metric_d, scalar, star_multiply, unit_element, AlgebraElement, CodomainMetric, MappingHandle,
    MappingMetric,
};
use crate::opspace::{check_composition_bound, estimate_norm, norm_equivalence_report, NormKind, OperatorHandle};
use crate::spaces::{FiniteSpace, InnerProductSpace, NormType, SampleSet, Vector};
use crate::testfn::{BumpFamily, FrechetMetricParams, TestFunction};
use crate::tolerance::{close, le_tol, Tolerances};

/// Number of checks in the battery.
pub const CHECK_COUNT: u8 = 15;

/// A CSV sidecar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub evidence: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub command: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
    /// Wall-clock milliseconds per check; excluded from the determinism comparison.
    pub timing_ms: BTreeMap<String, f64>,
}

impl SuiteReport {
    /// The report without timings, which is what must reproduce bit-for-bit.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing_ms");
        }
        serde_json::to_string(&v).expect("report serializes")
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{} {:>2} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name))
            .collect()
    }

    /// Writes `report.json` and one CSV per table into `dir`. Every CSV gets a
    /// leading `seed` column.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        for c in &self.checks {
            for t in &c.tables {
                let csv = with_seed_column(&t.csv, self.seed)?;
                std::fs::write(dir.join(format!("check{:02}_{}.csv", c.id, t.name)), csv)?;
            }
        }
        Ok(())
    }
}

pub fn check_name(id: u8) -> &'static str {
    match id {
        1 => "norm structure",
        2 => "composition bound",
        3 => "M-contraction",
        4 => "uniform boundedness",
        5 => "one-point extension",
        6 => "positive/negative extension",
        7 => "Hilbert-space step",
        8 => "extension through a linear form",
        9 => "mapping algebra",
        10 => "distribution bounds",
        11 => "position operator",
        12 => "momentum witness growth",
        13 => "Fourier transform",
        14 => "completeness",
        15 => "determinism",
        _ => "unknown",
    }
}

fn rng_for(seed: u64, id: u8) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

fn csv_table(name: &str, header: &[&str], rows: &[Vec<String>]) -> Table {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    Table {
        name: name.to_string(),
        csv: String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8"),
    }
}

/// A numeric value tagged with what backs it.
fn cert(value: f64, certificate: &str) -> Value {
    json!({ "value": value, "certificate": certificate })
}

fn failed(id: u8, error: impl std::fmt::Display) -> CheckReport {
    CheckReport {
        id,
        name: check_name(id).into(),
        passed: false,
        evidence: json!({ "error": error.to_string() }),
        tables: Vec::new(),
    }
}

fn report(id: u8, passed: bool, evidence: Value, tables: Vec<Table>) -> CheckReport {
    CheckReport {
        id,
        name: check_name(id).into(),
        passed,
        evidence,
        tables,
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn random_space(rng: &mut ChaCha8Rng) -> FiniteSpace {
    let dim = rng.random_range(2..=4);
    let norm = match rng.random_range(0..4) {
        0 => NormType::L1,
        1 => NormType::L2,
        2 => NormType::Linf,
        _ => NormType::Weighted((0..dim).map(|_| rng.random_range(0.5..2.0)).collect()),
    };
    FiniteSpace::real(dim, norm)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0)))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// `A x + B tanh(C x) + e⟨d, x⟩² + b`; `offset` controls `b`, `nonlinear` the
/// last two terms.
fn random_operator(
    rng: &mut ChaCha8Rng,
    domain: &FiniteSpace,
    codomain: &FiniteSpace,
    nonlinear: bool,
    offset: bool,
) -> OperatorHandle {
    let (n, m) = (domain.dimension(), codomain.dimension());
    let a = random_matrix(rng, m, n);
    if !nonlinear && !offset {
        return OperatorHandle::from_matrix("Ax", domain.clone(), codomain.clone(), a).expect("shapes match");
    }
    let b = random_matrix(rng, m, m);
    let cm = random_matrix(rng, m, n);
    let d: Vec<f64> = random_vec(rng, n, 1.0);
    let e: Vec<f64> = random_vec(rng, m, 0.3);
    let off: Vec<f64> = if offset { random_vec(rng, m, 1.0) } else { vec![0.0; m] };
    let scale = if nonlinear { 1.0 } else { 0.0 };
    OperatorHandle::new("Ax+Btanh(Cx)+e<d,x>^2+b", domain.clone(), codomain.clone(), move |x| {
        let xv = DMatrix::from_column_slice(x.len(), 1, x);
        let lin = &a * &xv;
        let inner = (&cm * &xv).map(|z| z.tanh());
        let bent = &b * inner;
        let q: C64 = x.iter().zip(&d).map(|(xi, di)| xi * di).sum();
        (0..lin.nrows())
            .map(|i| lin[(i, 0)] + (bent[(i, 0)] + q * q * e[i]) * scale + off[i])
            .collect()
    })
}

fn check_norm_structure(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let mut rows = Vec::new();
    let mut violations = 0;
    for i in 0..100 {
        let x = random_space(rng);
        let y = random_space(rng);
        let (nl, off) = (rng.random_bool(0.7), rng.random_bool(0.5));
        let f = random_operator(rng, &x, &y, nl, off);
        let samples = match SampleSet::halton(&x, 64, 2.0, rng.random()) {
            Ok(s) => s,
            Err(e) => return failed(1, e),
        };
        let alpha = rng.random_range(-3.0..3.0);
        let eq = match norm_equivalence_report(&f, &samples, tol) {
            Ok(r) => r,
            Err(e) => return failed(1, e),
        };
        let scaled = f.scale(c(alpha));
        let mut homog = true;
        for kind in [NormKind::P, NormKind::PStar] {
            let (Ok(a), Ok(b)) = (estimate_norm(&scaled, kind, &samples), estimate_norm(&f, kind, &samples)) else {
                return failed(1, "norm estimate failed");
            };
            homog &= close(a.value, alpha.abs() * b.value, tol);
        }
        if !eq.holds || !homog {
            violations += 1;
        }
        rows.push(vec![
            i.to_string(),
            x.dimension().to_string(),
            y.dimension().to_string(),
            eq.p.to_string(),
            eq.p_star.to_string(),
            (eq.p_star / eq.p).to_string(),
            alpha.to_string(),
            homog.to_string(),
        ]);
    }
    report(
        1,
        violations == 0,
        json!({ "operators": 100, "violations": violations, "tolerance": tol, "certificate": "sampled_lower_bound" }),
        vec![csv_table(
            "norms",
            &["operator", "dim_in", "dim_out", "p", "pstar", "pstar_over_p", "alpha", "homogeneous"],
            &rows,
        )],
    )
}

fn check_composition(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let mut rows = Vec::new();
    let mut violations = 0;
    for i in 0..100 {
        let x = random_space(rng);
        let y = random_space(rng);
        let z = random_space(rng);
        let (nl1, nl2) = (rng.random_bool(0.7), rng.random_bool(0.7));
        let f1 = random_operator(rng, &x, &y, nl1, false);
        let f2 = random_operator(rng, &y, &z, nl2, false);
        let samples = match SampleSet::halton(&x, 64, 2.0, rng.random()) {
            Ok(s) => s,
            Err(e) => return failed(2, e),
        };
        let r = match check_composition_bound(&f1, &f2, &samples, tol) {
            Ok(r) => r,
            Err(e) => return failed(2, e),
        };
        if !r.holds {
            violations += 1;
        }
        rows.push(vec![
            i.to_string(),
            r.composite.to_string(),
            r.first.to_string(),
            r.second.to_string(),
            r.holds.to_string(),
        ]);
    }
    report(
        2,
        violations == 0,
        json!({ "pairs": 100, "violations": violations, "tolerance": tol, "certificate": "sampled_lower_bound" }),
        vec![csv_table("composition", &["pair", "composite", "first", "second", "holds"], &rows)],
    )
}

fn check_contraction(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let scalars = default_scalars();
    let mut rows = Vec::new();
    let mut linear_bad = 0;
    let mut max_dev = 0.0_f64;
    for i in 0..50 {
        let x = random_space(rng);
        let y = random_space(rng);
        let f = random_operator(rng, &x, &y, false, false);
        let samples = match SampleSet::halton(&x, 48, 2.0, rng.random()) {
            Ok(s) => s,
            Err(e) => return failed(3, e),
        };
        let m = match estimate_m(&f, &samples, &scalars) {
            Ok(m) => m.m_hat,
            Err(e) => return failed(3, e),
        };
        max_dev = max_dev.max((m - 1.0).abs());
        if (m - 1.0).abs() > tol {
            linear_bad += 1;
        }
        rows.push(vec!["linear".into(), i.to_string(), m.to_string(), String::new(), String::new()]);
    }
    let mut bound_bad = 0;
    for i in 0..50 {
        let x = random_space(rng);
        let y = random_space(rng);
        let off = rng.random_bool(0.5);
        let f = random_operator(rng, &x, &y, true, off);
        let samples = match SampleSet::halton(&x, 48, 2.0, rng.random()) {
            Ok(s) => s,
            Err(e) => return failed(3, e),
        };
        // M over the closed set with the sample norms among the scalars
        let closed = match sphere_closure(&samples, &f) {
            Ok(s) => s,
            Err(e) => return failed(3, e),
        };
        let mut all = scalars.clone();
        all.extend(samples.points().iter().map(|p| c(x.norm(p))).filter(|k| k.re > 0.0));
        let m = match estimate_m(&f, &closed, &all) {
            Ok(r) => r.m_hat,
            Err(e) => return failed(3, e),
        };
        let v = match sphere_bound_check(&f, m, &samples, &scalars, tol) {
            Ok(v) => v,
            Err(e) => return failed(3, e),
        };
        if !v.holds {
            bound_bad += 1;
        }
        rows.push(vec![
            "nonlinear".into(),
            i.to_string(),
            v.m_hat.to_string(),
            v.p_hat.to_string(),
            v.bound.to_string(),
        ]);
    }
    report(
        3,
        linear_bad == 0 && bound_bad == 0,
        json!({
            "linear_operators": 50,
            "linear_m_off_by_more_than_tol": linear_bad,
            "max_linear_deviation": cert(max_dev, "sampled_lower_bound"),
            "nonlinear_operators": 50,
            "bound_violations": bound_bad,
            "tolerance": tol,
        }),
        vec![csv_table("contraction", &["family", "operator", "m_hat", "p_hat", "bound"], &rows)],
    )
}

fn check_uniform_boundedness(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    const L_TOL: f64 = 1e-9;
    let x = FiniteSpace::real(3, NormType::L2);
    let line = FiniteSpace::real(1, NormType::L1);
    let samples = match SampleSet::halton(&x, 48, 2.0, rng.random()) {
        Ok(s) => s,
        Err(e) => return failed(4, e),
    };
    let mut members = Vec::new();
    for _ in 0..32 {
        let a: Vec<f64> = random_vec(rng, 3, 1.0);
        let len = InnerProductSpace::norm(&a);
        let r = rng.random_range(0.1..=1.0) / len;
        let row = DMatrix::from_fn(1, 3, |_, j| c(a[j] * r));
        members.push(OperatorHandle::from_matrix("<a,x>", x.clone(), line.clone(), row).expect("shapes match"));
    }
    let bounded = match FamilyHandle::new(members).and_then(|f| uniform_boundedness_harness(&f, &samples)) {
        Ok(r) => r,
        Err(e) => return failed(4, e),
    };
    let ids: Vec<OperatorHandle> = (1..=32)
        .map(|j| OperatorHandle::identity(&x).scale(c(j as f64)))
        .collect();
    let unbounded = match FamilyHandle::new(ids).and_then(|f| uniform_boundedness_harness(&f, &samples)) {
        Ok(r) => r,
        Err(e) => return failed(4, e),
    };
    let l_ok = bounded.l_hat.is_some_and(|l| (l - 1.0).abs() <= L_TOL);
    let bound_ok = bounded.uniform_bound <= 1.0 + tol;
    let max_j_ok = close(unbounded.uniform_bound, 32.0, tol);
    let rows: Vec<Vec<String>> = bounded
        .member_norms
        .iter()
        .zip(&unbounded.member_norms)
        .enumerate()
        .map(|(j, (a, b))| vec![(j + 1).to_string(), a.to_string(), b.to_string()])
        .collect();
    report(
        4,
        l_ok && bound_ok && max_j_ok,
        json!({
            "l_hat": bounded.l_hat.map(|l| cert(l, "sampled_lower_bound")),
            "l_hat_tolerance": L_TOL,
            "uniform_bound": cert(bounded.uniform_bound, "sampled_lower_bound"),
            "scaled_identity_uniform_bound": cert(unbounded.uniform_bound, "sampled_lower_bound"),
            "expected_max_j": 32,
            "tolerance": tol,
        }),
        vec![
            csv_table("member_norms", &["j", "linear_form", "scaled_identity"], &rows),
            csv_table(
                "pointwise_bounds",
                &["sample", "c_x"],
                &bounded
                    .pointwise_bounds
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![i.to_string(), v.to_string()])
                    .collect::<Vec<_>>(),
            ),
        ],
    )
}

fn weighted_l1(w: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(w).map(|(v, w)| w * v.abs()).sum()
}

fn check_one_point(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let mut violations = 0;
    let mut c_mismatch = 0;
    let mut steps = 0;
    let mut rows = Vec::new();
    for inst in 0..1000 {
        let n = rng.random_range(1..=4);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let p = SubadditiveFunctional::weighted_l1(weights.clone());
        let mode = if inst % 2 == 0 { PairMode::StrictPairs } else { PairMode::AllPairs };
        // a dominated linear functional minus nonnegative slack
        let u = rng.random_range(0.2..=1.0);
        let w: Vec<f64> = weights.iter().map(|wi| wi * u * rng.random_range(-1.0..=1.0)).collect();
        let size = rng.random_range(1..=8);
        let mut points: Vec<RVec> = Vec::with_capacity(size);
        if mode == PairMode::AllPairs {
            points.push(vec![0.0; n]);
        }
        while points.len() < size {
            points.push(random_vec(rng, n, 2.0));
        }
        let values: Vec<f64> = points
            .iter()
            .map(|x| {
                let lin: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                let slack = if x.iter().all(|v| *v == 0.0) {
                    0.0
                } else {
                    rng.random_range(0.0..0.5) * weighted_l1(&weights, x)
                };
                lin - slack
            })
            .collect();
        let targets: Vec<RVec> = (0..rng.random_range(1..=8)).map(|_| random_vec(rng, n, 2.0)).collect();
        let f = match PartialFunctional::new(points, values) {
            Ok(f) => f,
            Err(e) => return failed(5, e),
        };
        let g = match extend_over_set(&f, &p, &targets, mode, tol) {
            Ok(g) => g,
            Err(e) => return failed(5, format!("instance {inst}: {e}")),
        };
        // brute-force c for each step against the domain at that step
        let base = f.len();
        for (k, step) in g.steps().iter().enumerate() {
            let dom = &g.points()[..base + k];
            let vals = &g.values()[..base + k];
            let oracle = dom
                .iter()
                .zip(vals)
                .map(|(x, v)| {
                    let s: Vec<f64> = x.iter().zip(&step.point).map(|(a, b)| a + b).collect();
                    v - weighted_l1(&weights, &s)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            steps += 1;
            if oracle != step.c || step.value != -oracle {
                c_mismatch += 1;
            }
        }
        let post = check_pairwise_inequality(&g, &p, mode, tol);
        if !post.holds {
            violations += 1;
        }
        if inst < 50 {
            rows.push(vec![
                inst.to_string(),
                n.to_string(),
                format!("{mode:?}"),
                f.len().to_string(),
                targets.len().to_string(),
                post.worst_margin.to_string(),
            ]);
        }
    }
    report(
        5,
        violations == 0 && c_mismatch == 0,
        json!({
            "instances": 1000,
            "steps": steps,
            "pair_violations": violations,
            "c_mismatches": c_mismatch,
            "c_comparison": "exact equality with a brute-force maximum",
            "tolerance": tol,
        }),
        vec![csv_table("instances", &["instance", "dim", "mode", "domain", "targets", "worst_margin"], &rows)],
    )
}

fn dual_norm(space: &FiniteSpace, w: &[f64]) -> f64 {
    match space.norm_type() {
        NormType::L1 => w.iter().fold(0.0, |a, v| a.max(v.abs())),
        NormType::L2 => InnerProductSpace::norm(w),
        NormType::Linf => w.iter().map(|v| v.abs()).sum(),
        NormType::Weighted(ws) => w.iter().zip(ws).fold(0.0, |a, (v, s)| a.max(v.abs() / s)),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_posneg(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let mut pair_bad = 0;
    let mut point_bad = 0;
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    let mut library_disagrees = 0;
    let mut first_violation = Value::Null;
    for inst in 0..200 {
        let n = rng.random_range(1..=3);
        let norm = match rng.random_range(0..3) {
            0 => NormType::L1,
            1 => NormType::L2,
            _ => NormType::Linf,
        };
        let space = FiniteSpace::real(n, norm);
        let m1 = rng.random_range(0.5..2.0);
        let m2 = rng.random_range(0.5..2.0);
        let mut w = random_vec(rng, n, 1.0);
        let mut v = random_vec(rng, n, 1.0);
        if dot(&w, &v) < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let sw = m1 * rng.random_range(0.2..=1.0) / dual_norm(&space, &w);
        let sv = m2 * rng.random_range(0.2..=1.0) / dual_norm(&space, &v);
        w.iter_mut().for_each(|x| *x *= sw);
        v.iter_mut().for_each(|x| *x *= sv);
        // domain inside the cone where both forms are nonnegative
        let mut points = vec![vec![0.0; n]];
        let mut values = vec![0.0];
        let size = rng.random_range(1..=7);
        let mut tries = 0;
        while points.len() <= size && tries < 10_000 {
            tries += 1;
            let s = random_vec(rng, n, 2.0);
            if dot(&w, &s) < 0.0 || dot(&v, &s) < 0.0 {
                continue;
            }
            let lam = rng.random_range(0.0..=1.0);
            values.push(if rng.random_bool(0.5) { lam * dot(&w, &s) } else { -lam * dot(&v, &s) });
            points.push(s);
        }
        let targets: Vec<RVec> = (0..rng.random_range(1..=8)).map(|_| random_vec(rng, n, 2.0)).collect();
        let f = match PartialFunctional::new(points, values) {
            Ok(f) => f,
            Err(e) => return failed(6, e),
        };
        let out = match extend_posneg(&f, m1, m2, &space, &targets, tol) {
            Ok(o) => o,
            Err(e) => return failed(6, format!("instance {inst}: {e}")),
        };
        // independent recheck of the combined output
        let pts = out.combined.points();
        let vals = out.combined.values();
        let total = m1 + m2;
        let mut inst_worst = f64::INFINITY;
        let mut inst_holds = true;
        for i in 0..pts.len() {
            let bound = total * space.norm_real(&pts[i]);
            let margin = bound - vals[i].abs();
            if margin < -tol * bound.max(1.0) {
                point_bad += 1;
                inst_holds = false;
            }
            for j in 0..=i {
                let s: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a + b).collect();
                let bound = total * space.norm_real(&s);
                let margin = bound - (vals[i] + vals[j]).abs();
                inst_worst = inst_worst.min(margin);
                if margin < -tol * bound.max(1.0) {
                    pair_bad += 1;
                    inst_holds = false;
                    if first_violation.is_null() {
                        first_violation = json!({
                            "instance": inst,
                            "norm": format!("{:?}", space.norm_type()),
                            "m1": m1,
                            "m2": m2,
                            "domain": f.points(),
                            "values": f.values(),
                            "targets": targets,
                            "x1": pts[j],
                            "x2": pts[i],
                            "f_plus": [out.positive.values()[j], out.positive.values()[i]],
                            "f_minus": [out.negative.values()[j], out.negative.values()[i]],
                            "lhs": (vals[i] + vals[j]).abs(),
                            "rhs": bound,
                        });
                    }
                }
            }
        }
        worst = worst.min(inst_worst);
        if out.holds != inst_holds {
            library_disagrees += 1;
        }
        rows.push(vec![
            inst.to_string(),
            n.to_string(),
            format!("{:?}", space.norm_type()),
            f.len().to_string(),
            targets.len().to_string(),
            inst_worst.to_string(),
        ]);
    }
    report(
        6,
        pair_bad == 0 && point_bad == 0,
        json!({
            "instances": 200,
            "pair_violations": pair_bad,
            "point_violations": point_bad,
            "worst_pair_margin": cert(worst, "exact"),
            "library_verdict_disagreements": library_disagrees,
            "first_violation": first_violation,
            "tolerance": tol,
        }),
        vec![csv_table("instances", &["instance", "dim", "norm", "domain", "targets", "worst_pair_margin"], &rows)],
    )
}

/// Columns of the Q factor of a random square matrix.
fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize) -> Vec<RVec> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = m.qr().q();
    (0..n).map(|j| q.column(j).iter().copied().collect()).collect()
}

fn check_hilbert(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let mut bad_pairs = 0;
    let mut bad_continuity = 0;
    let mut rows = Vec::new();
    let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.2).collect();
    for inst in 0..50 {
        let n = rng.random_range(3..=6);
        let q = random_orthonormal(rng, n);
        let k = rng.random_range(1..n);
        let state = match HilbertExtensionState::new(q[..k].to_vec(), 5) {
            Ok(s) => s,
            Err(e) => return failed(7, e),
        };
        let scale = rng.random_range(0.5..2.0);
        let p = SubadditiveFunctional::l2().scaled(scale);
        let a: Vec<f64> = {
            let raw = random_vec(rng, n, 1.0);
            let r = scale * rng.random_range(0.1..=1.0) / InnerProductSpace::norm(&raw);
            raw.iter().map(|x| x * r).collect()
        };
        let samples = state.samples();
        let values: Vec<f64> = samples
            .iter()
            .map(|x| {
                let lin = dot(&a, x);
                if x.iter().all(|v| *v == 0.0) {
                    0.0
                } else {
                    lin - rng.random_range(0.0..0.3) * scale * InnerProductSpace::norm(x)
                }
            })
            .collect();
        let f = match PartialFunctional::new(samples, values) {
            Ok(f) => f,
            Err(e) => return failed(7, e),
        };
        let rep = match hilbert_step(&state, &f, &p, &q[k], &grid, true, tol) {
            Ok(r) => r,
            Err(e) => return failed(7, format!("instance {inst}: {e}")),
        };
        let cont = rep.continuity.as_ref().map(|c| (c.holds, c.max_excess));
        if !rep.orthogonal_pairs.holds {
            bad_pairs += 1;
        }
        if !cont.is_some_and(|c| c.0) {
            bad_continuity += 1;
        }
        rows.push(vec![
            inst.to_string(),
            n.to_string(),
            k.to_string(),
            rep.orthogonal_pairs.pairs_checked.to_string(),
            rep.orthogonal_pairs.worst_margin.to_string(),
            cont.map_or(f64::NAN, |c| c.1).to_string(),
        ]);
    }
    report(
        7,
        bad_pairs == 0 && bad_continuity == 0,
        json!({
            "instances": 50,
            "orthogonal_pair_failures": bad_pairs,
            "continuity_failures": bad_continuity,
            "t_grid": grid.len(),
            "tolerance": tol,
        }),
        vec![csv_table(
            "instances",
            &["instance", "dim", "base_lines", "pairs_checked", "worst_pair_margin", "max_continuity_excess"],
            &rows,
        )],
    )
}

fn check_linear_form(_cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    const NORM_TOL: f64 = 1e-9;
    let mut bad = 0;
    let mut rows = Vec::new();
    for inst in 0..100 {
        let n = rng.random_range(1..=8);
        let r = rng.random_range(1..=n);
        let q = random_orthonormal(rng, n);
        let k = [1.0, 2.0, 3.0][inst % 3];
        let ext = LinearFormExtension {
            subspace_basis: q[..r].to_vec(),
            coefficients: random_vec(rng, r, 2.0),
            wrapper: Wrapper::Power(k),
        };
        let space = FiniteSpace::real(n, NormType::L2);
        let samples = match SampleSet::halton(&space, 32, 1.0, rng.random()) {
            Ok(s) => s,
            Err(e) => return failed(8, e),
        };
        let rep = match extend_via_linear(&ext, &InnerProductSpace::standard(n), &samples) {
            Ok(r) => r,
            Err(e) => return failed(8, e),
        };
        let exact = rep.exact_norm.unwrap_or(f64::NAN);
        let ok = (rep.sampled_norm - exact).abs() <= NORM_TOL * exact.max(1.0) && rep.norms_agree;
        if !ok {
            bad += 1;
        }
        rows.push(vec![
            inst.to_string(),
            n.to_string(),
            r.to_string(),
            k.to_string(),
            rep.t_norm.to_string(),
            exact.to_string(),
            rep.sampled_norm.to_string(),
        ]);
    }
    report(
        8,
        bad == 0,
        json!({ "instances": 100, "mismatches": bad, "tolerance": NORM_TOL, "certificate": "exact vs sampled_lower_bound" }),
        vec![csv_table("instances", &["instance", "dim", "subspace_dim", "k", "t_norm", "exact", "sampled"], &rows)],
    )
}

fn random_matrix_map(rng: &mut ChaCha8Rng, zero: &Vector) -> MappingHandle<Vector> {
    let m0 = random_matrix(rng, 2, 2);
    let m1 = random_matrix(rng, 2, 2);
    let m2 = random_matrix(rng, 2, 2);
    let m3 = random_matrix(rng, 2, 2);
    MappingHandle::new("M0+M1x1+M2x2+M3sin(x1x2)", zero, move |x: &Vector| {
        &m0 + &m1 * x[0] + &m2 * x[1] + &m3 * (x[0] * x[1]).sin()
    })
}

fn check_algebra(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let x = FiniteSpace::real(2, NormType::L2);
    let samples = match SampleSet::halton(&x, 64, 2.0, rng.random()) {
        Ok(s) => s,
        Err(e) => return failed(9, e),
    };
    let mm = MappingMetric::normed(&x, CodomainMetric::MatrixInf(2), &samples);
    let zero = x.zero();
    let zero_map = MappingHandle::zero((2, 2), &zero);
    let e = match unit_element(&mm) {
        Ok(e) => e,
        Err(err) => return failed(9, err),
    };
    let e_norm = match metric_d(&e.mapping, &zero_map, &mm) {
        Ok(v) => v.value,
        Err(err) => return failed(9, err),
    };
    let mut assoc = 0.0_f64;
    let mut distrib = 0.0_f64;
    let mut pointwise_bad = 0;
    let mut submult_bad = 0;
    let mut rows = Vec::new();
    let mut pts = samples.points().to_vec();
    pts.push(zero.clone());
    for pair in 0..100 {
        let f1 = AlgebraElement::new(random_matrix_map(rng, &zero));
        let f2 = AlgebraElement::new(random_matrix_map(rng, &zero));
        let f3 = AlgebraElement::new(random_matrix_map(rng, &zero));
        let prod = |a: &AlgebraElement<Vector>, b: &AlgebraElement<Vector>| star_multiply(a, b, &mm);
        let (Ok(f12), Ok(f23)) = (prod(&f1, &f2), prod(&f2, &f3)) else {
            return failed(9, "star product failed");
        };
        let (Ok(left), Ok(right)) = (prod(&f12, &f3), prod(&f1, &f23)) else {
            return failed(9, "star product failed");
        };
        let sum23 = AlgebraElement::new(f2.mapping.add(&f3.mapping, &zero));
        let (Ok(dist_l), Ok(f13)) = (prod(&f1, &sum23), prod(&f1, &f3)) else {
            return failed(9, "star product failed");
        };
        for p in &pts {
            let (l, r) = (left.mapping.eval(p), right.mapping.eval(p));
            let d1 = (&l - &r).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            let s1 = l.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
            let (dl, dr) = (dist_l.mapping.eval(p), f12.mapping.eval(p) + f13.mapping.eval(p));
            let d2 = (&dl - &dr).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            let s2 = dl.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
            assoc = assoc.max(d1 / s1);
            distrib = distrib.max(d2 / s2);
            if d1 > tol * s1 || d2 > tol * s2 {
                pointwise_bad += 1;
            }
        }
        let norm = |f: &MappingHandle<Vector>| metric_d(f, &zero_map, &mm).map(|v| v.value);
        let (Ok(n12), Ok(n1), Ok(n2)) = (norm(&f12.mapping), norm(&f1.mapping), norm(&f2.mapping)) else {
            return failed(9, "metric failed");
        };
        let ok = le_tol(n12, n1 * n2, tol);
        if !ok {
            submult_bad += 1;
        }
        rows.push(vec![pair.to_string(), n12.to_string(), n1.to_string(), n2.to_string(), ok.to_string()]);
    }
    report(
        9,
        pointwise_bad == 0 && submult_bad == 0 && e_norm == 1.0,
        json!({
            "pairs": 100,
            "max_associativity_defect": cert(assoc, "exact"),
            "max_distributivity_defect": cert(distrib, "exact"),
            "pointwise_violations": pointwise_bad,
            "submultiplicativity_violations": submult_bad,
            "unit_norm": cert(e_norm, "exact"),
            "tolerance": tol,
        }),
        vec![csv_table("submultiplicativity", &["pair", "d_product", "d_first", "d_second", "holds"], &rows)],
    )
}

fn probe_bumps(cfg: &RunConfig, rng: &mut ChaCha8Rng, count: usize, span: f64) -> Vec<TestFunction> {
    (0..count)
        .map(|_| {
            let center = rng.random_range(-span..span);
            let radius = rng.random_range(0.15..1.5);
            let amp = C64::from_polar(rng.random_range(0.2..3.0), rng.random_range(0.0..2.0 * PI));
            TestFunction::bump(vec![center], radius).expect("positive radius").scale(amp)
        })
        .chain(cfg.probes.bumps.iter().filter_map(|b| b.to_family().to_test_function().ok()))
        .collect()
}

fn k_n_half_width(params: &FrechetMetricParams) -> f64 {
    params
        .region(params.n, 1)
        .map_or(f64::INFINITY, |k| k.lo[0].abs().max(k.hi[0].abs()))
}

fn check_distributions(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let exact = cfg.tolerances.exact;
    let quad = cfg.tolerances.quadrature;
    let params = match cfg.metric.to_params(1) {
        Ok(p) => p,
        Err(e) => return failed(10, e),
    };
    let kn = k_n_half_width(&params);
    if !kn.is_finite() {
        return failed(10, "K_N is unbounded");
    }
    let family = probe_bumps(cfg, rng, 200, kn + 0.5);
    let mut centers = vec![-kn, kn];
    centers.extend((0..5).map(|_| rng.random_range(-kn..kn)));
    let mut functionals: Vec<(FunctionalHandle, f64, f64)> = centers
        .iter()
        .map(|&c| (FunctionalHandle::delta(vec![c]), 1.0, exact))
        .collect();
    for k in 0..=params.n as u16 {
        functionals.push((FunctionalHandle::deriv_delta(vec![k]), 1.0, exact));
    }
    let kernels = [
        IntegralKernel::indicator(0.0, 0.25),
        RampWitness::new(4, -1.0).and_then(|w| w.kernel()),
        IntegralKernel::new("cos", -1.5, 1.5, |t| C64::new(t.cos(), 0.5 * t)),
    ];
    for k in kernels {
        match k {
            Ok(k) => {
                let l1 = k.l1_norm();
                functionals.push((FunctionalHandle::integral(k), l1, quad));
            }
            Err(e) => return failed(10, e),
        }
    }
    let results: Vec<_> = functionals
        .par_iter()
        .map(|(f, expected, tol)| functional_norm(f, &family, &params).map(|r| (r, *expected, *tol)))
        .collect();
    let mut violations = 0;
    let mut bound_mismatch = 0;
    let mut rows = Vec::new();
    let mut tables = Vec::new();
    for res in results {
        let (r, expected, tol) = match res {
            Ok(x) => x,
            Err(e) => return failed(10, e),
        };
        let upper = r.upper.unwrap_or(f64::NAN);
        if !close(upper, expected, exact) {
            bound_mismatch += 1;
        }
        let worst = r.probes.iter().map(|p| p.ratio).fold(0.0, f64::max);
        let v = r.probes.iter().filter(|p| p.ratio > expected + tol).count();
        violations += v;
        rows.push(vec![
            r.functional.clone(),
            expected.to_string(),
            upper.to_string(),
            worst.to_string(),
            tol.to_string(),
            v.to_string(),
        ]);
        if tables.is_empty() {
            tables.push(Table {
                name: "ratios_first_functional".into(),
                csv: r.ratio_csv(),
            });
        }
    }
    tables.insert(
        0,
        csv_table("functionals", &["functional", "analytic_bound", "upper", "max_ratio", "tolerance", "violations"], &rows),
    );
    report(
        10,
        violations == 0 && bound_mismatch == 0,
        json!({
            "probes": family.len(),
            "functionals": rows.len(),
            "violations": violations,
            "bound_mismatches": bound_mismatch,
            "k_n_half_width": kn,
            "certificate": "ratios are sampled lower bounds of the functional norm, bounds are analytic",
        }),
        tables,
    )
}

fn check_position(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    let tol = cfg.tolerances.exact;
    let params = match cfg.metric.to_params(1) {
        Ok(p) => p,
        Err(e) => return failed(11, e),
    };
    let kn = k_n_half_width(&params);
    if !kn.is_finite() {
        return failed(11, "K_N is unbounded");
    }
    let family = probe_bumps(cfg, rng, 40, kn + 0.5);
    let mut centers = vec![-kn, kn, 0.0];
    centers.extend((0..4).map(|_| rng.random_range(-kn..kn)));
    let mut gap = 0.0_f64;
    for &cc in &centers {
        let delta = FunctionalHandle::delta(vec![cc]);
        let x = position_operator(&delta);
        for f in &family {
            let (Ok(a), Ok(b)) = (x.eval(f), delta.eval(f)) else {
                return failed(11, "evaluation failed");
            };
            let want = b * cc;
            gap = gap.max((a - want).norm() / want.norm().max(1.0));
        }
    }
    let rep = match position_norm_over_deltas(&centers, &family, &params) {
        Ok(r) => r,
        Err(e) => return failed(11, e),
    };
    let rows: Vec<Vec<String>> = rep
        .centers
        .iter()
        .zip(&rep.ratios)
        .map(|(c, r)| vec![c.to_string(), r.to_string()])
        .collect();
    report(
        11,
        gap <= tol && rep.estimate <= rep.bound + tol && rep.bound == kn,
        json!({
            "probes": family.len(),
            "max_pointwise_gap": cert(gap, "exact"),
            "estimate": cert(rep.estimate, "sampled_lower_bound"),
            "bound": cert(rep.bound, "analytic_upper_bound"),
            "tolerance": tol,
        }),
        vec![csv_table("ratios", &["center", "ratio"], &rows)],
    )
}

fn check_momentum(cfg: &RunConfig, _rng: &mut ChaCha8Rng) -> CheckReport {
    const GROWTH: f64 = 1.8;
    let params = match cfg.metric.to_params(1) {
        Ok(p) => p,
        Err(e) => return failed(12, e),
    };
    let family: Vec<BumpFamily> = if cfg.probes.bumps.is_empty() {
        [(0.125, 0.5), (0.0, 1.0), (0.1, 0.3), (0.05, 0.2)]
            .iter()
            .map(|&(center, radius)| BumpFamily {
                center: vec![center],
                radius,
                amplitude: c(1.0),
            })
            .collect()
    } else {
        cfg.probes.bumps.iter().map(|b| b.to_family()).collect()
    };
    let ladder = match momentum_witness_ladder(&[4, 8, 16], 0.0, &family, &params, &WitnessSearch::default()) {
        Ok(l) => l,
        Err(e) => return failed(12, e),
    };
    let grows = ladder.growth.iter().all(|g| *g > GROWTH);
    let rows: Vec<Vec<String>> = ladder
        .reports
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.numerator_lb.to_string(),
                r.numerator_grid.to_string(),
                r.denominator_ub.to_string(),
                r.certified_ratio.to_string(),
                r.attains_2n.to_string(),
            ]
        })
        .collect();
    report(
        12,
        ladder.strictly_increasing && grows,
        json!({
            "n": [4, 8, 16],
            "certified_ratios": ladder.reports.iter().map(|r| cert(r.certified_ratio, "certified_lower_bound")).collect::<Vec<_>>(),
            "growth": ladder.growth,
            "required_growth": GROWTH,
            "strictly_increasing": ladder.strictly_increasing,
            "attains_2n": ladder.reports.iter().map(|r| r.attains_2n).collect::<Vec<_>>(),
            "note": "|F(L_n) phi| <= |lambda_n|_1 p_N(phi) <= d(phi,0)/(2n), so the certified ratio cannot exceed 1",
        }),
        vec![csv_table(
            "witness",
            &["n", "numerator_lb", "numerator_grid", "denominator", "certified_ratio", "attains_2n"],
            &rows,
        )],
    )
}

fn check_fourier(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> CheckReport {
    const VALUE_TOL: f64 = 1e-6;
    const PLANCHEREL_TOL: f64 = 1e-9;
    let fc = &cfg.fourier;
    let g = match IntegrableFunction::gaussian(vec![0.0], fc.sigma, c(1.0)) {
        Ok(g) => g,
        Err(e) => return failed(13, e),
    };
    let grid = frequency_grid(fc.t_max, fc.t_count);
    let v = match check_l1_c0_bound(&g, &grid) {
        Ok(v) => v,
        Err(e) => return failed(13, e),
    };
    let sup_ok = (v.sup_abs - fc.sigma).abs() <= VALUE_TOL;
    let l1_ok = (v.l1_norm - fc.sigma * (2.0 * PI).sqrt()).abs() <= VALUE_TOL;
    let mut worst_planch = 0.0_f64;
    let mut planch_ok = true;
    for _ in 0..fc.vectors {
        let vec: Vec<C64> = (0..fc.length)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        match plancherel_check(&vec, PLANCHEREL_TOL) {
            Ok(p) => {
                worst_planch = worst_planch.max(p.relative_error);
                planch_ok &= p.holds;
            }
            Err(e) => return failed(13, e),
        }
    }
    let family: Vec<TestFunction> = fc
        .dilations
        .iter()
        .filter_map(|s| TestFunction::gaussian(vec![0.0], 1.0 / s).ok())
        .collect();
    let amp = match schwartz_fourier_bounded(&family, fc.k_max, &fc.schwartz_params(), &SpectralGrid::default()) {
        Ok(a) => a,
        Err(e) => return failed(13, e),
    };
    let rows: Vec<Vec<String>> = amp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.function.clone(),
                r.k.to_string(),
                r.norm.to_string(),
                r.transform_norm.to_string(),
                r.ratio.to_string(),
                r.quadrature_error.to_string(),
            ]
        })
        .collect();
    let spectrum = crate::fourier::fourier_transform(&g, &grid).map(|s| s.to_csv()).unwrap_or_default();
    report(
        13,
        sup_ok && l1_ok && v.holds && planch_ok && amp.finite,
        json!({
            "sup_abs_transform": cert(v.sup_abs, "quadrature"),
            "expected_sup": fc.sigma,
            "l1_norm": cert(v.l1_norm, "quadrature"),
            "expected_l1": fc.sigma * (2.0 * PI).sqrt(),
            "value_tolerance": VALUE_TOL,
            "bound_holds": v.holds,
            "plancherel_vectors": fc.vectors,
            "plancherel_worst_relative_error": cert(worst_planch, "exact"),
            "plancherel_tolerance": PLANCHEREL_TOL,
            "amplification_max_ratio": amp.max_ratio,
            "amplification_finite": amp.finite,
        }),
        vec![
            csv_table("amplification", &["function", "k", "norm", "transform_norm", "ratio", "quadrature_error"], &rows),
            Table {
                name: "gaussian_spectrum".into(),
                csv: spectrum,
            },
        ],
    )
}

fn check_completeness(_cfg: &RunConfig, _rng: &mut ChaCha8Rng) -> CheckReport {
    const FINAL: f64 = 1e-9;
    // dyadic samples and small integer coefficients keep every value exact
    let x = FiniteSpace::real(2, NormType::L1);
    let pts: Vec<Vec<f64>> = (-8..=8)
        .flat_map(|i| (-8..=8).map(move |j| vec![i as f64 / 4.0, j as f64 / 4.0]))
        .collect();
    let samples = match SampleSet::from_real(&pts, &x) {
        Ok(s) => s,
        Err(e) => return failed(14, e),
    };
    let mm = MappingMetric::normed(&x, CodomainMetric::Scalar, &samples);
    let zero = x.zero();
    let f = MappingHandle::new("x1*x2+x1", &zero, |v: &Vector| scalar(v[0] * v[1] + v[0]));
    let g = MappingHandle::new("x1^2-3x2", &zero, |v: &Vector| scalar(v[0] * v[0] - v[1] * 3.0));
    let seq: Vec<_> = (0..40)
        .map(|n| f.add(&g.scale(c(2f64.powi(-n)), &zero), &zero))
        .collect();
    let dg = match metric_d(&g, &MappingHandle::zero((1, 1), &zero), &mm) {
        Ok(v) => v.value,
        Err(e) => return failed(14, e),
    };
    let v = match completeness_harness(&seq, &f, &mm) {
        Ok(v) => v,
        Err(e) => return failed(14, e),
    };
    let mismatches = v
        .distances_to_limit
        .iter()
        .enumerate()
        .filter(|(n, d)| **d != 2f64.powi(-(*n as i32)) * dg)
        .count();
    let rows: Vec<Vec<String>> = v
        .distances_to_limit
        .iter()
        .enumerate()
        .map(|(n, d)| vec![n.to_string(), d.to_string(), (2f64.powi(-(n as i32)) * dg).to_string()])
        .collect();
    report(
        14,
        mismatches == 0 && v.final_distance < FINAL && v.converged,
        json!({
            "terms": seq.len(),
            "d_g": cert(dg, "sampled_lower_bound"),
            "exact_mismatches": mismatches,
            "final_distance": cert(v.final_distance, "sampled_lower_bound"),
            "final_threshold": FINAL,
            "tail_diameter": v.tail_diameter,
        }),
        vec![csv_table("distances", &["n", "distance", "expected"], &rows)],
    )
}

/// Runs one check by number; check 15 is handled by [`run_suite`].
pub fn run_check(id: u8, cfg: &RunConfig) -> CheckReport {
    let mut rng = rng_for(cfg.seed, id);
    match id {
        1 => check_norm_structure(cfg, &mut rng),
        2 => check_composition(cfg, &mut rng),
        3 => check_contraction(cfg, &mut rng),
        4 => check_uniform_boundedness(cfg, &mut rng),
        5 => check_one_point(cfg, &mut rng),
        6 => check_posneg(cfg, &mut rng),
        7 => check_hilbert(cfg, &mut rng),
        8 => check_linear_form(cfg, &mut rng),
        9 => check_algebra(cfg, &mut rng),
        10 => check_distributions(cfg, &mut rng),
        11 => check_position(cfg, &mut rng),
        12 => check_momentum(cfg, &mut rng),
        13 => check_fourier(cfg, &mut rng),
        14 => check_completeness(cfg, &mut rng),
        _ => failed(id, "no such check"),
    }
}

fn run_batch(cfg: &RunConfig, ids: &[u8]) -> Vec<(CheckReport, f64)> {
    ids.par_iter()
        .copied()
        .map(|id| {
            let t = Instant::now();
            let r = run_check(id, cfg);
            (r, t.elapsed().as_secs_f64() * 1e3)
        })
        .collect()
}

/// Runs every check; check 15 reruns checks 1–14 and compares the reports.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteReport, crate::config::ConfigError> {
    run_selected(cfg, &(1..=CHECK_COUNT).collect::<Vec<_>>())
}

/// Runs the listed checks in id order. Selecting 15 reruns the other selected
/// checks and compares them byte for byte.
pub fn run_selected(cfg: &RunConfig, ids: &[u8]) -> Result<SuiteReport, crate::config::ConfigError> {
    cfg.validate()?;
    let mut ids: Vec<u8> = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if let Some(bad) = ids.iter().find(|i| !(1..=CHECK_COUNT).contains(*i)) {
        return Err(crate::config::ConfigError::Invalid {
            field: "checks".into(),
            reason: format!("no check {bad}"),
        });
    }
    let rerun = ids.last() == Some(&CHECK_COUNT);
    if rerun {
        ids.pop();
    }
    let started = Instant::now();
    let first = run_batch(cfg, &ids);
    let mut timing_ms = BTreeMap::new();
    for (r, ms) in &first {
        timing_ms.insert(format!("check{:02}", r.id), *ms);
    }
    let mut checks: Vec<CheckReport> = Vec::new();
    if rerun {
        checks.push(determinism(cfg, &ids, &first, &mut timing_ms));
    }
    let mut all: Vec<CheckReport> = first.into_iter().map(|(r, _)| r).collect();
    all.append(&mut checks);
    timing_ms.insert("total".into(), started.elapsed().as_secs_f64() * 1e3);
    Ok(SuiteReport {
        command: "suite".into(),
        seed: cfg.seed,
        tolerances: cfg.tolerances,
        passed: all.iter().all(|c| c.passed),
        checks: all,
        timing_ms,
    })
}

fn determinism(
    cfg: &RunConfig,
    ids: &[u8],
    first: &[(CheckReport, f64)],
    timing_ms: &mut BTreeMap<String, f64>,
) -> CheckReport {
    let t = Instant::now();
    let second = run_batch(cfg, ids);
    let encode = |batch: &[(CheckReport, f64)]| -> Vec<String> {
        batch
            .iter()
            .map(|(r, _)| serde_json::to_string(r).expect("check serializes") + &tables_digest(&r.tables))
            .collect()
    };
    let (a, b) = (encode(first), encode(&second));
    let differing: Vec<u8> = a
        .iter()
        .zip(&b)
        .zip(first)
        .filter(|((x, y), _)| x != y)
        .map(|(_, (r, _))| r.id)
        .collect();
    timing_ms.insert("check15".into(), t.elapsed().as_secs_f64() * 1e3);
    report(
        15,
        differing.is_empty(),
        json!({
            "reruns": 1,
            "checks_compared": ids,
            "differing_checks": differing,
            "compared": "report JSON and CSV tables, byte for byte",
        }),
        Vec::new(),
    )
}

fn with_seed_column(csv_text: &str, seed: u64) -> std::io::Result<Vec<u8>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let first = if i == 0 { "seed".to_string() } else { seed.to_string() };
        w.write_record(std::iter::once(first.as_str()).chain(rec.iter()))?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

fn tables_digest(tables: &[Table]) -> String {
    tables.iter().map(|t| format!("\n{}\n{}", t.name, t.csv)).collect()
}
