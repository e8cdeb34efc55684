//! The Fourier transform on L¹ (by quadrature), a unitary radix-2 FFT, and
//! Schwartz seminorms of transforms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::{PanelRule, QuadratureBudgetExceeded};
use crate::testfn::{schwartz_table, SchwartzParams, TestFnError, TestFunction, BOUNDARY_DECAY};

/// Tail mass allowed outside the quadrature window, relative to ‖f‖₁.
pub const TAIL_FRACTION: f64 = 1e-8;
/// Relative agreement demanded between a rule and its doubled rule.
pub const TRANSFORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureBudgetExceeded),
    #[error(transparent)]
    TestFn(#[from] TestFnError),
    #[error("length {0} is not a power of two")]
    LengthNotPowerOfTwo(usize),
    #[error("tail mass {tail:e} outside the window exceeds {TAIL_FRACTION:e} of the L1 norm {l1:e}")]
    WindowTooSmall { tail: f64, l1: f64 },
    #[error("only dimensions 1 and 2 are supported, got {0}")]
    UnsupportedDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A pointwise bound `|f(x)| ≤ envelope(x)` used to bound the mass outside the window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DecayEnvelope {
    /// `|f(x)| ≤ amplitude · exp(−‖x‖²/(2σ²))`.
    Gaussian { amplitude: f64, sigma: f64 },
    /// `f` vanishes outside the window.
    Compact,
}

impl DecayEnvelope {
    /// Upper bound of `∫_{outside [−L,L]^n} envelope`.
    pub fn tail_mass(&self, dim: usize, half_width: f64) -> f64 {
        match self {
            DecayEnvelope::Compact => 0.0,
            DecayEnvelope::Gaussian { amplitude, sigma } => {
                let s2 = sigma * sigma;
                // ∫_{|x|>L} e^{-x²/2σ²} ≤ 2 σ²/L e^{-L²/2σ²}
                let one_dim_tail = 2.0 * s2 / half_width * (-half_width * half_width / (2.0 * s2)).exp();
                let full = sigma * (2.0 * PI).sqrt();
                amplitude * dim as f64 * one_dim_tail * full.powi(dim as i32 - 1)
            }
        }
    }
}

type FieldFn = dyn Fn(&[f64]) -> C64 + Send + Sync;

/// An L¹ function on R^n (n ≤ 2) with a quadrature window.
#[derive(Clone)]
pub struct IntegrableFunction {
    label: String,
    dim: usize,
    f: Arc<FieldFn>,
    half_width: f64,
    envelope: DecayEnvelope,
    max_panels: usize,
    l1_norm: f64,
    l1_error: f64,
    tail: f64,
}

impl fmt::Debug for IntegrableFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrableFunction")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("half_width", &self.half_width)
            .field("envelope", &self.envelope)
            .field("l1_norm", &self.l1_norm)
            .field("l1_error", &self.l1_error)
            .field("tail", &self.tail)
            .finish()
    }
}

/// Tensor Gauss–Legendre rule on `[−L, L]^dim`.
fn tensor_rule(dim: usize, half_width: f64, panels: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rule = PanelRule::new(-half_width, half_width, panels);
    match dim {
        1 => (rule.nodes.iter().map(|x| vec![*x]).collect(), rule.weights.clone()),
        _ => {
            let mut pts = Vec::with_capacity(rule.nodes.len().pow(2));
            let mut w = Vec::with_capacity(pts.capacity());
            for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
                for (y, wy) in rule.nodes.iter().zip(&rule.weights) {
                    pts.push(vec![*x, *y]);
                    w.push(wx * wy);
                }
            }
            (pts, w)
        }
    }
}

/// Integrates `g` over the window, doubling panels until two rules agree.
fn integrate_window<G>(dim: usize, half_width: f64, start: usize, max_panels: usize, g: G) -> Result<(C64, f64, usize), FourierError>
where
    G: Fn(&[f64]) -> C64 + Sync,
{
    let eval = |panels: usize| {
        let (pts, w) = tensor_rule(dim, half_width, panels);
        pts.par_iter()
            .zip(w.par_iter())
            .map(|(x, w)| g(x) * *w)
            .collect::<Vec<_>>()
            .into_iter()
            .fold(C64::new(0.0, 0.0), |a, b| a + b)
    };
    let mut panels = start.max(1);
    let mut prev = eval(panels);
    loop {
        let next = panels * 2;
        let cur = eval(next);
        let err = (cur - prev).norm();
        if err <= TRANSFORM_TOLERANCE * (1.0 + cur.norm()) {
            return Ok((cur, err, next));
        }
        if next * 2 > max_panels {
            return Err(QuadratureBudgetExceeded {
                panels: next,
                error: err,
                tolerance: TRANSFORM_TOLERANCE * (1.0 + cur.norm()),
            }
            .into());
        }
        prev = cur;
        panels = next;
    }
}

impl IntegrableFunction {
    pub fn new<F>(label: impl Into<String>, dim: usize, half_width: f64, envelope: DecayEnvelope, f: F) -> Result<Self, FourierError>
    where
        F: Fn(&[f64]) -> C64 + Send + Sync + 'static,
    {
        if !(1..=2).contains(&dim) {
            return Err(FourierError::UnsupportedDimension(dim));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(FourierError::InvalidParameter(format!("window half-width {half_width}")));
        }
        let max_panels = if dim == 1 { 1 << 14 } else { 1 << 8 };
        let (l1, l1_error, _) = integrate_window(dim, half_width, 4, max_panels, |x| C64::new(f(x).norm(), 0.0))?;
        let tail = envelope.tail_mass(dim, half_width);
        if tail > TAIL_FRACTION * l1.re {
            return Err(FourierError::WindowTooSmall { tail, l1: l1.re });
        }
        Ok(Self {
            label: label.into(),
            dim,
            f: Arc::new(f),
            half_width,
            envelope,
            max_panels,
            l1_norm: l1.re,
            l1_error,
            tail,
        })
    }

    /// `amplitude · exp(−‖x − center‖²/(2σ²))`. The envelope uses
    /// `‖x−c‖² ≥ ‖x‖²/2 − ‖c‖²`.
    pub fn gaussian(center: Vec<f64>, sigma: f64, amplitude: C64) -> Result<Self, FourierError> {
        let dim = center.len();
        let reach = center.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c2 = center.clone();
        Self::new(
            format!("gaussian(c={center:?}, s={sigma})"),
            dim,
            2.0 * reach + 12.0 * sigma,
            DecayEnvelope::Gaussian {
                amplitude: amplitude.norm() * (reach * reach / (2.0 * sigma * sigma)).exp(),
                sigma: sigma * 2f64.sqrt(),
            },
            move |x| {
                let r2: f64 = x.iter().zip(&c2).map(|(a, b)| (a - b) * (a - b)).sum();
                amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
            },
        )
    }

    /// `Σ w_j exp(−‖x − c_j‖²/(2σ_j²))`.
    pub fn gaussian_mixture(components: &[(C64, Vec<f64>, f64)]) -> Result<Self, FourierError> {
        if components.is_empty() {
            return Err(FourierError::InvalidParameter("empty mixture".into()));
        }
        let dim = components[0].1.len();
        let sigma = components.iter().map(|c| c.2).fold(0.0, f64::max);
        let narrowest = components.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        let shift = components
            .iter()
            .map(|(_, c, _)| c.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let reach = 2.0 * shift * sigma / narrowest + 12.0 * sigma;
        let amp: f64 = components.iter().map(|(w, _, _)| w.norm()).sum();
        let comps = components.to_vec();
        Self::new(
            format!("mixture({} components)", components.len()),
            dim,
            reach,
            DecayEnvelope::Gaussian {
                amplitude: amp * (shift * shift / (2.0 * narrowest * narrowest)).exp(),
                sigma: sigma * 2f64.sqrt(),
            },
            move |x| {
                comps.iter().fold(C64::new(0.0, 0.0), |acc, (w, c, s)| {
                    let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    acc + w * (-r2 / (2.0 * s * s)).exp()
                })
            },
        )
    }

    pub fn zero(dim: usize) -> Result<Self, FourierError> {
        Self::new("0", dim, 1.0, DecayEnvelope::Compact, |_| C64::new(0.0, 0.0))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        (self.f)(x)
    }

    /// Quadrature value of ‖f‖₁ over the window.
    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// Quadrature error plus the envelope tail outside the window.
    pub fn l1_error(&self) -> f64 {
        self.l1_error + self.tail
    }
}

/// Sampled values of `f̂` on a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub t_grid: Vec<Vec<f64>>,
    pub values: Vec<C64>,
    pub errors: Vec<f64>,
    pub sup_abs: f64,
    pub max_error: f64,
}

impl SpectrumSample {
    /// Rows `t_1..t_n, re, im, abs`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let dim = self.t_grid.first().map_or(1, |t| t.len());
        let mut header: Vec<String> = (1..=dim).map(|j| if dim == 1 { "t".into() } else { format!("t{j}") }).collect();
        header.extend(["re".into(), "im".into(), "abs".into()]);
        let _ = w.write_record(&header);
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            let mut row: Vec<String> = t.iter().map(|x| format!("{x}")).collect();
            row.extend([format!("{:e}", v.re), format!("{:e}", v.im), format!("{:e}", v.norm())]);
            let _ = w.write_record(&row);
        }
        String::from_utf8_lossy(&w.into_inner().unwrap_or_default()).into_owned()
    }
}

/// `f̂(t) = (2π)^{−n/2} ∫ f(x) e^{−i t·x} dx` on each grid frequency.
pub fn fourier_transform(f: &IntegrableFunction, t_grid: &[Vec<f64>]) -> Result<SpectrumSample, FourierError> {
    let norm = (2.0 * PI).powf(-(f.dim as f64) / 2.0);
    let mut values = Vec::with_capacity(t_grid.len());
    let mut errors = Vec::with_capacity(t_grid.len());
    for t in t_grid {
        if t.len() != f.dim {
            return Err(FourierError::InvalidParameter(format!(
                "frequency of dimension {} for a function on R^{}",
                t.len(),
                f.dim
            )));
        }
        let tmax = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let start = ((tmax * f.half_width / PI).ceil() as usize).max(4).next_power_of_two();
        let (v, err, _) = integrate_window(f.dim, f.half_width, start, f.max_panels, |x| {
            let phase: f64 = t.iter().zip(x).map(|(a, b)| a * b).sum();
            f.eval(x) * C64::from_polar(1.0, -phase)
        })?;
        values.push(v * norm);
        errors.push((err + f.tail) * norm);
    }
    let sup_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(SpectrumSample {
        t_grid: t_grid.to_vec(),
        values,
        errors,
        sup_abs,
        max_error,
    })
}

/// Uniform 1-D frequency grid `[−T, T]` with `count` points.
pub fn frequency_grid(t_max: f64, count: usize) -> Vec<Vec<f64>> {
    if count <= 1 {
        return vec![vec![0.0]];
    }
    (0..count)
        .map(|j| vec![-t_max + 2.0 * t_max * j as f64 / (count - 1) as f64])
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct L1C0Verdict {
    pub sup_abs: f64,
    pub l1_norm: f64,
    pub tolerance: f64,
    /// `(2π)^{−n/2}‖f‖₁`, the sharper bound under this normalization.
    pub normalized_bound: f64,
    pub at_zero: Option<f64>,
    pub holds: bool,
}

/// `sup |f̂| ≤ ‖f‖₁` up to the combined quadrature error.
pub fn check_l1_c0_bound(f: &IntegrableFunction, t_grid: &[Vec<f64>]) -> Result<L1C0Verdict, FourierError> {
    let spec = fourier_transform(f, t_grid)?;
    let tolerance = spec.max_error + f.l1_error();
    let at_zero = spec
        .t_grid
        .iter()
        .position(|t| t.iter().all(|v| *v == 0.0))
        .map(|i| spec.values[i].norm());
    Ok(L1C0Verdict {
        sup_abs: spec.sup_abs,
        l1_norm: f.l1_norm,
        tolerance,
        normalized_bound: (2.0 * PI).powf(-(f.dim as f64) / 2.0) * f.l1_norm,
        at_zero,
        holds: spec.sup_abs <= f.l1_norm + tolerance,
    })
}

fn check_pow2(n: usize) -> Result<(), FourierError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(FourierError::LengthNotPowerOfTwo(n));
    }
    Ok(())
}

/// In-place iterative radix-2 transform, scaled by `1/√N` in both directions.
pub fn fft_in_place(v: &mut [C64], inverse: bool) -> Result<(), FourierError> {
    let n = v.len();
    check_pow2(n)?;
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) };
        if j > i {
            v.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let step = sign * 2.0 * PI / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = C64::from_polar(1.0, step * k as f64);
                let a = v[start + k];
                let b = v[start + k + len / 2] * w;
                v[start + k] = a + b;
                v[start + k + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
    Ok(())
}

pub fn fft(v: &[C64]) -> Result<Vec<C64>, FourierError> {
    let mut out = v.to_vec();
    fft_in_place(&mut out, false)?;
    Ok(out)
}

pub fn ifft(v: &[C64]) -> Result<Vec<C64>, FourierError> {
    let mut out = v.to_vec();
    fft_in_place(&mut out, true)?;
    Ok(out)
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Discrete analogue of the Plancherel isometry.
#[derive(Debug, Clone, Serialize)]
pub struct PlancherelVerdict {
    pub length: usize,
    pub norm_in: f64,
    pub norm_out: f64,
    pub relative_error: f64,
    pub roundtrip_error: f64,
    pub linearity_error: f64,
    pub holds: bool,
}

pub fn plancherel_check(v: &[C64], tol: f64) -> Result<PlancherelVerdict, FourierError> {
    let out = fft(v)?;
    let back = ifft(&out)?;
    let norm_in = l2(v);
    let norm_out = l2(&out);
    let scale = norm_in.max(f64::MIN_POSITIVE);
    let relative_error = (norm_out - norm_in).abs() / scale;
    let roundtrip_error = l2(&back.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>()) / scale;
    // linearity on the pair (v, reversed conjugate of v)
    let alpha = C64::new(0.5, -1.25);
    let w: Vec<C64> = v.iter().rev().map(|z| z.conj()).collect();
    let combo: Vec<C64> = v.iter().zip(&w).map(|(a, b)| alpha * a + b).collect();
    let lhs = fft(&combo)?;
    let fw = fft(&w)?;
    let diff: Vec<C64> = lhs.iter().zip(out.iter().zip(&fw)).map(|(l, (a, b))| l - (alpha * a + b)).collect();
    let linearity_error = l2(&diff) / scale;
    Ok(PlancherelVerdict {
        length: v.len(),
        norm_in,
        norm_out,
        relative_error,
        roundtrip_error,
        linearity_error,
        holds: relative_error <= tol && roundtrip_error <= tol && linearity_error <= tol,
    })
}

/// Frequency grid and x-window for transforming test functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralGrid {
    pub t_max: f64,
    pub t_density: f64,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self {
            t_max: 48.0,
            t_density: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplificationRow {
    pub function: String,
    pub k: usize,
    pub norm: f64,
    pub transform_norm: f64,
    pub ratio: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchwartzFourierReport {
    pub rows: Vec<AmplificationRow>,
    /// Largest ratio `‖f̂‖_k / ‖f‖_k` per `k`.
    pub max_ratio: Vec<f64>,
    pub finite: bool,
}

/// `(1 − d²/dx²)^k ((−ix)^α f)`, whose transform is `(1+t²)^k ∂^α f̂`.
fn weighted_preimage(f: &TestFunction, alpha: usize, k: usize) -> Result<TestFunction, TestFnError> {
    let x = TestFunction::coordinate(0, 1).scale(C64::new(0.0, -1.0));
    let mut g = f.clone();
    for _ in 0..alpha {
        g = x.mul(&g);
    }
    let mut h = TestFunction::zero(1);
    let mut binom = 1.0;
    for j in 0..=k {
        let term = if j == 0 { g.clone() } else { g.derivative(&[2 * j as u16])? };
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        h = h.add(&term.scale(C64::new(sign * binom, 0.0)));
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    Ok(h)
}

/// `‖f̂‖_k` for `k ≤ k_max` of a one-dimensional test function, and the maximal
/// quadrature error seen.
pub fn transform_seminorms(
    f: &TestFunction,
    k_max: usize,
    params: &SchwartzParams,
    grid: &SpectralGrid,
) -> Result<(Vec<f64>, f64), FourierError> {
    if f.dimension() != 1 {
        return Err(FourierError::UnsupportedDimension(f.dimension()));
    }
    let (lo, hi) = match f.support() {
        Some(s) => (s.lo[0], s.hi[0]),
        None => (-params.window, params.window),
    };
    if hi <= lo {
        return Ok((vec![0.0; k_max + 1], 0.0));
    }
    let panels = (((hi - lo) * grid.t_max / PI).ceil() as usize).max(8).next_power_of_two();
    let coarse = PanelRule::new(lo, hi, panels);
    let fine = PanelRule::new(lo, hi, 2 * panels);
    let t_count = (2.0 * grid.t_max * grid.t_density).round() as usize + 1;
    let ts: Vec<f64> = frequency_grid(grid.t_max, t_count).into_iter().map(|t| t[0]).collect();
    let h_step = 2.0 * grid.t_max / (t_count.max(2) - 1) as f64;
    let norm = (2.0 * PI).powf(-0.5);
    let mut out = Vec::with_capacity(k_max + 1);
    let mut max_err = 0.0_f64;
    for k in 0..=k_max {
        let mut interior = 0.0_f64;
        let mut boundary = 0.0_f64;
        for alpha in 0..=k {
            let h = weighted_preimage(f, alpha, k)?;
            let sample = |rule: &PanelRule| -> Vec<C64> {
                rule.nodes
                    .par_iter()
                    .zip(rule.weights.par_iter())
                    .map(|(x, w)| h.value(&[*x]) * *w)
                    .collect()
            };
            let (hc, hf) = (sample(&coarse), sample(&fine));
            let rows: Vec<(f64, f64, f64)> = ts
                .par_iter()
                .map(|&t| {
                    let dot = |rule: &PanelRule, vals: &[C64]| {
                        rule.nodes
                            .iter()
                            .zip(vals)
                            .fold(C64::new(0.0, 0.0), |acc, (x, v)| acc + v * C64::from_polar(1.0, -t * x))
                    };
                    let a = dot(&fine, &hf) * norm;
                    let b = dot(&coarse, &hc) * norm;
                    (t, a.norm(), (a - b).norm())
                })
                .collect();
            for (t, v, e) in rows {
                max_err = max_err.max(e);
                if t.abs() > grid.t_max - 1.5 * h_step {
                    boundary = boundary.max(v);
                } else {
                    interior = interior.max(v);
                }
            }
        }
        if boundary > BOUNDARY_DECAY * interior && boundary > 0.0 {
            return Err(TestFnError::GridTooSmall { boundary, interior }.into());
        }
        out.push(interior.max(boundary));
    }
    Ok((out, max_err))
}

/// Amplification table `‖f̂‖_k / ‖f‖_k` over a family.
pub fn schwartz_fourier_bounded(
    family: &[TestFunction],
    k_max: usize,
    params: &SchwartzParams,
    grid: &SpectralGrid,
) -> Result<SchwartzFourierReport, FourierError> {
    let mut rows = Vec::new();
    let mut max_ratio = vec![0.0_f64; k_max + 1];
    for f in family {
        let norms = schwartz_table(f, k_max, params)?;
        let (hat, err) = transform_seminorms(f, k_max, params, grid)?;
        for k in 0..=k_max {
            let ratio = if norms[k] > 0.0 { hat[k] / norms[k] } else { 0.0 };
            max_ratio[k] = max_ratio[k].max(ratio);
            rows.push(AmplificationRow {
                function: f.label().to_string(),
                k,
                norm: norms[k],
                transform_norm: hat[k],
                ratio,
                quadrature_error: err,
            });
        }
    }
    let finite = rows.iter().all(|r| r.ratio.is_finite() && r.transform_norm.is_finite());
    Ok(SchwartzFourierReport { rows, max_ratio, finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(v: &[C64]) -> Vec<C64> {
        let n = v.len();
        (0..n)
            .map(|k| {
                v.iter().enumerate().fold(C64::new(0.0, 0.0), |acc, (j, x)| {
                    acc + x * C64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64)
                }) / (n as f64).sqrt()
            })
            .collect()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = IntegrableFunction::gaussian(vec![0.0], 1.0, C64::new(1.0, 0.0)).unwrap();
        assert!((g.l1_norm() - (2.0 * PI).sqrt()).abs() < 1e-10);
        let ts = frequency_grid(4.0, 17);
        let spec = fourier_transform(&g, &ts).unwrap();
        for (t, v) in spec.t_grid.iter().zip(&spec.values) {
            assert!((v - C64::new((-t[0] * t[0] / 2.0).exp(), 0.0)).norm() < 1e-9);
        }
        assert!((spec.sup_abs - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_transform_is_zero() {
        let z = IntegrableFunction::zero(1).unwrap();
        let spec = fourier_transform(&z, &frequency_grid(3.0, 7)).unwrap();
        assert!(spec.values.iter().all(|v| v.norm() == 0.0));
        let verdict = check_l1_c0_bound(&z, &frequency_grid(3.0, 7)).unwrap();
        assert!(verdict.holds);
        assert_eq!(verdict.sup_abs, 0.0);
    }

    #[test]
    fn translation_keeps_magnitude() {
        let g = IntegrableFunction::gaussian(vec![0.0], 0.7, C64::new(1.0, 0.0)).unwrap();
        let s = IntegrableFunction::gaussian(vec![1.3], 0.7, C64::new(1.0, 0.0)).unwrap();
        let ts = frequency_grid(5.0, 21);
        let a = fourier_transform(&g, &ts).unwrap();
        let b = fourier_transform(&s, &ts).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.norm() - y.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn two_dimensional_gaussian() {
        let g = IntegrableFunction::gaussian(vec![0.0, 0.0], 1.0, C64::new(1.0, 0.0)).unwrap();
        assert!((g.l1_norm() - 2.0 * PI).abs() < 1e-8);
        let spec = fourier_transform(&g, &[vec![0.0, 0.0], vec![1.0, -0.5]]).unwrap();
        assert!((spec.values[0].re - 1.0).abs() < 1e-8);
        assert!((spec.values[1].re - (-0.625f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn l1_c0_on_gaussian_and_mixture() {
        let g = IntegrableFunction::gaussian(vec![0.0], 1.0, C64::new(1.0, 0.0)).unwrap();
        let v = check_l1_c0_bound(&g, &frequency_grid(6.0, 25)).unwrap();
        assert!(v.holds);
        assert!((v.at_zero.unwrap() - 1.0).abs() < 1e-6);
        assert!((v.l1_norm - 2.5066282746310002).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let comps: Vec<(C64, Vec<f64>, f64)> = (0..3)
            .map(|_| {
                (
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    vec![rng.random_range(-2.0..2.0)],
                    rng.random_range(0.3..1.5),
                )
            })
            .collect();
        let m = IntegrableFunction::gaussian_mixture(&comps).unwrap();
        let v = check_l1_c0_bound(&m, &frequency_grid(8.0, 33)).unwrap();
        assert!(v.holds);
        assert!(v.sup_abs <= v.l1_norm + 1e-6);
    }

    #[test]
    fn tight_window_is_rejected() {
        let err = IntegrableFunction::new(
            "narrow",
            1,
            1.0,
            DecayEnvelope::Gaussian {
                amplitude: 1.0,
                sigma: 1.0,
            },
            |x| C64::new((-x[0] * x[0] / 2.0).exp(), 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, FourierError::WindowTooSmall { .. }));
    }

    #[test]
    fn fft_matches_naive_dft() {
        for n in [1usize, 2, 8, 64] {
            let v = random_vec(n, n as u64);
            let fast = fft(&v).unwrap();
            let slow = naive_dft(&v);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert_eq!(fft(&random_vec(12, 0)).unwrap_err(), FourierError::LengthNotPowerOfTwo(12));
        assert_eq!(fft(&[]).unwrap_err(), FourierError::LengthNotPowerOfTwo(0));
    }

    #[test]
    fn basis_vector_has_flat_spectrum() {
        let mut v = vec![C64::new(0.0, 0.0); 16];
        v[3] = C64::new(1.0, 0.0);
        let out = fft(&v).unwrap();
        for z in &out {
            assert!((z.norm() - 0.25).abs() < 1e-15);
        }
        assert!(plancherel_check(&v, 1e-9).unwrap().holds);
    }

    #[test]
    fn plancherel_on_random_vectors() {
        for seed in 0..5 {
            let v = random_vec(1024, seed);
            let verdict = plancherel_check(&v, 1e-9).unwrap();
            assert!(verdict.holds, "{verdict:?}");
        }
    }

    #[test]
    fn spectrum_scales_linearly() {
        let v = random_vec(32, 3);
        let alpha = C64::new(2.0, 0.0);
        let scaled: Vec<C64> = v.iter().map(|z| alpha * z).collect();
        let a = fft(&v).unwrap();
        let b = fft(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(alpha * x, *y);
        }
    }

    #[test]
    fn spectrum_csv_has_header() {
        let g = IntegrableFunction::gaussian(vec![0.0], 1.0, C64::new(1.0, 0.0)).unwrap();
        let csv = fourier_transform(&g, &frequency_grid(1.0, 3)).unwrap().to_csv();
        assert!(csv.starts_with("t,re,im,abs"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn gaussian_amplification_is_one_at_k0() {
        let g = TestFunction::gaussian(vec![0.0], 1.0).unwrap();
        let params = SchwartzParams {
            window: 14.0,
            ..Default::default()
        };
        let grid = SpectralGrid {
            t_max: 14.0,
            t_density: 64.0,
        };
        let rep = schwartz_fourier_bounded(&[g], 2, &params, &grid).unwrap();
        assert!((rep.rows[0].ratio - 1.0).abs() < 1e-9, "{:?}", rep.rows[0]);
        // closed-form check at k = 1: (1+t^2) max(|ĝ|, |ĝ'|) with ĝ = e^{-t²/2}
        let oracle = (0..=200_000)
            .map(|j| {
                let t = -14.0 + 28.0 * j as f64 / 200_000.0;
                let e = (-t * t / 2.0).exp();
                (1.0 + t * t) * e.max((t * e).abs())
            })
            .fold(0.0, f64::max);
        assert!((rep.rows[1].transform_norm - oracle).abs() < 1e-4 * oracle, "{:?} vs {oracle}", rep.rows[1]);
        assert!(rep.finite);
    }

    #[test]
    fn zero_family_member_has_zero_seminorms() {
        let rep = schwartz_fourier_bounded(&[TestFunction::zero(1)], 2, &SchwartzParams::default(), &SpectralGrid::default()).unwrap();
        assert!(rep.rows.iter().all(|r| r.norm == 0.0 && r.transform_norm == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn roundtrip_reproduces_input(seed in 0u64..1000, log_n in 0u32..9) {
            let v = random_vec(1 << log_n, seed);
            let back = ifft(&fft(&v).unwrap()).unwrap();
            let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12);
        }

        #[test]
        fn transform_is_linear(a in -2.0f64..2.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
            let f = IntegrableFunction::gaussian(vec![c1], 0.8, C64::new(1.0, 0.0)).unwrap();
            let g = IntegrableFunction::gaussian(vec![c2], 0.5, C64::new(0.0, 1.0)).unwrap();
            let (f2, g2) = (f.clone(), g.clone());
            // |f| + |g| <= (|a| + 1) e^2 e^{-x²/(2·1.2²)} for |c| <= 1 and σ <= 0.8
            let envelope = DecayEnvelope::Gaussian { amplitude: (a.abs() + 1.0) * 2f64.exp(), sigma: 1.2 };
            let combo = IntegrableFunction::new("combo", 1, 14.0, envelope, move |x| {
                f2.eval(x) * a + g2.eval(x)
            }).unwrap();
            let ts = frequency_grid(3.0, 7);
            let lhs = fourier_transform(&combo, &ts).unwrap();
            let sf = fourier_transform(&f, &ts).unwrap();
            let sg = fourier_transform(&g, &ts).unwrap();
            for i in 0..ts.len() {
                let rhs = sf.values[i] * a + sg.values[i];
                prop_assert!((lhs.values[i] - rhs).norm() < 1e-8);
            }
        }
    }
}
