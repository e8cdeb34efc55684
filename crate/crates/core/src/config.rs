//! Run configuration and the small spec strings accepted on the command line.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distrib::{FunctionalHandle, IntegralKernel, RampWitness};
use crate::expr::parse_operator;
use crate::extension::SubadditiveFunctional;
use crate::opspace::NormKind;
use crate::spaces::{FiniteSpace, NormType, SampleSet, ScalarField, Vector};
use crate::testfn::{default_truncation, BumpFamily, BoxRegion, Exhaustion, FrechetMetricParams, MetricVariant, SchwartzParams};
use crate::tolerance::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("bad spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },
    #[error("csv row {row}: {reason}")]
    Csv { row: usize, reason: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn spec_err(spec: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Spec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceConfig {
    pub dimension: usize,
    pub field: ScalarField,
    /// `l1`, `l2`, `linf` or `weighted`.
    pub norm: String,
    pub weights: Option<Vec<f64>>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            dimension: 2,
            field: ScalarField::Real,
            norm: "l2".into(),
            weights: None,
        }
    }
}

impl SpaceConfig {
    pub fn norm_type(&self) -> Result<NormType, ConfigError> {
        match self.norm.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormType::L1),
            "l2" => Ok(NormType::L2),
            "linf" => Ok(NormType::Linf),
            "weighted" => self
                .weights
                .clone()
                .map(NormType::Weighted)
                .ok_or_else(|| invalid("space.weights", "required for a weighted norm")),
            other => Err(invalid("space.norm", format!("unknown norm `{other}`"))),
        }
    }

    pub fn to_space(&self) -> Result<FiniteSpace, ConfigError> {
        FiniteSpace::new(self.dimension, self.field, self.norm_type()?).map_err(|e| invalid("space", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    /// A builtin name or an expression.
    pub expr: String,
    /// `p`, `pstar`, `q:s`, `qstar:s` or `pk:k`.
    pub kind: String,
    /// Sample spec, see [`parse_samples`].
    pub samples: String,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            expr: "cubic".into(),
            kind: "p".into(),
            samples: "halton:count=64,radius=2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub members: Vec<String>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            members: vec!["x".into(), "2*x".into(), "sin(x)".into(), "tanh(x)".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtendConfig {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Imaginary parts for complex extension.
    pub values_im: Option<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// `l1`, `l2` or `weighted`.
    pub p: String,
    pub weights: Option<Vec<f64>>,
    pub m1: f64,
    pub m2: f64,
    /// Orthonormal base directions and the new direction for the Hilbert step.
    pub basis: Vec<Vec<f64>>,
    pub direction: Vec<f64>,
    pub density: usize,
    pub t_max: f64,
    pub t_count: usize,
    /// Linear-form extension: `T(u_i) = c_i`, wrapped by `u^power`.
    pub coefficients: Vec<f64>,
    pub power: f64,
}

impl ExtendConfig {
    /// The dominating functional named by `p` on `R^dim`.
    pub fn dominating(&self, dim: usize) -> Result<SubadditiveFunctional, ConfigError> {
        match self.p.as_str() {
            "l1" => Ok(SubadditiveFunctional::l1(dim)),
            "l2" => Ok(SubadditiveFunctional::l2()),
            "weighted" => match &self.weights {
                Some(w) if w.len() == dim && w.iter().all(|v| v.is_finite() && *v > 0.0) => {
                    Ok(SubadditiveFunctional::weighted_l1(w.clone()))
                }
                _ => Err(invalid("extend.weights", format!("need {dim} positive weights"))),
            },
            other => Err(invalid("extend.p", format!("unknown functional `{other}`"))),
        }
    }
}

impl Default for ExtendConfig {
    fn default() -> Self {
        Self {
            points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            values: vec![0.0, 1.0, -1.0],
            values_im: None,
            targets: vec![vec![1.0, 1.0], vec![-1.0, 0.5], vec![-2.0, -1.0]],
            p: "l1".into(),
            weights: None,
            m1: 1.0,
            m2: 1.0,
            basis: vec![vec![1.0, 0.0]],
            direction: vec![0.0, 1.0],
            density: 5,
            t_max: 2.0,
            t_count: 17,
            coefficients: vec![2.0],
            power: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    /// Defaults to the index at which the geometric tail falls below 1e-9.
    pub truncation: Option<usize>,
    pub density: f64,
    pub step: f64,
    /// `cinfinity` or `distribution`.
    pub variant: String,
    /// Open box `(lo, hi)` for the interior exhaustion or the distribution variant.
    pub omega: Option<[Vec<f64>; 2]>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        let p = FrechetMetricParams::default();
        Self {
            a: p.a,
            b: p.b,
            n: p.n,
            truncation: None,
            density: p.density,
            step: 1.0,
            variant: "cinfinity".into(),
            omega: None,
        }
    }
}

impl MetricConfig {
    pub fn to_params(&self, dim: usize) -> Result<FrechetMetricParams, ConfigError> {
        let omega = match &self.omega {
            Some([lo, hi]) => Some(BoxRegion::new(lo.clone(), hi.clone()).map_err(|e| invalid("metric.omega", e.to_string()))?),
            None => None,
        };
        let variant = match self.variant.to_ascii_lowercase().as_str() {
            "cinfinity" => MetricVariant::CInfinity(match omega {
                Some(omega) => Exhaustion::Interior { omega },
                None => Exhaustion::Linear { step: self.step },
            }),
            "distribution" => MetricVariant::Distribution { omega },
            other => return Err(invalid("metric.variant", format!("unknown variant `{other}`"))),
        };
        if !(self.a > 1.0) {
            return Err(invalid("metric.a", format!("{} must exceed 1", self.a)));
        }
        let params = FrechetMetricParams {
            a: self.a,
            b: self.b,
            n: self.n,
            truncation: self.truncation.unwrap_or_else(|| default_truncation(self.a)),
            variant,
            density: self.density,
            extra_points: Vec::new(),
        };
        params.validate(dim).map_err(|e| invalid("metric", e.to_string()))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl BumpConfig {
    pub fn to_family(&self) -> BumpFamily {
        BumpFamily {
            center: self.center.clone(),
            radius: self.radius,
            amplitude: C64::new(self.amplitude, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Explicit probe bumps; when empty, `count` seeded bumps are drawn.
    pub bumps: Vec<BumpConfig>,
    pub count: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            bumps: Vec::new(),
            count: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `indicator`, `ramp` or `zero`.
    #[serde(rename = "type")]
    pub kind: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub n: Option<u32>,
    pub c: Option<f64>,
}

impl KernelConfig {
    pub fn to_kernel(&self) -> Result<IntegralKernel, ConfigError> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(&format!("kernel.{key}"), "missing"));
        let k = match self.kind.as_str() {
            "indicator" => IntegralKernel::indicator(need(self.lo, "lo")?, need(self.hi, "hi")?),
            "zero" => IntegralKernel::zero(need(self.lo, "lo")?, need(self.hi, "hi")?),
            "ramp" => {
                let n = self.n.ok_or_else(|| invalid("kernel.n", "missing"))?;
                RampWitness::new(n, self.c.unwrap_or(0.0)).and_then(|w| w.kernel())
            }
            other => return Err(invalid("kernel.type", format!("unknown kernel `{other}`"))),
        };
        k.map_err(|e| invalid("kernel", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierConfig {
    pub sigma: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// Length of the random vectors for the discrete check.
    pub length: usize,
    pub vectors: usize,
    pub k_max: usize,
    /// Dilation factors `s`; the family is the bump family at radius `1/s`.
    pub dilations: Vec<f64>,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            t_max: 8.0,
            t_count: 161,
            length: 1024,
            vectors: 20,
            k_max: 2,
            dilations: vec![1.0, 2.0, 4.0],
        }
    }
}

impl FourierConfig {
    pub fn schwartz_params(&self) -> SchwartzParams {
        SchwartzParams {
            n: self.k_max,
            ..Default::default()
        }
    }
}

/// Everything a run needs; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub space: SpaceConfig,
    pub operator: OperatorConfig,
    pub family: FamilyConfig,
    pub extend: ExtendConfig,
    pub metric: MetricConfig,
    pub probes: ProbeConfig,
    pub kernels: BTreeMap<String, KernelConfig>,
    pub fourier: FourierConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240611,
            out: None,
            tolerances: Tolerances::default(),
            space: SpaceConfig::default(),
            operator: OperatorConfig::default(),
            family: FamilyConfig::default(),
            extend: ExtendConfig::default(),
            metric: MetricConfig::default(),
            probes: ProbeConfig::default(),
            kernels: BTreeMap::new(),
            fourier: FourierConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        for (name, v) in [("tolerances.exact", t.exact), ("tolerances.quadrature", t.quadrature)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(name, format!("{v} must lie in (0, 1)")));
            }
        }
        let space = self.space.to_space()?;
        self.metric.to_params(1)?;
        self.operator
            .kind
            .parse::<NormKind>()
            .map_err(|e| invalid("operator.kind", e.to_string()))?;
        parse_sample_spec(&self.operator.samples)?;
        parse_operator(&self.operator.expr, &space, None).map_err(|e| invalid("operator.expr", e.to_string()))?;
        for m in &self.family.members {
            parse_operator(m, &space, None).map_err(|e| invalid("family.members", e.to_string()))?;
        }
        if let Some(d) = self.extend.points.first() {
            self.extend.dominating(d.len())?;
        }
        if self.extend.points.len() != self.extend.values.len() {
            return Err(invalid("extend.values", "length differs from extend.points"));
        }
        if !(self.extend.m1 >= 0.0 && self.extend.m2 >= 0.0) {
            return Err(invalid("extend.m1", "bounds must be nonnegative"));
        }
        for (name, k) in &self.kernels {
            k.to_kernel().map_err(|e| invalid(&format!("kernels.{name}"), e.to_string()))?;
        }
        for b in &self.probes.bumps {
            if !(b.radius > 0.0) {
                return Err(invalid("probes.bumps.radius", "must be positive"));
            }
        }
        let f = &self.fourier;
        if !(f.sigma > 0.0 && f.t_max > 0.0) || f.t_count == 0 {
            return Err(invalid("fourier", "sigma, t_max and t_count must be positive"));
        }
        if !f.length.is_power_of_two() {
            return Err(invalid("fourier.length", "must be a power of two"));
        }
        if f.dilations.iter().any(|s| !(*s > 0.0)) {
            return Err(invalid("fourier.dilations", "must be positive"));
        }
        Ok(())
    }
}

/// Splits `head:k=v,k=v` into the head and its key-value pairs.
fn split_spec(spec: &str) -> Result<(&str, BTreeMap<&str, &str>), ConfigError> {
    let spec = spec.trim();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut kv = BTreeMap::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| spec_err(spec, format!("`{part}` is not key=value")))?;
        if kv.insert(k.trim(), v.trim()).is_some() {
            return Err(spec_err(spec, format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok((head.trim(), kv))
}

fn take<T: FromStr>(spec: &str, kv: &BTreeMap<&str, &str>, key: &str) -> Result<Option<T>, ConfigError> {
    kv.get(key)
        .map(|v| v.parse::<T>().map_err(|_| spec_err(spec, format!("`{key}` does not parse"))))
        .transpose()
}

fn allow(spec: &str, kv: &BTreeMap<&str, &str>, keys: &[&str]) -> Result<(), ConfigError> {
    match kv.keys().find(|k| !keys.contains(k)) {
        Some(k) => Err(spec_err(spec, format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

fn list<T: FromStr>(spec: &str, text: &str) -> Result<Vec<T>, ConfigError> {
    text.split(';')
        .map(|s| s.trim().parse::<T>().map_err(|_| spec_err(spec, format!("`{s}` does not parse"))))
        .collect()
}

/// `delta:c=0.5`, `dderiv:k=2`, `kernel:type=indicator,lo=0,hi=0.25`,
/// `kernel:type=ramp,n=4,c=0`, `kernel:name=<config key>` or `zero`.
/// Multi-dimensional points and orders separate coordinates with `;`.
pub fn parse_functional(spec: &str, kernels: &BTreeMap<String, KernelConfig>) -> Result<FunctionalHandle, ConfigError> {
    let (head, kv) = split_spec(spec)?;
    match head {
        "zero" => {
            allow(spec, &kv, &[])?;
            Ok(FunctionalHandle::zero())
        }
        "delta" => {
            allow(spec, &kv, &["c"])?;
            let c = kv.get("c").map_or(Ok(vec![0.0]), |v| list::<f64>(spec, v))?;
            if c.iter().any(|x| !x.is_finite()) {
                return Err(spec_err(spec, "point must be finite"));
            }
            Ok(FunctionalHandle::delta(c))
        }
        "dderiv" => {
            allow(spec, &kv, &["k"])?;
            let k = kv
                .get("k")
                .ok_or_else(|| spec_err(spec, "missing `k`"))
                .and_then(|v| list::<u16>(spec, v))?;
            Ok(FunctionalHandle::deriv_delta(k))
        }
        "kernel" => {
            let cfg = if let Some(name) = kv.get("name") {
                allow(spec, &kv, &["name"])?;
                kernels
                    .get(*name)
                    .cloned()
                    .ok_or_else(|| spec_err(spec, format!("no kernel named `{name}`")))?
            } else {
                allow(spec, &kv, &["type", "lo", "hi", "n", "c"])?;
                KernelConfig {
                    kind: kv.get("type").ok_or_else(|| spec_err(spec, "missing `type`"))?.to_string(),
                    lo: take(spec, &kv, "lo")?,
                    hi: take(spec, &kv, "hi")?,
                    n: take(spec, &kv, "n")?,
                    c: take(spec, &kv, "c")?,
                }
            };
            let kernel = cfg.to_kernel().map_err(|e| spec_err(spec, e.to_string()))?;
            Ok(FunctionalHandle::integral(kernel))
        }
        other => Err(spec_err(spec, format!("unknown functional `{other}`"))),
    }
}

/// A parsed sample spec.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSpec {
    Halton { count: usize, radius: f64, seed: Option<u64> },
    Csv(PathBuf),
}

/// `halton:count=64,radius=2,seed=7` or `csv:<path>`.
pub fn parse_sample_spec(spec: &str) -> Result<SampleSpec, ConfigError> {
    let trimmed = spec.trim();
    if let Some(path) = trimmed.strip_prefix("csv:") {
        if path.is_empty() {
            return Err(spec_err(spec, "missing path"));
        }
        return Ok(SampleSpec::Csv(PathBuf::from(path)));
    }
    let (head, kv) = split_spec(trimmed)?;
    if head != "halton" {
        return Err(spec_err(spec, format!("unknown sampler `{head}`")));
    }
    allow(spec, &kv, &["count", "radius", "seed"])?;
    let count = take(spec, &kv, "count")?.unwrap_or(64);
    let radius: f64 = take(spec, &kv, "radius")?.unwrap_or(1.0);
    if count == 0 || count > 1_000_000 {
        return Err(spec_err(spec, "count must lie in 1..=1000000"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(spec_err(spec, "radius must be positive"));
    }
    Ok(SampleSpec::Halton {
        count,
        radius,
        seed: take(spec, &kv, "seed")?,
    })
}

/// Resolves a sample spec on `space`; `seed` is used when the spec has none.
pub fn parse_samples(spec: &str, space: &FiniteSpace, seed: u64) -> Result<SampleSet, ConfigError> {
    match parse_sample_spec(spec)? {
        SampleSpec::Halton { count, radius, seed: s } => {
            SampleSet::halton(space, count, radius, s.unwrap_or(seed)).map_err(|e| spec_err(spec, e.to_string()))
        }
        SampleSpec::Csv(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            let rows = parse_csv_vectors(&text, Some(space.dimension()))?;
            SampleSet::new(rows, space).map_err(|e| spec_err(spec, e.to_string()))
        }
    }
}

fn parse_cell(cell: &str) -> Option<C64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    cell.parse::<f64>()
        .ok()
        .map(|v| C64::new(v, 0.0))
        .or_else(|| C64::from_str(cell).ok())
        .filter(|z| z.re.is_finite() && z.im.is_finite())
}

/// One vector per row; cells are real or complex (`1+2i`). A first row that
/// does not parse is taken as a header.
pub fn parse_csv_vectors(text: &str, dimension: Option<usize>) -> Result<Vec<Vector>, ConfigError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out: Vec<Vector> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ConfigError::Csv {
            row: row + 1,
            reason: e.to_string(),
        })?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let cells: Option<Vec<C64>> = record.iter().map(parse_cell).collect();
        let Some(v) = cells else {
            if row == 0 {
                continue;
            }
            return Err(ConfigError::Csv {
                row: row + 1,
                reason: "cell is not a number".into(),
            });
        };
        let want = dimension.or_else(|| out.first().map(Vec::len)).unwrap_or(v.len());
        if v.len() != want {
            return Err(ConfigError::Csv {
                row: row + 1,
                reason: format!("expected {want} cells, found {}", v.len()),
            });
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distrib::FunctionalTag;

    #[test]
    fn default_config_roundtrips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_metric_base() {
        let err = RunConfig::from_toml("[metric]\na = 0.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "metric.a"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(matches!(RunConfig::from_toml("sed = 1\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::from_toml("[space]\ndim = 3\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
seed = 7
[space]
dimension = 3
norm = "weighted"
weights = [1.0, 2.0, 0.5]
[kernels.box]
type = "indicator"
lo = 0.0
hi = 0.5
[[probes.bumps]]
center = [0.2]
radius = 0.5
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.space.to_space().unwrap().norm_type(), &NormType::Weighted(vec![1.0, 2.0, 0.5]));
        assert_eq!(cfg.probes.bumps[0].amplitude, 1.0);
        let f = parse_functional("kernel:name=box", &cfg.kernels).unwrap();
        assert!(matches!(f.tag(), FunctionalTag::Integral { .. }));
    }

    #[test]
    fn functional_specs() {
        let none = BTreeMap::new();
        assert!(matches!(parse_functional("delta:c=0.5", &none).unwrap().tag(), FunctionalTag::Delta { c } if c == &vec![0.5]));
        assert!(matches!(parse_functional("delta:c=0.5;-1", &none).unwrap().tag(), FunctionalTag::Delta { c } if c.len() == 2));
        assert!(matches!(parse_functional("dderiv:k=2", &none).unwrap().tag(), FunctionalTag::DerivDelta { k } if k == &vec![2]));
        assert!(parse_functional("kernel:type=indicator,lo=0,hi=0.25", &none).is_ok());
        assert!(parse_functional("kernel:type=ramp,n=4,c=0", &none).is_ok());
        assert!(matches!(parse_functional("zero", &none).unwrap().tag(), FunctionalTag::Zero));
        for bad in ["", "delta:c=x", "dderiv", "kernel:type=bogus,lo=0,hi=1", "kernel:name=nope", "delta:c=1,c=2", "zero:x=1", "delta:q"] {
            assert!(parse_functional(bad, &none).is_err(), "{bad}");
        }
    }

    #[test]
    fn sample_specs() {
        assert_eq!(
            parse_sample_spec("halton:count=8,radius=2,seed=3").unwrap(),
            SampleSpec::Halton {
                count: 8,
                radius: 2.0,
                seed: Some(3)
            }
        );
        assert_eq!(parse_sample_spec("csv:pts.csv").unwrap(), SampleSpec::Csv("pts.csv".into()));
        for bad in ["halton:count=0", "halton:radius=-1", "sobol:count=3", "csv:", "halton:count=3,foo=1"] {
            assert!(parse_sample_spec(bad).is_err(), "{bad}");
        }
        let sp = FiniteSpace::real(2, NormType::L2);
        let a = parse_samples("halton:count=5", &sp, 11).unwrap();
        let b = parse_samples("halton:count=5,seed=11", &sp, 0).unwrap();
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn csv_vectors() {
        let rows = parse_csv_vectors("x,y\n1, 2\n0.5,1+2i\n\n", None).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][1], C64::new(1.0, 2.0));
        assert!(matches!(parse_csv_vectors("1,2\n3\n", None), Err(ConfigError::Csv { row: 2, .. })));
        assert!(matches!(parse_csv_vectors("1,2\na,b\n", None), Err(ConfigError::Csv { row: 2, .. })));
        assert!(matches!(parse_csv_vectors("1,2,3\n", Some(2)), Err(ConfigError::Csv { .. })));
        assert!(parse_csv_vectors("1,2\n1,nan\n", None).is_err());
        assert!(parse_csv_vectors("1,nan\n", None).unwrap().is_empty());
    }
}
