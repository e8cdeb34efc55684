use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use opnorm::config::{parse_functional, parse_samples, ConfigError, RunConfig};
use opnorm::contraction::{uniform_boundedness_harness, FamilyHandle};
use opnorm::distrib::functional_norm;
use opnorm::expr::parse_operator;
use opnorm::extension::{
    check_pairwise_inequality, extend_complex, extend_one_point, extend_over_set, extend_posneg, extend_via_linear,
    hilbert_step, HilbertExtensionState, LinearFormExtension, PairMode, PartialFunctional, Wrapper,
};
use opnorm::fourier::{
    check_l1_c0_bound, fourier_transform, frequency_grid, plancherel_check, schwartz_fourier_bounded, IntegrableFunction,
    SpectralGrid,
};
use opnorm::metricmaps::{
    completeness_harness, metric_d, norm_structure_check, star_multiply, unit_element, AlgebraElement, CodomainMetric,
    MappingHandle, MappingMetric,
};
use opnorm::opspace::{analytic_linear_norm, estimate_norm, norm_equivalence_report, NormKind, OperatorHandle};
use opnorm::spaces::{FiniteSpace, InnerProductSpace, Vector};
use opnorm::suite::{run_selected, CheckReport, SuiteReport, Table, CHECK_COUNT};
use opnorm::testfn::TestFunction;
use opnorm::tolerance::le_tol;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "opnorm", version, about = "Sampled norms, extensions and distribution bounds for nonlinear operators")]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report.json and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    tol_exact: Option<f64>,
    #[arg(long, global = true)]
    tol_quad: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the norm of the configured operator.
    Norm {
        /// p, pstar, q:s, qstar:s or pk:k; overrides operator.kind.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Uniform boundedness harness over the configured family.
    Ubt,
    /// Extend the configured partial functional.
    Extend {
        #[arg(long, value_enum, default_value_t = ExtendMode::Set)]
        mode: ExtendMode,
        /// Check the pairwise inequality on distinct pairs only, or on all pairs.
        #[arg(long, value_enum, default_value_t = Pairs::Strict)]
        pairs: Pairs,
    },
    /// Metric, algebra and completeness checks on mapping spaces.
    Bd {
        #[arg(value_enum)]
        check: BdCheck,
    },
    /// Norm of a functional over the configured probes, e.g. `delta:c=0.5`.
    Distrib {
        #[arg(long)]
        functional: String,
    },
    /// Fourier transform checks.
    Fourier {
        #[arg(long, value_enum)]
        check: FourierCheck,
    },
    /// The acceptance battery.
    Suite {
        /// Comma-separated check ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<u8>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtendMode {
    OnePoint,
    Set,
    Posneg,
    Complex,
    Hilbert,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairs {
    Strict,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BdCheck {
    Metric,
    Algebra,
    Complete,
}

#[derive(Clone, Copy, ValueEnum)]
enum FourierCheck {
    L1c0,
    Plancherel,
    Schwartz,
}

enum CliError {
    Config(String),
    Run(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol_exact {
        cfg.tolerances.exact = t;
    }
    if let Some(t) = cli.tol_quad {
        cfg.tolerances.quadrature = t;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check(id: u8, name: &str, passed: bool, evidence: Value) -> CheckReport {
    CheckReport {
        id,
        name: name.into(),
        passed,
        evidence,
        tables: Vec::new(),
    }
}

fn table(name: &str, csv: String) -> Table {
    Table { name: name.into(), csv }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn cmd_norm(cfg: &RunConfig, kind: Option<&str>) -> Result<Vec<CheckReport>, CliError> {
    let space = cfg.space.to_space()?;
    let f = parse_operator(&cfg.operator.expr, &space, None).map_err(config_err)?;
    let kind: NormKind = kind.unwrap_or(&cfg.operator.kind).parse().map_err(config_err)?;
    let samples = parse_samples(&cfg.operator.samples, &space, cfg.seed)?;
    let est = estimate_norm(&f, kind, &samples).map_err(run_err)?;
    let eq = norm_equivalence_report(&f, &samples, cfg.tolerances.exact).map_err(run_err)?;
    let mut out = vec![
        check(1, "estimate", est.value.is_finite(), json!({ "operator": cfg.operator.expr, "estimate": to_json(&est) })),
        check(2, "p <= p* <= 2p", eq.holds, to_json(&eq)),
    ];
    if let Some(exact) = analytic_linear_norm(&f) {
        let sampled = estimate_norm(&f, NormKind::P, &samples).map_err(run_err)?;
        out.push(check(
            3,
            "sampled <= analytic",
            le_tol(sampled.value, exact.value, cfg.tolerances.exact),
            json!({ "sampled": to_json(&sampled), "analytic": to_json(&exact) }),
        ));
    }
    Ok(out)
}

fn parse_family(cfg: &RunConfig, space: &FiniteSpace) -> Result<Vec<OperatorHandle>, CliError> {
    cfg.family
        .members
        .iter()
        .map(|m| parse_operator(m, space, None).map_err(config_err))
        .collect()
}

fn cmd_ubt(cfg: &RunConfig) -> Result<Vec<CheckReport>, CliError> {
    let space = cfg.space.to_space()?;
    let samples = parse_samples(&cfg.operator.samples, &space, cfg.seed)?;
    let family = FamilyHandle::new(parse_family(cfg, &space)?).map_err(config_err)?;
    let r = uniform_boundedness_harness(&family, &samples).map_err(run_err)?;
    let finite = r.pointwise_bounds.iter().all(|c| c.is_finite());
    let rows: String = std::iter::once("sample,c_x\n".to_string())
        .chain(r.pointwise_bounds.iter().enumerate().map(|(i, c)| format!("{i},{c}\n")))
        .collect();
    let mut c = check(1, "pointwise bounds finite", finite, json!({ "members": cfg.family.members, "report": to_json(&r) }));
    c.tables.push(table("pointwise_bounds", rows));
    Ok(vec![c])
}

fn steps_csv(f: &PartialFunctional) -> String {
    let mut s = String::from("point,c,value\n");
    for step in f.steps() {
        let p: Vec<String> = step.point.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("\"{}\",{},{}\n", p.join(";"), step.c, step.value));
    }
    s
}

fn cmd_extend(cfg: &RunConfig, mode: ExtendMode, pairs: Pairs) -> Result<Vec<CheckReport>, CliError> {
    let e = &cfg.extend;
    let tol = cfg.tolerances.exact;
    let f = PartialFunctional::new(e.points.clone(), e.values.clone()).map_err(config_err)?;
    let dim = f.dimension().ok_or_else(|| config_err("extend.points is empty"))?;
    let p = e.dominating(dim)?;
    let pair_mode = match pairs {
        Pairs::Strict => PairMode::StrictPairs,
        Pairs::All => PairMode::AllPairs,
    };
    let pairwise = |g: &PartialFunctional, id: u8, label: &str| {
        let v = check_pairwise_inequality(g, &p, pair_mode, tol);
        let mut c = check(id, label, v.holds, json!({ "functional": to_json(g), "pairs": to_json(&v) }));
        c.tables.push(table(&format!("steps_{id}"), steps_csv(g)));
        c
    };
    match mode {
        ExtendMode::OnePoint => {
            let y = e.targets.first().ok_or_else(|| config_err("extend.targets is empty"))?;
            let g = extend_one_point(&f, &p, y, pair_mode, tol).map_err(run_err)?;
            Ok(vec![pairwise(&g, 1, "pairwise inequality after one point")])
        }
        ExtendMode::Set => {
            let g = extend_over_set(&f, &p, &e.targets, pair_mode, tol).map_err(run_err)?;
            Ok(vec![pairwise(&g, 1, "pairwise inequality after extension")])
        }
        ExtendMode::Complex => {
            let im = e
                .values_im
                .clone()
                .ok_or_else(|| config_err("extend.values_im is required for complex extension"))?;
            let f_c = PartialFunctional::new(e.points.clone(), im).map_err(config_err)?;
            let (re, imag) = extend_complex(&f, &f_c, &p, &p, &e.targets, pair_mode, tol).map_err(run_err)?;
            Ok(vec![pairwise(&re, 1, "real part pairwise inequality"), pairwise(&imag, 2, "imaginary part pairwise inequality")])
        }
        ExtendMode::Posneg => {
            let space = cfg.space.to_space()?;
            if space.dimension() != dim {
                return Err(config_err("space.dimension must match extend.points"));
            }
            let r = extend_posneg(&f, e.m1, e.m2, &space, &e.targets, tol).map_err(run_err)?;
            let mut c = check(1, "(M1+M2) bounds after extension", r.holds, to_json(&r));
            c.tables.push(table(
                "combined",
                std::iter::once("point,value\n".to_string())
                    .chain(r.combined.points().iter().zip(r.combined.values()).map(|(x, v)| {
                        let p: Vec<String> = x.iter().map(|t| t.to_string()).collect();
                        format!("\"{}\",{v}\n", p.join(";"))
                    }))
                    .collect(),
            ));
            Ok(vec![c])
        }
        ExtendMode::Hilbert => {
            let state = HilbertExtensionState::new(e.basis.clone(), e.density).map_err(config_err)?;
            let n = e.t_count.max(2);
            let grid: Vec<f64> = (0..n).map(|i| -e.t_max + 2.0 * e.t_max * i as f64 / (n - 1) as f64).collect();
            let r = hilbert_step(&state, &f, &p, &e.direction, &grid, true, tol).map_err(run_err)?;
            let cont = r.continuity.as_ref().is_some_and(|c| c.holds);
            let r_csv: String = std::iter::once("t,r\n".to_string())
                .chain(r.r_table.iter().map(|(t, v)| format!("{t},{v}\n")))
                .collect();
            let mut a = check(1, "orthogonal pairs", r.orthogonal_pairs.holds, to_json(&r.orthogonal_pairs));
            a.tables.push(table("r_table", r_csv));
            Ok(vec![a, check(2, "continuity of r", cont, to_json(&r.continuity))])
        }
        ExtendMode::Linear => {
            let n = e.basis.first().map_or(0, |b| b.len());
            if n == 0 || e.coefficients.len() > e.basis.len() {
                return Err(config_err("extend.coefficients needs one basis vector each"));
            }
            let ext = LinearFormExtension {
                subspace_basis: e.basis[..e.coefficients.len()].to_vec(),
                coefficients: e.coefficients.clone(),
                wrapper: Wrapper::Power(e.power),
            };
            let space = FiniteSpace::real(n, opnorm::spaces::NormType::L2);
            let samples = parse_samples(&cfg.operator.samples, &space, cfg.seed)?;
            let r = extend_via_linear(&ext, &InnerProductSpace::standard(n), &samples).map_err(run_err)?;
            Ok(vec![check(
                1,
                "sampled norm matches ‖T‖^k",
                r.norms_agree,
                json!({
                    "t_norm": r.t_norm,
                    "t_hat_norm": r.t_hat_norm,
                    "exact_norm": r.exact_norm,
                    "sampled_norm": r.sampled_norm,
                    "representer": r.representer,
                    "norm_kind": to_json(&r.norm_kind),
                }),
            )])
        }
    }
}

fn mapping_metric(cfg: &RunConfig) -> Result<(FiniteSpace, MappingMetric<Vector>), CliError> {
    let space = cfg.space.to_space()?;
    let samples = parse_samples(&cfg.operator.samples, &space, cfg.seed)?;
    let mm = MappingMetric::normed(&space, CodomainMetric::VectorNorm(space.clone()), &samples);
    Ok((space, mm))
}

fn cmd_bd(cfg: &RunConfig, which: BdCheck) -> Result<Vec<CheckReport>, CliError> {
    let tol = cfg.tolerances.exact;
    let (space, mm) = mapping_metric(cfg)?;
    let zero = space.zero();
    let maps: Vec<MappingHandle<Vector>> = parse_family(cfg, &space)?.iter().map(MappingHandle::from_operator).collect();
    let op = MappingHandle::from_operator(&parse_operator(&cfg.operator.expr, &space, None).map_err(config_err)?);
    let zero_map = MappingHandle::zero((space.dimension(), 1), &zero);
    match which {
        BdCheck::Metric => {
            if maps.len() < 3 {
                return Err(config_err("family.members needs at least three members"));
            }
            let d = metric_d(&op, &zero_map, &mm).map_err(run_err)?;
            let scalars: Vec<C64> = [-2.0, -0.5, 0.5, 3.0].iter().map(|&s| C64::new(s, 0.0)).collect();
            let v = norm_structure_check(&mm, &maps[0], &maps[1], &maps[2], &scalars, tol).map_err(run_err)?;
            Ok(vec![
                check(1, "d(F, 0)", d.value.is_finite(), to_json(&d)),
                check(2, "normed-space axioms", v.holds, to_json(&v)),
            ])
        }
        BdCheck::Algebra => {
            let n = space.dimension();
            let samples = parse_samples(&cfg.operator.samples, &space, cfg.seed)?;
            let sq_mm = MappingMetric::normed(&space, CodomainMetric::MatrixInf(n), &samples);
            let z = zero.clone();
            let elements: Vec<AlgebraElement<Vector>> = maps
                .iter()
                .map(|m| {
                    let m = m.clone();
                    AlgebraElement::new(MappingHandle::new(format!("diag({})", m.label()), &z, move |x: &Vector| {
                        let v = m.eval(x);
                        nalgebra::DMatrix::from_fn(n, n, |i, j| if i == j { v[(i, 0)] } else { C64::new(0.0, 0.0) })
                    }))
                })
                .collect();
            let e = unit_element(&sq_mm).map_err(run_err)?;
            let zero_sq = MappingHandle::zero((n, n), &z);
            let e_norm = metric_d(&e.mapping, &zero_sq, &sq_mm).map_err(run_err)?;
            let mut rows = String::from("i,j,d_product,d_i_times_d_j\n");
            let mut ok = true;
            for (i, a) in elements.iter().enumerate() {
                for (j, b) in elements.iter().enumerate() {
                    let ab = star_multiply(a, b, &sq_mm).map_err(run_err)?;
                    let d = |m: &MappingHandle<Vector>| metric_d(m, &zero_sq, &sq_mm).map(|v| v.value).map_err(run_err);
                    let (dab, da, db) = (d(&ab.mapping)?, d(&a.mapping)?, d(&b.mapping)?);
                    ok &= le_tol(dab, da * db, tol);
                    rows.push_str(&format!("{i},{j},{dab},{}\n", da * db));
                }
            }
            let mut c = check(1, "submultiplicativity", ok, json!({ "members": cfg.family.members }));
            c.tables.push(table("products", rows));
            Ok(vec![c, check(2, "unit norm is one", e_norm.value == 1.0, to_json(&e_norm))])
        }
        BdCheck::Complete => {
            let g = maps.first().ok_or_else(|| config_err("family.members is empty"))?;
            let seq: Vec<_> = (0..40).map(|k| op.add(&g.scale(C64::new(2f64.powi(-k), 0.0), &zero), &zero)).collect();
            let v = completeness_harness(&seq, &op, &mm).map_err(run_err)?;
            let rows: String = std::iter::once("n,distance\n".to_string())
                .chain(v.distances_to_limit.iter().enumerate().map(|(i, d)| format!("{i},{d}\n")))
                .collect();
            let mut c = check(1, "F + 2^-n G converges to F", v.converged, to_json(&v));
            c.tables.push(table("distances", rows));
            Ok(vec![c])
        }
    }
}

fn probes(cfg: &RunConfig) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out: Vec<TestFunction> = cfg.probes.bumps.iter().filter_map(|b| b.to_family().to_test_function().ok()).collect();
    for _ in 0..cfg.probes.count {
        let center = rng.random_range(-2.5..2.5);
        let radius = rng.random_range(0.15..1.5);
        let amp = C64::from_polar(rng.random_range(0.2..3.0), rng.random_range(0.0..std::f64::consts::TAU));
        if let Ok(b) = TestFunction::bump(vec![center], radius) {
            out.push(b.scale(amp));
        }
    }
    out
}

fn cmd_distrib(cfg: &RunConfig, spec: &str) -> Result<Vec<CheckReport>, CliError> {
    let f = parse_functional(spec, &cfg.kernels)?;
    let dim = match f.tag() {
        opnorm::distrib::FunctionalTag::Delta { c } => c.len(),
        opnorm::distrib::FunctionalTag::DerivDelta { k } => k.len(),
        _ => 1,
    };
    if dim != 1 {
        return Err(config_err("probes are one-dimensional; use a one-dimensional functional"));
    }
    let params = cfg.metric.to_params(1)?;
    let family = probes(cfg);
    let r = functional_norm(&f, &family, &params).map_err(run_err)?;
    let tol = match f.tag() {
        opnorm::distrib::FunctionalTag::Integral { .. } => cfg.tolerances.quadrature,
        _ => cfg.tolerances.exact,
    };
    let violations = r.violations(tol);
    let mut c = check(
        1,
        "ratios within the analytic bound",
        r.upper.is_some() && violations == 0,
        json!({
            "functional": r.functional,
            "lower": { "value": r.lower, "certificate": "sampled_lower_bound" },
            "upper": { "value": r.upper, "certificate": "analytic_upper_bound", "derivation": r.upper_chain },
            "violations": violations,
            "tolerance": tol,
            "probes": family.len(),
        }),
    );
    c.tables.push(table("ratios", r.ratio_csv()));
    Ok(vec![c])
}

fn cmd_fourier(cfg: &RunConfig, which: FourierCheck) -> Result<Vec<CheckReport>, CliError> {
    let fc = &cfg.fourier;
    match which {
        FourierCheck::L1c0 => {
            let g = IntegrableFunction::gaussian(vec![0.0], fc.sigma, C64::new(1.0, 0.0)).map_err(config_err)?;
            let grid = frequency_grid(fc.t_max, fc.t_count);
            let v = check_l1_c0_bound(&g, &grid).map_err(run_err)?;
            let mut c = check(1, "sup |f^| <= ‖f‖_1", v.holds, to_json(&v));
            if let Ok(s) = fourier_transform(&g, &grid) {
                c.tables.push(table("spectrum", s.to_csv()));
            }
            Ok(vec![c])
        }
        FourierCheck::Plancherel => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut rows = String::from("vector,relative_error,roundtrip_error\n");
            let mut ok = true;
            for i in 0..fc.vectors {
                let v: Vec<C64> = (0..fc.length)
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                let p = plancherel_check(&v, 1e-9).map_err(run_err)?;
                ok &= p.holds;
                rows.push_str(&format!("{i},{},{}\n", p.relative_error, p.roundtrip_error));
            }
            let mut c = check(1, "discrete Plancherel", ok, json!({ "vectors": fc.vectors, "length": fc.length, "tolerance": 1e-9 }));
            c.tables.push(table("plancherel", rows));
            Ok(vec![c])
        }
        FourierCheck::Schwartz => {
            let family: Vec<TestFunction> = fc
                .dilations
                .iter()
                .map(|s| TestFunction::gaussian(vec![0.0], 1.0 / s).map_err(config_err))
                .collect::<Result<_, _>>()?;
            let r = schwartz_fourier_bounded(&family, fc.k_max, &fc.schwartz_params(), &SpectralGrid::default()).map_err(run_err)?;
            Ok(vec![check(1, "amplification table finite", r.finite, to_json(&r))])
        }
    }
}

fn execute(cli: &Cli, command_echo: String) -> Result<(SuiteReport, Option<PathBuf>), CliError> {
    let cfg = load_config(cli)?;
    let report = run_command(cli, &cfg, command_echo)?;
    Ok((report, cfg.out))
}

fn run_command(cli: &Cli, cfg: &RunConfig, command_echo: String) -> Result<SuiteReport, CliError> {
    let cfg = cfg.clone();
    let started = Instant::now();
    if let Command::Suite { checks } = &cli.command {
        let ids: Vec<u8> = if checks.is_empty() { (1..=CHECK_COUNT).collect() } else { checks.clone() };
        let mut r = run_selected(&cfg, &ids)?;
        r.command = command_echo;
        return Ok(r);
    }
    let checks = match &cli.command {
        Command::Norm { kind } => cmd_norm(&cfg, kind.as_deref()),
        Command::Ubt => cmd_ubt(&cfg),
        Command::Extend { mode, pairs } => cmd_extend(&cfg, *mode, *pairs),
        Command::Bd { check } => cmd_bd(&cfg, *check),
        Command::Distrib { functional } => cmd_distrib(&cfg, functional),
        Command::Fourier { check } => cmd_fourier(&cfg, *check),
        Command::Suite { .. } => unreachable!(),
    }?;
    Ok(SuiteReport {
        command: command_echo,
        seed: cfg.seed,
        tolerances: cfg.tolerances,
        passed: checks.iter().all(|c| c.passed),
        checks,
        timing_ms: BTreeMap::from([("total".to_string(), started.elapsed().as_secs_f64() * 1e3)]),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match execute(&cli, format!("opnorm {echo}")) {
        Ok((report, out)) => {
            if let Some(dir) = out {
                if let Err(e) = report.write(&dir) {
                    eprintln!("error: cannot write report to {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            }
            for line in report.summary_lines() {
                eprintln!("{line}");
            }
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            ExitCode::from(if report.passed { 0 } else { 1 })
        }
        Err(CliError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
