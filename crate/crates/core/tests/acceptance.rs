//! The fifteen acceptance checks under the default configuration.
//!
//! Prints one PASS/FAIL line per check, then asserts every check passed.

use opnorm::config::RunConfig;
use opnorm::suite::{run_suite, CHECK_COUNT};
use opnorm::tolerance::Tolerances;

#[test]
fn acceptance() {
    // pinned, independent of any default changes
    let cfg = RunConfig {
        seed: 20240611,
        tolerances: Tolerances { exact: 1e-12, quadrature: 1e-6 },
        ..RunConfig::default()
    };
    let report = run_suite(&cfg).expect("default config is valid");
    assert_eq!(report.checks.len(), CHECK_COUNT as usize);
    for line in report.summary_lines() {
        println!("{line}");
    }
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        println!("check {} evidence: {}", c.id, serde_json::to_string_pretty(&c.evidence).unwrap());
    }
    println!("total {:.0} ms", report.timing_ms["total"]);
    assert!(failed.is_empty(), "failing checks: {:?}", failed.iter().map(|c| c.id).collect::<Vec<_>>());
}
