//! A corrupted p1 must be caught by the p1-vs-quadrature check.
//!
//! Kept in its own binary because the mutation is process-wide.

use exact_diffusion::bridge::set_p1_mutation;
use exact_diffusion::validation::{run_suite, SuiteConfig};

#[test]
fn corrupted_p1_fails_the_quadrature_check() {
    let cfg = SuiteConfig {
        seed: 5,
        n: 1_000,
        param_sets: 5,
    };
    assert!(run_suite(Some("bridge.case_weights"), &cfg).pass);

    set_p1_mutation(1.01);
    let report = run_suite(Some("bridge.case_weights"), &cfg);
    set_p1_mutation(1.0);
    assert!(!report.pass);
    let failed: Vec<&str> = report
        .reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    assert!(failed.iter().all(|n| n.ends_with(".p1")), "{failed:?}");
    assert!(!failed.is_empty());
}
