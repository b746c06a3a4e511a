//! Oracles and statistical tests used to check the samplers.

pub mod euler;
pub mod kde;
pub mod levy;
pub mod oracles;
pub mod stats;

pub use oracles::{manifest_gaps, registry, SuiteConfig, TestReport};

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub n: usize,
    pub filter: Option<String>,
    /// Samplers with no registered check; must be empty.
    pub uncovered: Vec<&'static str>,
    pub reports: Vec<TestReport>,
    pub pass: bool,
}

/// Runs every registered check whose name contains `filter`.
///
/// A check that errors is recorded as a failed report instead of aborting
/// the run.
pub fn run_suite(filter: Option<&str>, cfg: &SuiteConfig) -> SuiteReport {
    let mut reports = Vec::new();
    for check in registry() {
        if filter.is_some_and(|f| !check.name.contains(f)) {
            continue;
        }
        log::info!("running {}", check.name);
        match (check.run)(cfg) {
            Ok(r) => reports.extend(r),
            Err(e) => reports.push(TestReport {
                name: check.name.to_string(),
                statistic: f64::NAN,
                threshold: f64::NAN,
                direction: "<",
                pass: false,
                detail: format!("error: {e}"),
            }),
        }
    }
    let uncovered = manifest_gaps();
    let pass = uncovered.is_empty() && reports.iter().all(|r| r.pass);
    SuiteReport {
        seed: cfg.seed,
        n: cfg.n,
        filter: filter.map(str::to_string),
        uncovered,
        reports,
        pass,
    }
}
