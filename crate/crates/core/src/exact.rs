//! Retrospective rejection sampler for the whole path.
//!
//! Each round draws `(X_T, L_T)` from the tilted endpoint law, a Poisson
//! process of rate `M` on `[0, T] × [0, M]`, and the bridge at the Poisson
//! times. The round is accepted when every mark lies above `φ` of the path.

use crate::bridge::interpolate_skeleton;
use crate::drift::{validate_assumptions, AssumptionReport, DriftSpec};
use crate::endpoint::EndpointLaw;
use crate::error::{domain, Error, Result};
use crate::rng::RngStream;
use crate::skeleton::SkeletonPoint;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

pub const DEFAULT_ROUND_LIMIT: u64 = 1_000_000;

/// An accepted draw of `(X, L)` at the start, the accepted Poisson times, the
/// requested times and the horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skeleton {
    pub points: Vec<SkeletonPoint>,
    /// Rounds used, including the accepted one.
    pub rounds: u64,
    /// Poisson event count of every round, in order.
    pub poisson_counts: Vec<usize>,
}

impl Skeleton {
    pub fn at(&self, t: f64) -> Option<&SkeletonPoint> {
        let i = self.points.partition_point(|p| p.t < t);
        self.points.get(i).filter(|p| p.t == t)
    }

    pub fn terminal(&self) -> &SkeletonPoint {
        self.points
            .last()
            .expect("skeleton has at least two points")
    }
}

/// True iff `φ(X_τ) < ψ` at every Poisson event.
pub fn thinning_accept(d: &DriftSpec, values: &[f64], psis: &[f64]) -> bool {
    debug_assert_eq!(values.len(), psis.len());
    values.iter().zip(psis).all(|(&x, &psi)| d.phi(x) < psi)
}

fn validation_grid() -> Vec<f64> {
    (0..10_000)
        .map(|i| -20.0 + 40.0 * i as f64 / 9_999.0)
        .collect()
}

#[derive(Debug)]
pub struct ExactSimulator {
    law: EndpointLaw,
    report: Option<AssumptionReport>,
    round_limit: u64,
}

impl ExactSimulator {
    /// Validates the drift and picks the endpoint sampler from the sign of `θ`.
    pub fn new(drift: DriftSpec, x: f64, t: f64) -> Result<Self> {
        let report = validate_assumptions(&drift, &validation_grid(), x, t)?;
        let law = EndpointLaw::new(drift, x, t)?;
        Ok(Self {
            law,
            report: Some(report),
            round_limit: DEFAULT_ROUND_LIMIT,
        })
    }

    /// Uses a prepared endpoint law as is; the drift is not re-validated.
    pub fn with_law(law: EndpointLaw) -> Self {
        Self {
            law,
            report: None,
            round_limit: DEFAULT_ROUND_LIMIT,
        }
    }

    pub fn with_round_limit(mut self, limit: u64) -> Self {
        self.round_limit = limit.max(1);
        self
    }

    pub fn law(&self) -> &EndpointLaw {
        &self.law
    }

    pub fn drift(&self) -> &DriftSpec {
        self.law.drift()
    }

    pub fn report(&self) -> Option<&AssumptionReport> {
        self.report.as_ref()
    }

    pub fn horizon(&self) -> f64 {
        self.law.horizon()
    }

    fn check_times(&self, times: &[f64]) -> Result<()> {
        let t = self.horizon();
        match times.iter().find(|s| !(**s >= 0.0 && **s <= t)) {
            Some(bad) => Err(domain(format!("output time {bad} outside [0, {t}]"))),
            None => Ok(()),
        }
    }

    /// One accepted skeleton containing `times`.
    pub fn simulate_skeleton(&self, times: &[f64], rng: &mut RngStream) -> Result<Skeleton> {
        self.check_times(times)?;
        let d = self.law.drift();
        let (x, t, m) = (self.law.x(), self.horizon(), d.big_m());
        let start = SkeletonPoint::new(0.0, x, 0.0);
        let mut counts = Vec::new();
        for round in 1..=self.round_limit {
            let (b, l) = self.law.sample(rng)?;
            let end = SkeletonPoint::new(t, b, l);
            let taus = if m > 0.0 {
                crate::dist::poisson_times(m, t, rng)
            } else {
                Vec::new()
            };
            counts.push(taus.len());
            let psis: Vec<f64> = taus.iter().map(|_| m * rng.uniform()).collect();
            let filled = interpolate_skeleton(&[start, end], &taus, rng)?;
            // pick the Poisson nodes back out; T itself is never a Poisson time
            let values: Vec<f64> = filled[1..filled.len() - 1].iter().map(|p| p.x).collect();
            if values.len() != taus.len() {
                return Err(domain("duplicate Poisson times"));
            }
            if thinning_accept(d, &values, &psis) {
                let points = interpolate_skeleton(&filled, times, rng)?;
                return Ok(Skeleton {
                    points,
                    rounds: round,
                    poisson_counts: counts,
                });
            }
        }
        Err(Error::RoundLimit {
            rounds: self.round_limit,
            bound: 1.0 / self.round_limit as f64,
        })
    }

    /// `n` independent skeletons; path `i` uses stream `i` of `seed`, so the
    /// result does not depend on the number of threads.
    pub fn sample_paths(
        &self,
        times: &[f64],
        n: usize,
        seed: u64,
        threads: Option<usize>,
    ) -> Result<Vec<Skeleton>> {
        self.check_times(times)?;
        let run = || {
            (0..n)
                .into_par_iter()
                .map(|i| self.simulate_skeleton(times, &mut RngStream::new(seed, i as u64)))
                .collect::<Result<Vec<_>>>()
        };
        match threads {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| domain(format!("cannot build thread pool: {e}")))?
                .install(run),
            None => run(),
        }
    }
}

/// One skeleton of the diffusion with drift `d` started at `x`.
pub fn simulate_skeleton(
    d: &DriftSpec,
    x: f64,
    t: f64,
    times: &[f64],
    rng: &mut RngStream,
) -> Result<Skeleton> {
    ExactSimulator::new(d.clone(), x, t)?.simulate_skeleton(times, rng)
}

pub const CSV_HEADER: &str = "path_id,t,x,l";

/// Writes skeletons as `path_id,t,x,l` rows. Floats use the shortest
/// representation that round-trips.
pub fn write_csv<W: Write>(out: &mut W, paths: &[Skeleton]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (id, s) in paths.iter().enumerate() {
        for p in &s.points {
            writeln!(out, "{id},{:?},{:?},{:?}", p.t, p.x, p.l)?;
        }
    }
    Ok(())
}
