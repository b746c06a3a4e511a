//! Registered oracle checks.
//!
//! Every sampler of the bridge and endpoint layers is compared against an
//! independent reference: adaptive quadrature of its density, the Lévy
//! identity, or a closed-form law. `SAMPLERS` lists what must be covered and
//! `manifest_gaps` reports anything without a check.

use super::levy::levy_identity_oracle;
use super::stats::{chi_square, ks_one_sample, ks_two_sample};
use crate::bridge::{
    compute_case_weights, interpolate_skeleton, sample_b_zero_increment,
    sample_bridge_point_with_case, sample_l_given_endpoints, sample_xi1, sample_xi2, sample_xi3,
    xi1_density, xi2_density, xi3_density, zero_increment_density, BridgeCase, BridgeQuery,
    EndpointPair,
};
use crate::dist::{log_atom_density, log_joint_density, log_tilted_l_tail};
use crate::drift::{make_piecewise_constant, make_piecewise_sine, DriftSpec};
use crate::endpoint::{
    sample_endpoint_theta_negative, sample_endpoint_theta_positive, EndpointLaw,
};
use crate::error::Result;
use crate::exact::ExactSimulator;
use crate::quadrature::{integrate, integrate_pieces, quadrature_cdf};
use crate::rng::RngStream;
use crate::skeleton::SkeletonPoint;
use crate::special::{log_diff_exp, normal_density, std_normal_cdf};
use serde::Serialize;
use std::f64::consts::PI;

/// Samplers and evaluators that must each have at least one check.
pub const SAMPLERS: &[&str] = &[
    "sample_l_given_endpoints",
    "sample_b_zero_increment",
    "compute_case_weights",
    "sample_xi1",
    "sample_xi3",
    "sample_xi2",
    "sample_bridge_point",
    "interpolate_skeleton",
    "levy_identity_oracle",
    "sample_xt_from_h",
    "sample_endpoint_theta_positive",
    "sample_endpoint_theta_negative",
    "simulate_skeleton",
];

/// KS statistic bound at `n = 10⁵`, scaled as `1/√n` for other sizes.
pub const KS_BOUND_1E5: f64 = 0.0061;
pub const P_VALUE_FLOOR: f64 = 0.001;
pub const Z_BOUND: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    /// `"<"` when the statistic must stay below the threshold, `">"` otherwise.
    pub direction: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl TestReport {
    fn below(name: String, statistic: f64, threshold: f64, detail: String) -> Self {
        Self {
            name,
            statistic,
            threshold,
            direction: "<",
            pass: statistic < threshold,
            detail,
        }
    }

    fn above(name: String, statistic: f64, threshold: f64, detail: String) -> Self {
        Self {
            name,
            statistic,
            threshold,
            direction: ">",
            pass: statistic > threshold,
            detail,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Draws per statistical comparison.
    pub n: usize,
    /// Randomised parameter sets per conditional-law sampler.
    pub param_sets: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            n: 100_000,
            param_sets: 5,
        }
    }
}

pub struct OracleCheck {
    pub name: &'static str,
    pub covers: &'static [&'static str],
    pub run: fn(&SuiteConfig) -> Result<Vec<TestReport>>,
}

pub fn ks_bound(n: usize) -> f64 {
    KS_BOUND_1E5 * (1e5 / n as f64).sqrt()
}

/// KS of `samples` against the quadrature CDF of an unnormalised density.
fn ks_vs_density<F: Fn(f64) -> f64>(
    name: String,
    samples: &[f64],
    density: F,
    support: (f64, f64),
    breakpoints: &[f64],
) -> Result<TestReport> {
    let lo_s = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_s = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi_s - lo_s).max(1e-3);
    let lo = (lo_s - span).max(support.0);
    let hi = (hi_s + span).min(support.1);
    let cdf = quadrature_cdf(density, lo, hi, breakpoints, 400, 1e-12)?;
    let t = ks_one_sample(samples, |x| cdf.cdf(x));
    let bound = ks_bound(samples.len());
    Ok(TestReport::below(
        name,
        t.statistic,
        bound,
        format!("p = {:.4}", t.p_value),
    ))
}

fn z_report(name: String, hits: usize, n: usize, p: f64) -> TestReport {
    let nf = n as f64;
    let p = p.clamp(0.0, 1.0);
    let sd = (nf * p * (1.0 - p)).sqrt();
    let gap = (hits as f64 - nf * p).abs();
    // a degenerate probability must be matched exactly
    let z = if sd > 0.0 {
        gap / sd
    } else if gap < 0.5 {
        0.0
    } else {
        f64::INFINITY
    };
    TestReport::below(
        name,
        z,
        Z_BOUND,
        format!("observed {hits}/{n}, expected p = {p:.6}"),
    )
}

fn chi_report(name: String, observed: &[u64], probs: &[f64]) -> TestReport {
    let r = chi_square(observed, probs);
    TestReport::above(
        name,
        r.p_value,
        P_VALUE_FLOOR,
        format!(
            "chi2 = {:.3}, df = {}, cells = {}",
            r.statistic, r.df, r.cells
        ),
    )
}

fn params_rng(cfg: &SuiteConfig, stream: u64) -> RngStream {
    RngStream::new(cfg.seed, 1 << 40 | stream)
}

fn draw_rng(cfg: &SuiteConfig, stream: u64) -> RngStream {
    RngStream::new(cfg.seed, 2 << 40 | stream)
}

fn log_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    10f64.powf(lo + (hi - lo) * rng.uniform())
}

/// Random bridge with `l1 < l3` whose selected case has mass at least `floor`.
fn random_bridge<F: Fn(&BridgeQuery) -> f64>(
    rng: &mut RngStream,
    mass: F,
    floor: f64,
) -> BridgeQuery {
    loop {
        let d1 = log_uniform(rng, -1.5, 0.5);
        let d2 = log_uniform(rng, -1.5, 0.5);
        let l1 = rng.uniform();
        let q = BridgeQuery {
            s1: 0.0,
            s2: d1,
            s3: d1 + d2,
            b1: -2.0 + 4.0 * rng.uniform(),
            b3: -2.0 + 4.0 * rng.uniform(),
            l1,
            l3: l1 + 0.05 + 1.45 * rng.uniform(),
        };
        if mass(&q) >= floor {
            return q;
        }
    }
}

fn full_line() -> (f64, f64) {
    (f64::NEG_INFINITY, f64::INFINITY)
}

fn check_l_given_endpoints(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut prng = params_rng(cfg, 1);
    for k in 0..cfg.param_sets {
        let ds = log_uniform(&mut prng, -1.0, 0.5);
        let e = EndpointPair {
            s1: 0.0,
            s2: ds,
            b1: -1.5 + 3.0 * prng.uniform(),
            b2: -1.5 + 3.0 * prng.uniform(),
            l1: prng.uniform(),
        };
        let mut rng = draw_rng(cfg, 100 + k as u64);
        let draws: Vec<f64> = (0..cfg.n)
            .map(|_| sample_l_given_endpoints(&e, &mut rng))
            .collect::<Result<_>>()?;
        // the flat event has probability ∫ f*/φ, here taken by quadrature of the
        // continuous part: P(flat) = 1 - ∫ f(b2, l) dl / φ(b2)
        let cont = integrate(
            |l| log_joint_density(e.b1, ds, e.b2, l).exp(),
            0.0,
            f64::INFINITY,
            1e-13,
        )?
        .value
            / normal_density(e.b2, e.b1, ds);
        let flat = draws.iter().filter(|&&l| l == e.l1).count();
        let name = format!("bridge.l_given_endpoints[{k}]");
        out.push(z_report(
            format!("{name}.flat_probability"),
            flat,
            cfg.n,
            1.0 - cont,
        ));
        let rises: Vec<f64> = draws
            .iter()
            .filter(|&&l| l > e.l1)
            .map(|l| l - e.l1)
            .collect();
        if rises.len() > 100 {
            out.push(ks_vs_density(
                format!("{name}.increment_ks"),
                &rises,
                |l| log_joint_density(e.b1, ds, e.b2, l).exp(),
                (0.0, f64::INFINITY),
                &[],
            )?);
        }
    }
    Ok(out)
}

fn check_zero_increment(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut prng = params_rng(cfg, 2);
    for k in 0..cfg.param_sets {
        let sign = if prng.coin() { 1.0 } else { -1.0 };
        let d1 = log_uniform(&mut prng, -1.5, 0.5);
        let d2 = log_uniform(&mut prng, -1.5, 0.5);
        let l = prng.uniform();
        let q = BridgeQuery {
            s1: 0.0,
            s2: d1,
            s3: d1 + d2,
            b1: sign * (0.02 + 2.0 * prng.uniform()),
            b3: sign * (0.02 + 2.0 * prng.uniform()),
            l1: l,
            l3: l,
        };
        let mut rng = draw_rng(cfg, 200 + k as u64);
        let draws: Vec<f64> = (0..cfg.n)
            .map(|_| sample_b_zero_increment(&q, &mut rng))
            .collect::<Result<_>>()?;
        // the printed density with its constant dropped; quadrature normalises
        let (d1, d2) = (q.s2 - q.s1, q.s3 - q.s2);
        let mu = (q.b1 * d2 + q.b3 * d1) / (d1 + d2);
        let s2 = d1 * d2 / (d1 + d2);
        let density = |b: f64| {
            if b * q.b1 <= 0.0 {
                return 0.0;
            }
            normal_density(b, mu, s2)
                * (1.0 - (-2.0 * b * q.b1 / d1).exp())
                * (1.0 - (-2.0 * q.b3 * b / d2).exp())
        };
        let support = if sign > 0.0 {
            (0.0, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, 0.0)
        };
        out.push(ks_vs_density(
            format!("bridge.zero_increment[{k}].ks"),
            &draws,
            density,
            support,
            &[],
        )?);
        // and the library's normalised evaluator must agree with it
        let mass = integrate(
            |b| zero_increment_density(b, &q).unwrap_or(f64::NAN),
            support.0,
            support.1,
            1e-12,
        )?;
        out.push(TestReport::below(
            format!("bridge.zero_increment[{k}].normalisation"),
            (mass.value - 1.0).abs(),
            1e-8,
            String::new(),
        ));
    }
    Ok(out)
}

fn check_case_weights(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut prng = params_rng(cfg, 3);
    for k in 0..cfg.param_sets.max(5) {
        let q = random_bridge(&mut prng, |_| 1.0, 0.0);
        let w = compute_case_weights(&q)?;
        let p1 = integrate(
            |z| xi1_density(z, &q),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-11,
        )?
        .value;
        let p3 = integrate(
            |z| xi3_density(z, &q),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-11,
        )?
        .value;
        let detail = format!("{q:?}");
        out.push(TestReport::below(
            format!("bridge.case_weights[{k}].p1"),
            (p1 - w.p1).abs(),
            1e-6,
            detail.clone(),
        ));
        out.push(TestReport::below(
            format!("bridge.case_weights[{k}].p3"),
            (p3 - w.p3).abs(),
            1e-6,
            detail.clone(),
        ));
        out.push(TestReport::below(
            format!("bridge.case_weights[{k}].sum"),
            (w.p1 + w.p2 + w.p3 - 1.0).abs(),
            1e-10,
            detail,
        ));
    }
    Ok(out)
}

fn check_flat_side(cfg: &SuiteConfig, right: bool) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut prng = params_rng(cfg, if right { 5 } else { 4 });
    let label = if right { "xi3" } else { "xi1" };
    for k in 0..cfg.param_sets {
        let q = random_bridge(
            &mut prng,
            |q| {
                compute_case_weights(q)
                    .map(|w| if right { w.p3 } else { w.p1 })
                    .unwrap_or(0.0)
            },
            0.05,
        );
        let mut rng = draw_rng(cfg, if right { 500 } else { 400 } + k as u64);
        let draws: Vec<f64> = (0..cfg.n)
            .map(|_| {
                if right {
                    sample_xi3(&q, &mut rng)
                } else {
                    sample_xi1(&q, &mut rng)
                }
            })
            .collect::<Result<_>>()?;
        let anchor = if right { q.b3 } else { q.b1 };
        let support = if anchor > 0.0 {
            (0.0, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, 0.0)
        };
        let report = if right {
            ks_vs_density(
                format!("bridge.{label}[{k}].ks"),
                &draws,
                |z| xi3_density(z, &q),
                support,
                &[],
            )?
        } else {
            ks_vs_density(
                format!("bridge.{label}[{k}].ks"),
                &draws,
                |z| xi1_density(z, &q),
                support,
                &[],
            )?
        };
        out.push(report);
    }
    Ok(out)
}

fn check_xi1(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    check_flat_side(cfg, false)
}

fn check_xi3(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    check_flat_side(cfg, true)
}

/// Quantile edges of `values` splitting them into `bins` groups.
fn quantile_edges(values: &mut [f64], bins: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..bins).map(|i| values[i * values.len() / bins]).collect();
    edges.dedup();
    edges
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v)
}

fn with_ends(inner: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    std::iter::once(lo)
        .chain(inner.iter().copied())
        .chain(std::iter::once(hi))
        .collect()
}

fn check_xi2(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut prng = params_rng(cfg, 6);
    for k in 0..cfg.param_sets {
        let q = random_bridge(
            &mut prng,
            |q| compute_case_weights(q).map(|w| w.p2).unwrap_or(0.0),
            0.05,
        );
        let mut rng = draw_rng(cfg, 600 + k as u64);
        let draws: Vec<(f64, f64)> = (0..cfg.n)
            .map(|_| sample_xi2(&q, &mut rng))
            .collect::<Result<_>>()?;
        let name = format!("bridge.xi2[{k}]");
        let positive = draws.iter().filter(|d| d.0 > 0.0).count();
        let mut sign = z_report(format!("{name}.sign"), positive, cfg.n, 0.5);
        sign.detail = format!("{}; {q:?}", sign.detail);
        out.push(sign);

        let inner_l = |b: f64| {
            integrate(|l| xi2_density(b, l, &q), q.l1, q.l3, 1e-13)
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
        };
        let bs: Vec<f64> = draws.iter().map(|d| d.0).collect();
        out.push(ks_vs_density(
            format!("{name}.b_ks"),
            &bs,
            inner_l,
            full_line(),
            &[0.0],
        )?);
        let inner_b = |l: f64| {
            2.0 * integrate(|b| xi2_density(b, l, &q), 0.0, f64::INFINITY, 1e-13)
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
        };
        let ls: Vec<f64> = draws.iter().map(|d| d.1).collect();
        out.push(ks_vs_density(
            format!("{name}.l_ks"),
            &ls,
            inner_b,
            (q.l1, q.l3),
            &[],
        )?);

        // 10 × 10 cells of (|b|, l) from a pilot sample
        let mut pilot_rng = draw_rng(cfg, 650 + k as u64);
        let pilot: Vec<(f64, f64)> = (0..20_000)
            .map(|_| sample_xi2(&q, &mut pilot_rng))
            .collect::<Result<_>>()?;
        let eb = quantile_edges(&mut pilot.iter().map(|d| d.0.abs()).collect::<Vec<_>>(), 10);
        let el = quantile_edges(&mut pilot.iter().map(|d| d.1).collect::<Vec<_>>(), 10);
        let mut counts = vec![0u64; (eb.len() + 1) * (el.len() + 1)];
        for &(b, l) in &draws {
            counts[bin_of(&eb, b.abs()) * (el.len() + 1) + bin_of(&el, l)] += 1;
        }
        let be = with_ends(&eb, 0.0, f64::INFINITY);
        let le = with_ends(&el, q.l1, q.l3);
        let mut probs = Vec::with_capacity(counts.len());
        for bw in be.windows(2) {
            for lw in le.windows(2) {
                let cell = integrate(
                    |b| {
                        integrate(|l| xi2_density(b, l, &q), lw[0], lw[1], 1e-14)
                            .map(|r| r.value)
                            .unwrap_or(f64::NAN)
                    },
                    bw[0],
                    bw[1],
                    1e-12,
                )?;
                probs.push(2.0 * cell.value);
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        out.push(chi_report(format!("{name}.joint_chi2"), &counts, &probs));
    }
    Ok(out)
}

/// Density of `B_{s2}` across all three cases.
fn bridge_marginal(q: &BridgeQuery, b: f64) -> f64 {
    let interior = integrate(|l| xi2_density(b, l, q), q.l1, q.l3, 1e-13)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    xi1_density(b, q) + xi3_density(b, q) + interior
}

fn check_bridge_point(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut prng = params_rng(cfg, 7);
    for k in 0..cfg.param_sets {
        let q = random_bridge(&mut prng, |_| 1.0, 0.0);
        let mut rng = draw_rng(cfg, 700 + k as u64);
        let mut cases = [0u64; 3];
        let mut bs = Vec::with_capacity(cfg.n);
        for _ in 0..cfg.n {
            let (b, _, case) = sample_bridge_point_with_case(&q, &mut rng)?;
            let i = match case {
                BridgeCase::StaysLeft => 0,
                BridgeCase::Interior => 1,
                BridgeCase::StaysRight => 2,
                BridgeCase::Constant => unreachable!("l1 < l3"),
            };
            cases[i] += 1;
            bs.push(b);
        }
        // case probabilities from quadrature, not from the closed forms
        let p1 = integrate(
            |z| xi1_density(z, &q),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-11,
        )?
        .value;
        let p3 = integrate(
            |z| xi3_density(z, &q),
            f64::NEG_INFINITY,
            f64::INFINITY,
            1e-11,
        )?
        .value;
        let name = format!("bridge.point[{k}]");
        out.push(chi_report(
            format!("{name}.case_frequencies"),
            &cases,
            &[p1, 1.0 - p1 - p3, p3],
        ));
        out.push(ks_vs_density(
            format!("{name}.b_ks"),
            &bs,
            |b| bridge_marginal(&q, b),
            full_line(),
            &[0.0],
        )?);
    }
    Ok(out)
}

fn check_interpolate(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let (x, t, b, l) = (0.3, 1.0, -0.4, 0.5);
    let pts = [SkeletonPoint::new(0.0, x, 0.0), SkeletonPoint::new(t, b, l)];
    let mut rng = draw_rng(cfg, 800);
    let mut mids = Vec::with_capacity(cfg.n);
    let mut monotone = true;
    for _ in 0..cfg.n {
        let s = interpolate_skeleton(&pts, &[0.25, 0.5, 0.75], &mut rng)?;
        monotone &= s.windows(2).all(|w| w[0].l <= w[1].l && w[0].t < w[1].t);
        mids.push(s[2].x);
    }
    let q = BridgeQuery {
        s1: 0.0,
        s2: 0.5,
        s3: t,
        b1: x,
        b3: b,
        l1: 0.0,
        l3: l,
    };
    Ok(vec![
        ks_vs_density(
            "bridge.interpolate.midpoint_ks".into(),
            &mids,
            |z| bridge_marginal(&q, z),
            full_line(),
            &[0.0],
        )?,
        TestReport::below(
            "bridge.interpolate.monotone".into(),
            (!monotone) as u8 as f64,
            0.5,
            String::new(),
        ),
    ])
}

fn check_levy(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let t = 0.8;
    let mut rng = draw_rng(cfg, 900);
    let draws = levy_identity_oracle(t, cfg.n, &mut rng);
    let ls: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let st = ks_one_sample(&ls, |l| 2.0 * std_normal_cdf(l / t.sqrt()) - 1.0);
    let mut out = vec![TestReport::below(
        "levy.local_time_marginal_ks".into(),
        st.statistic,
        ks_bound(cfg.n),
        format!("p = {:.4}", st.p_value),
    )];
    out.push(joint_chi2("levy.joint_chi2", &draws, t, 0.0, cfg, 950)?);
    Ok(out)
}

/// χ² of `(|b|, l)` draws of Brownian motion from zero against `2 f_T^0`.
fn joint_chi2(
    name: &str,
    draws: &[(f64, f64)],
    t: f64,
    x: f64,
    cfg: &SuiteConfig,
    stream: u64,
) -> Result<TestReport> {
    let mut pilot_rng = draw_rng(cfg, stream);
    let pilot = levy_identity_oracle(t, 20_000, &mut pilot_rng);
    let eb = quantile_edges(&mut pilot.iter().map(|d| d.0).collect::<Vec<_>>(), 10);
    let el = quantile_edges(&mut pilot.iter().map(|d| d.1).collect::<Vec<_>>(), 10);
    let mut counts = vec![0u64; (eb.len() + 1) * (el.len() + 1)];
    for &(b, l) in draws {
        counts[bin_of(&eb, b) * (el.len() + 1) + bin_of(&el, l)] += 1;
    }
    let be = with_ends(&eb, 0.0, f64::INFINITY);
    let le = with_ends(&el, 0.0, f64::INFINITY);
    let mut probs = Vec::new();
    for bw in be.windows(2) {
        for lw in le.windows(2) {
            let cell = integrate(
                |b| 2.0 * log_l_band(x, t, b, 0.0, lw[0], lw[1]).exp(),
                bw[0],
                bw[1],
                1e-13,
            )?;
            probs.push(cell.value);
        }
    }
    Ok(chi_report(name.into(), &counts, &probs))
}

/// `ln ∫_{l0}^{l1} f_T^x(b, l) e^{-θl} dl`.
fn log_l_band(x: f64, t: f64, b: f64, theta: f64, l0: f64, l1: f64) -> f64 {
    let upper = log_tilted_l_tail(x, t, b, theta, l0);
    if l1.is_finite() {
        log_diff_exp(upper, log_tilted_l_tail(x, t, b, theta, l1))
    } else {
        upper
    }
}

fn built_in_drifts() -> Vec<(&'static str, DriftSpec)> {
    vec![
        ("pc(0.2,-0.9)", make_piecewise_constant(0.2, -0.9)),
        ("pc(0.3,0.9)", make_piecewise_constant(0.3, 0.9)),
        (
            "sine(7pi/6,pi/4)",
            make_piecewise_sine(7.0 * PI / 6.0, PI / 4.0),
        ),
    ]
}

fn check_h(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    for (i, (label, d)) in built_in_drifts().into_iter().enumerate() {
        for (j, &x) in [0.0, 0.5].iter().enumerate() {
            let law = EndpointLaw::new(d.clone(), x, 1.0)?;
            let mut rng = draw_rng(cfg, 1000 + 10 * i as u64 + j as u64);
            let draws: Vec<f64> = (0..cfg.n)
                .map(|_| law.sample_xt_from_h(&mut rng))
                .collect::<Result<_>>()?;
            let dd = d.clone();
            out.push(ks_vs_density(
                format!("endpoint.h[{label}, x={x}].ks"),
                &draws,
                move |u| (dd.antiderivative(u)).exp() * normal_density(u, x, 1.0),
                full_line(),
                &[0.0],
            )?);
        }
    }
    Ok(out)
}

/// Chi-square of endpoint draws against the tilted law on a 12 × 12 grid of
/// `(b, l)` plus 12 atom cells, and a z-test of the atom mass.
fn endpoint_reports(
    name: &str,
    law: &EndpointLaw,
    draws: &[(f64, f64)],
    pilot: &[(f64, f64)],
) -> Result<Vec<TestReport>> {
    let (x, t, theta) = (law.x(), law.horizon(), law.drift().theta());
    let d = law.drift();
    let eb = quantile_edges(&mut pilot.iter().map(|p| p.0).collect::<Vec<_>>(), 12);
    let el = quantile_edges(
        &mut pilot
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|p| p.1)
            .collect::<Vec<_>>(),
        12,
    );
    let nb = eb.len() + 1;
    let nl = el.len() + 1;
    let mut counts = vec![0u64; nb * (nl + 1)];
    for &(b, l) in draws {
        let col = if l == 0.0 { nl } else { bin_of(&el, l) };
        counts[bin_of(&eb, b) * (nl + 1) + col] += 1;
    }
    let be = with_ends(&eb, f64::NEG_INFINITY, f64::INFINITY);
    let le = with_ends(&el, 0.0, f64::INFINITY);
    let mut probs = Vec::with_capacity(counts.len());
    let mut atom_total = 0.0;
    for bw in be.windows(2) {
        let mut cuts = vec![bw[0]];
        if bw[0] < 0.0 && bw[1] > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(bw[1]);
        for lw in le.windows(2) {
            let cell = integrate_pieces(
                |b| (d.antiderivative(b) + log_l_band(x, t, b, theta, lw[0], lw[1])).exp(),
                &cuts,
                1e-12,
            )?;
            probs.push(cell.value);
        }
        let atom = integrate_pieces(
            |b| (log_atom_density(x, t, b) + d.antiderivative(b)).exp(),
            &cuts,
            1e-12,
        )?;
        atom_total += atom.value;
        probs.push(atom.value);
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let mut out = vec![chi_report(format!("{name}.joint_chi2"), &counts, &probs)];
    if x != 0.0 {
        let atoms = draws.iter().filter(|d| d.1 == 0.0).count();
        out.push(z_report(
            format!("{name}.atom_mass"),
            atoms,
            draws.len(),
            atom_total / total,
        ));
    } else {
        let atoms = draws.iter().filter(|d| d.1 == 0.0).count();
        out.push(TestReport::below(
            format!("{name}.no_atom_from_zero"),
            atoms as f64,
            0.5,
            String::new(),
        ));
    }
    Ok(out)
}

fn run_endpoint(
    cfg: &SuiteConfig,
    law: &EndpointLaw,
    stream: u64,
    sampler: fn(&EndpointLaw, &mut RngStream) -> Result<(f64, f64)>,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let mut rng = draw_rng(cfg, stream);
    let draws = (0..cfg.n)
        .map(|_| sampler(law, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut prng = draw_rng(cfg, stream + 1);
    let pilot = (0..20_000)
        .map(|_| sampler(law, &mut prng))
        .collect::<Result<Vec<_>>>()?;
    Ok((draws, pilot))
}

fn check_theta_positive(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let drifts = [built_in_drifts().remove(0), built_in_drifts().remove(2)];
    for (i, (label, d)) in drifts.into_iter().enumerate() {
        for (j, &x) in [0.0, 0.5, 1.0].iter().enumerate() {
            let law = EndpointLaw::two_step(d.clone(), x, 1.0)?;
            let (draws, pilot) = run_endpoint(
                cfg,
                &law,
                1100 + 10 * i as u64 + 2 * j as u64,
                sample_endpoint_theta_positive,
            )?;
            out.extend(endpoint_reports(
                &format!("endpoint.two_step[{label}, x={x}]"),
                &law,
                &draws,
                &pilot,
            )?);
        }
    }
    Ok(out)
}

fn check_theta_negative(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let (label, d) = built_in_drifts().remove(1);
    for (j, &x) in [0.0, 0.5, 1.0, -0.7].iter().enumerate() {
        let law = EndpointLaw::mixture(d.clone(), x, 1.0)?;
        let (draws, pilot) = run_endpoint(
            cfg,
            &law,
            1200 + 2 * j as u64,
            sample_endpoint_theta_negative,
        )?;
        out.extend(endpoint_reports(
            &format!("endpoint.mixture[{label}, x={x}]"),
            &law,
            &draws,
            &pilot,
        )?);
    }
    // the mixture also applies when θ > 0, and must agree with the two-step sampler
    let (label, d) = built_in_drifts().remove(0);
    let mix = EndpointLaw::mixture(d.clone(), 0.5, 1.0)?;
    let two = EndpointLaw::two_step(d, 0.5, 1.0)?;
    let (a, _) = run_endpoint(cfg, &mix, 1250, sample_endpoint_theta_negative)?;
    let (b, _) = run_endpoint(cfg, &two, 1252, sample_endpoint_theta_positive)?;
    let ab: Vec<f64> = a.iter().map(|p| p.0).collect();
    let bb: Vec<f64> = b.iter().map(|p| p.0).collect();
    let ks = ks_two_sample(&ab, &bb);
    out.push(TestReport::above(
        format!("endpoint.cross_check[{label}, x=0.5].b_ks2"),
        ks.p_value,
        P_VALUE_FLOOR,
        format!("D = {:.5}", ks.statistic),
    ));
    Ok(out)
}

fn check_brownian_endpoint(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    // with α ≡ 0 the endpoint law is that of (B_T, L_T): compare with Lévy
    let t = 0.8;
    let law = EndpointLaw::two_step(make_piecewise_constant(0.0, 0.0), 0.0, t)?;
    let mut rng = draw_rng(cfg, 1300);
    let draws: Vec<(f64, f64)> = (0..cfg.n)
        .map(|_| law.sample(&mut rng).map(|(b, l)| (b.abs(), l)))
        .collect::<Result<_>>()?;
    Ok(vec![joint_chi2(
        "endpoint.brownian_vs_levy.joint_chi2",
        &draws,
        t,
        0.0,
        cfg,
        1301,
    )?])
}

fn check_exact(cfg: &SuiteConfig) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let grid = [0.25, 0.5, 0.75];
    for (label, a, x) in [("zero drift", 0.0, 0.3), ("constant drift", 0.6, -0.2)] {
        let sim = ExactSimulator::new(make_piecewise_constant(a, a), x, 1.0)?;
        let paths = sim.sample_paths(&grid, cfg.n, cfg.seed ^ 0x51, None)?;
        for &t in grid.iter().chain(std::iter::once(&1.0)) {
            let xs: Vec<f64> = paths
                .iter()
                .map(|p| p.at(t).expect("requested time").x)
                .collect();
            let mean = x + a * t;
            let st = ks_one_sample(&xs, |u| std_normal_cdf((u - mean) / t.sqrt()));
            out.push(TestReport::above(
                format!("exact.{label}.X_{t}"),
                st.p_value,
                P_VALUE_FLOOR,
                format!("D = {:.5}", st.statistic),
            ));
        }
    }
    // rounds per path are geometric with success probability e^{κT + A(x)} / Z
    for (label, d) in built_in_drifts() {
        let (x, t) = (0.0, 1.0);
        let sim = ExactSimulator::new(d.clone(), x, t)?;
        let z = sim.law().total_mass()?;
        let p = (d.kappa() * t + d.antiderivative(x)).exp() / z;
        let n = cfg.n / 5;
        let paths = sim.sample_paths(&[], n, cfg.seed ^ 0x52, None)?;
        let mean = paths.iter().map(|s| s.rounds as f64).sum::<f64>() / n as f64;
        let zscore = (mean - 1.0 / p).abs() / ((1.0 - p) / (p * p * n as f64)).sqrt().max(1e-300);
        out.push(TestReport::below(
            format!("exact.acceptance_rate[{label}]"),
            zscore,
            Z_BOUND,
            format!("mean rounds {mean:.5}, expected {:.5}", 1.0 / p),
        ));
    }
    Ok(out)
}

pub fn registry() -> Vec<OracleCheck> {
    vec![
        OracleCheck {
            name: "bridge.l_given_endpoints",
            covers: &["sample_l_given_endpoints"],
            run: check_l_given_endpoints,
        },
        OracleCheck {
            name: "bridge.zero_increment",
            covers: &["sample_b_zero_increment"],
            run: check_zero_increment,
        },
        OracleCheck {
            name: "bridge.case_weights",
            covers: &["compute_case_weights"],
            run: check_case_weights,
        },
        OracleCheck {
            name: "bridge.xi1",
            covers: &["sample_xi1"],
            run: check_xi1,
        },
        OracleCheck {
            name: "bridge.xi3",
            covers: &["sample_xi3"],
            run: check_xi3,
        },
        OracleCheck {
            name: "bridge.xi2",
            covers: &["sample_xi2"],
            run: check_xi2,
        },
        OracleCheck {
            name: "bridge.point",
            covers: &["sample_bridge_point", "compute_case_weights"],
            run: check_bridge_point,
        },
        OracleCheck {
            name: "bridge.interpolate",
            covers: &["interpolate_skeleton"],
            run: check_interpolate,
        },
        OracleCheck {
            name: "levy",
            covers: &["levy_identity_oracle"],
            run: check_levy,
        },
        OracleCheck {
            name: "endpoint.h",
            covers: &["sample_xt_from_h"],
            run: check_h,
        },
        OracleCheck {
            name: "endpoint.two_step",
            covers: &["sample_endpoint_theta_positive"],
            run: check_theta_positive,
        },
        OracleCheck {
            name: "endpoint.mixture",
            covers: &["sample_endpoint_theta_negative"],
            run: check_theta_negative,
        },
        OracleCheck {
            name: "endpoint.brownian_vs_levy",
            covers: &["sample_endpoint_theta_positive", "levy_identity_oracle"],
            run: check_brownian_endpoint,
        },
        OracleCheck {
            name: "exact",
            covers: &["simulate_skeleton"],
            run: check_exact,
        },
    ]
}

/// Samplers in `SAMPLERS` that no registered check covers.
pub fn manifest_gaps() -> Vec<&'static str> {
    let checks = registry();
    SAMPLERS
        .iter()
        .copied()
        .filter(|s| !checks.iter().any(|c| c.covers.contains(s)))
        .collect()
}
