//! Probabilities that the local time of a bridge stays at `l1`, stays at
//! `l3`, or lands strictly between them at the interior time.

use super::BridgeQuery;
use crate::dist::log_joint_density;
use crate::error::{domain, Result};
use crate::special::log_linear_gauss_tail;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

/// Scale applied to `p1`; stays 1 outside of mutation testing.
static P1_MUTATION: AtomicU64 = AtomicU64::new(0x3FF0_0000_0000_0000);

/// Deliberately corrupts `p1` by `factor` so that the validation suite can be
/// shown to catch a wrong case weight. Pass 1 to restore.
#[doc(hidden)]
pub fn set_p1_mutation(factor: f64) {
    P1_MUTATION.store(factor.to_bits(), Ordering::Relaxed);
}

/// Case probabilities together with the constants of their closed forms.
///
/// `c1`, `c2` involve the reciprocal of the bridge density and can overflow
/// for extreme bridges; the probabilities themselves are computed in log
/// space and do not depend on them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseWeights {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub c1: f64,
    pub c2: f64,
    pub k1: f64,
    pub k2: f64,
    pub mu: [f64; 4],
    pub nu: [f64; 4],
    pub sigma2: f64,
}

/// Mass of the case where the local time is flat on the `near` side.
///
/// With `β = |b_near|` and `k = l3 - l1 + |b_far|` this equals
/// `Δ/(Δ_far (k+β)) · [I(m1) - e^{2kβ/Δ} I(m2)]` where
/// `I(m) = ∫_0^∞ (k+z) φ_{m,σ²}(z) dz`, `m1 = (β Δ_far - k Δ_near)/Δ` and
/// `m2 = m1 - 2β Δ_far/Δ`.
pub(crate) fn flat_side_mass(b_near: f64, d_near: f64, d_far: f64, k: f64) -> f64 {
    if b_near == 0.0 {
        return 0.0;
    }
    let beta = b_near.abs();
    let d13 = d_near + d_far;
    let sigma = (d_near * d_far / d13).sqrt();
    let m1 = (beta * d_far - k * d_near) / d13;
    let m2 = m1 - 2.0 * beta * d_far / d13;
    let a = log_linear_gauss_tail(m1, sigma, k);
    let b = log_linear_gauss_tail(m2, sigma, k) + 2.0 * k * beta / d13;
    if !(b < a) {
        return 0.0;
    }
    let prefactor = d13 / (d_far * (k + beta));
    prefactor * a.exp() * (-(b - a).exp_m1())
}

/// Case weights for a bridge with `l1 < l3`.
pub fn compute_case_weights(q: &BridgeQuery) -> Result<CaseWeights> {
    q.validate()?;
    if !(q.l3 > q.l1) {
        return Err(domain(format!(
            "case weights need l3 > l1, got ({}, {})",
            q.l1, q.l3
        )));
    }
    let (d1, d2, d13, dl) = (q.d1(), q.d2(), q.d13(), q.dl());
    let sigma2 = d1 * d2 / d13;
    let k1 = dl + q.b3.abs();
    let k2 = dl + q.b1.abs();

    let mu1 = (q.b1 * d2 - k1 * d1) / d13;
    let mu3 = (q.b1 * d2 + k1 * d1) / d13;
    let shift_mu = 2.0 * q.b1 * d2 / d13;
    let nu1 = (q.b3 * d1 - k2 * d2) / d13;
    let nu3 = (q.b3 * d1 + k2 * d2) / d13;
    let shift_nu = 2.0 * q.b3 * d1 / d13;

    let log_f13 = log_joint_density(q.b1, d13, q.b3, dl);
    let c1 = (-log_f13).exp() / (2.0 * PI * d1.sqrt() * d2.powf(1.5));
    let c2 = (-log_f13).exp() / (2.0 * PI * d1.powf(1.5) * d2.sqrt());

    let p1 = flat_side_mass(q.b1, d1, d2, k1) * f64::from_bits(P1_MUTATION.load(Ordering::Relaxed));
    let p3 = flat_side_mass(q.b3, d2, d1, k2);
    let raw = 1.0 - p1 - p3;
    if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
        log::warn!("clamping p2 = {raw:e} for bridge {q:?}");
    }
    Ok(CaseWeights {
        p1,
        p2: raw.clamp(0.0, 1.0),
        p3,
        c1,
        c2,
        k1,
        k2,
        mu: [mu1, mu1 - shift_mu, mu3, mu3 - shift_mu],
        nu: [nu1, nu1 - shift_nu, nu3, nu3 - shift_nu],
        sigma2,
    })
}
