//! Densities and samplers for the three cases of a bridge with `l1 < l3`.

use super::{BridgeQuery, UvRegion};
use crate::dist::{log_atom_density, log_joint_density, truncated_normal_above};
use crate::error::{check_ratio, domain, Result};
use crate::rng::RngStream;

fn check(q: &BridgeQuery) -> Result<()> {
    q.validate()?;
    if !(q.l3 > q.l1) {
        return Err(domain(format!("need l3 > l1, got ({}, {})", q.l1, q.l3)));
    }
    Ok(())
}

/// Density of `B_{s2}` on `{L_{s2} = l1}`; integrates to `p1`.
pub fn xi1_density(b2: f64, q: &BridgeQuery) -> f64 {
    let dl = q.dl();
    if !(dl > 0.0) {
        return 0.0;
    }
    (log_atom_density(q.b1, q.d1(), b2) + log_joint_density(b2, q.d2(), q.b3, dl)
        - log_joint_density(q.b1, q.d13(), q.b3, dl))
    .exp()
}

/// Density of `B_{s2}` on `{L_{s2} = l3}`; integrates to `p3`.
pub fn xi3_density(b2: f64, q: &BridgeQuery) -> f64 {
    let dl = q.dl();
    if !(dl > 0.0) {
        return 0.0;
    }
    (log_joint_density(q.b1, q.d1(), b2, dl) + log_atom_density(b2, q.d2(), q.b3)
        - log_joint_density(q.b1, q.d13(), q.b3, dl))
    .exp()
}

/// Joint density of `(B_{s2}, L_{s2})` for `l1 < l2 < l3`; integrates to `p2`.
pub fn xi2_density(b2: f64, l2: f64, q: &BridgeQuery) -> f64 {
    if !(l2 > q.l1 && l2 < q.l3) {
        return 0.0;
    }
    (log_joint_density(q.b1, q.d1(), b2, l2 - q.l1)
        + log_joint_density(b2, q.d2(), q.b3, q.l3 - l2)
        - log_joint_density(q.b1, q.d13(), q.b3, q.dl()))
    .exp()
}

/// Draws from the flat-side density, which on the half-line of `b_near` is
/// `∝ φ_{m,σ²}(z) (k + z) (1 - e^{-2βz/Δ_near})` in `z = |b2|`.
///
/// The proposal is `N(m + λσ², σ²)` on `(0, ∞)`, i.e. the Gaussian tilted by
/// `e^{λz}`; then `(k + z) e^{-λ(k + z)} ≤ 1/(eλ)` gives the acceptance ratio.
fn sample_flat_side(
    b_near: f64,
    d_near: f64,
    d_far: f64,
    k: f64,
    sampler: &'static str,
    rng: &mut RngStream,
) -> Result<f64> {
    if b_near == 0.0 {
        return Err(domain(format!(
            "{sampler}: anchor at zero gives this case no mass"
        )));
    }
    let beta = b_near.abs();
    let d13 = d_near + d_far;
    let sigma2 = d_near * d_far / d13;
    let sigma = sigma2.sqrt();
    let m = (beta * d_far - k * d_near) / d13;
    let lambda = 1.0 / (k + m.max(0.0) + sigma);
    let mean = m + lambda * sigma2;
    loop {
        let z = truncated_normal_above(mean, sigma, 0.0, rng);
        let w = lambda * (k + z);
        let ratio = w * (1.0 - w).exp() * -(-2.0 * beta * z / d_near).exp_m1();
        if rng.uniform() < check_ratio(sampler, ratio)? {
            return Ok(b_near.signum() * z);
        }
    }
}

pub(crate) fn sample_xi1_unchecked(q: &BridgeQuery, rng: &mut RngStream) -> Result<f64> {
    sample_flat_side(
        q.b1,
        q.d1(),
        q.d2(),
        q.dl() + q.b3.abs(),
        "bridge flat-left",
        rng,
    )
}

pub(crate) fn sample_xi3_unchecked(q: &BridgeQuery, rng: &mut RngStream) -> Result<f64> {
    sample_flat_side(
        q.b3,
        q.d2(),
        q.d1(),
        q.dl() + q.b1.abs(),
        "bridge flat-right",
        rng,
    )
}

pub(crate) fn sample_xi2_unchecked(q: &BridgeQuery, rng: &mut RngStream) -> Result<(f64, f64)> {
    let region = UvRegion::new(q);
    let (u, v) = region.sample(q.d1(), q.d2(), rng)?;
    let (abs_b2, l2) = region.to_b_l(u, v);
    // rounding at the region edges must not leak outside [l1, l3]
    let l2 = l2.clamp(q.l1, q.l3);
    let abs_b2 = abs_b2.max(0.0);
    let b2 = if rng.coin() { abs_b2 } else { -abs_b2 };
    Ok((b2, l2))
}

/// Exact draw of `B_{s2}` given `L_{s2} = l1`.
pub fn sample_xi1(q: &BridgeQuery, rng: &mut RngStream) -> Result<f64> {
    check(q)?;
    sample_xi1_unchecked(q, rng)
}

/// Exact draw of `B_{s2}` given `L_{s2} = l3`.
pub fn sample_xi3(q: &BridgeQuery, rng: &mut RngStream) -> Result<f64> {
    check(q)?;
    sample_xi3_unchecked(q, rng)
}

/// Exact draw of `(B_{s2}, L_{s2})` given `l1 < L_{s2} < l3`.
pub fn sample_xi2(q: &BridgeQuery, rng: &mut RngStream) -> Result<(f64, f64)> {
    check(q)?;
    sample_xi2_unchecked(q, rng)
}
