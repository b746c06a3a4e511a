//! Interior value of a Brownian bridge that does not touch zero.

use super::BridgeQuery;
use crate::dist::truncated_normal_above;
use crate::error::{check_ratio, domain, Result};
use crate::rng::RngStream;
use crate::special::normal_density;

/// Mean and variance of the plain Brownian bridge at `s2`, which is the
/// proposal before truncation to the half-line of `b1`.
pub fn zero_increment_proposal(q: &BridgeQuery) -> (f64, f64) {
    let (d1, d2, d13) = (q.d1(), q.d2(), q.d13());
    ((q.b1 * d2 + q.b3 * d1) / d13, d1 * d2 / d13)
}

fn check(q: &BridgeQuery) -> Result<()> {
    q.validate()?;
    if q.l1 != q.l3 {
        return Err(domain(format!(
            "local time must be constant, got ({}, {})",
            q.l1, q.l3
        )));
    }
    Ok(())
}

/// Normalised density of `B_{s2}` given the anchors and no zero crossing.
pub fn zero_increment_density(b2: f64, q: &BridgeQuery) -> Result<f64> {
    check(q)?;
    if b2 * q.b1 <= 0.0 {
        return Ok(0.0);
    }
    let (mu, sigma2) = zero_increment_proposal(q);
    let e1 = -(-2.0 * q.b1 * b2 / q.d1()).exp_m1();
    let e2 = -(-2.0 * b2 * q.b3 / q.d2()).exp_m1();
    let e13 = -(-2.0 * q.b1 * q.b3 / q.d13()).exp_m1();
    Ok(normal_density(b2, mu, sigma2) * e1 * e2 / e13)
}

pub(crate) fn sample_unchecked(q: &BridgeQuery, rng: &mut RngStream) -> Result<f64> {
    // work on the positive side and reflect at the end
    let sign = q.b1.signum();
    let (b1, b3) = (q.b1.abs(), q.b3.abs());
    let (d1, d2, d13) = (q.d1(), q.d2(), q.d13());
    let mu = (b1 * d2 + b3 * d1) / d13;
    let sd = (d1 * d2 / d13).sqrt();
    loop {
        let z = truncated_normal_above(mu, sd, 0.0, rng);
        let ratio = (-(-2.0 * b1 * z / d1).exp_m1()) * (-(-2.0 * z * b3 / d2).exp_m1());
        let ratio = check_ratio("zero-increment bridge", ratio)?;
        if rng.uniform() < ratio {
            return Ok(sign * z);
        }
    }
}

/// Exact draw of `B_{s2}` given `(b1, l)` at `s1` and `(b3, l)` at `s3`.
pub fn sample_b_zero_increment(q: &BridgeQuery, rng: &mut RngStream) -> Result<f64> {
    check(q)?;
    sample_unchecked(q, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn q(b1: f64, b3: f64) -> BridgeQuery {
        BridgeQuery {
            s1: 0.0,
            s2: 1.0,
            s3: 2.0,
            b1,
            b3,
            l1: 0.2,
            l3: 0.2,
        }
    }

    #[test]
    fn proposal_parameters() {
        let (mu, s2) = zero_increment_proposal(&q(1.0, 1.0));
        assert!((mu - 1.0).abs() < 1e-15);
        assert!((s2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        for &(b1, b3) in &[(1.0, 1.0), (0.1, 0.1), (-0.3, -2.0), (0.05, 3.0)] {
            let qq = q(b1, b3);
            let f = |z: f64| zero_increment_density(z, &qq).unwrap();
            let total = if b1 > 0.0 {
                integrate(f, 0.0, f64::INFINITY, 1e-12)
            } else {
                integrate(f, f64::NEG_INFINITY, 0.0, 1e-12)
            }
            .unwrap();
            assert!(
                (total.value - 1.0).abs() < 1e-9,
                "({b1},{b3}): {}",
                total.value
            );
        }
    }

    #[test]
    fn sign_follows_anchors() {
        let mut rng = RngStream::new(7, 0);
        for _ in 0..5000 {
            assert!(sample_b_zero_increment(&q(0.2, 0.4), &mut rng).unwrap() > 0.0);
            assert!(sample_b_zero_increment(&q(-0.2, -0.4), &mut rng).unwrap() < 0.0);
        }
    }

    #[test]
    fn rejects_bad_queries() {
        let mut rng = RngStream::new(7, 1);
        assert!(sample_b_zero_increment(&q(0.2, -0.4), &mut rng).is_err());
        let moving = BridgeQuery {
            l3: 0.3,
            ..q(0.2, 0.4)
        };
        assert!(sample_b_zero_increment(&moving, &mut rng).is_err());
    }
}
