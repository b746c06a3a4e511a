use crate::dist::truncated_rayleigh;
use crate::error::{domain, Result};
use crate::rng::RngStream;

/// Brownian values at two times plus the local time at the first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointPair {
    pub s1: f64,
    pub s2: f64,
    pub b1: f64,
    pub b2: f64,
    pub l1: f64,
}

impl EndpointPair {
    fn validate(&self) -> Result<()> {
        if !(self.s2 > self.s1) || !(self.s2 - self.s1).is_finite() {
            return Err(domain(format!(
                "need s2 > s1, got ({}, {})",
                self.s1, self.s2
            )));
        }
        if !self.b1.is_finite() || !self.b2.is_finite() {
            return Err(domain(format!(
                "non-finite values ({}, {})",
                self.b1, self.b2
            )));
        }
        if !(self.l1 >= 0.0 && self.l1.is_finite()) {
            return Err(domain(format!(
                "local time must be finite and >= 0, got {}",
                self.l1
            )));
        }
        Ok(())
    }
}

pub(crate) fn prob_constant_unchecked(b1: f64, b2: f64, ds: f64) -> f64 {
    if b1 * b2 <= 0.0 {
        0.0
    } else {
        -(-2.0 * b1 * b2 / ds).exp_m1()
    }
}

/// Probability that the local time does not move over `[s1, s2]` given the
/// endpoint values.
pub fn prob_local_time_constant(e: &EndpointPair) -> Result<f64> {
    e.validate()?;
    Ok(prob_constant_unchecked(e.b1, e.b2, e.s2 - e.s1))
}

pub(crate) fn sample_l_unchecked(b1: f64, b2: f64, l1: f64, ds: f64, rng: &mut RngStream) -> f64 {
    let p = prob_constant_unchecked(b1, b2, ds);
    if p > 0.0 && rng.uniform() < p {
        return l1;
    }
    let m = b1.abs() + b2.abs();
    l1 + (truncated_rayleigh(ds, m, rng) - m)
}

/// Exact draw of `L_{s2}` given `B_{s1}`, `B_{s2}` and `L_{s1}`.
pub fn sample_l_given_endpoints(e: &EndpointPair, rng: &mut RngStream) -> Result<f64> {
    e.validate()?;
    Ok(sample_l_unchecked(e.b1, e.b2, e.l1, e.s2 - e.s1, rng))
}
