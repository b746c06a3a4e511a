//! Conditional laws of Brownian motion and its local time at zero.
//!
//! Three laws are needed by the exact algorithm: the local time at a later
//! time given both endpoint values, the interior value of a bridge whose
//! local time does not move, and the interior pair `(B, L)` of a bridge whose
//! local time strictly increases.

mod case_weights;
pub(crate) mod one_sided;
mod region;
mod xi;
mod zero_increment;

pub use case_weights::{compute_case_weights, set_p1_mutation, CaseWeights};
pub use one_sided::{prob_local_time_constant, sample_l_given_endpoints, EndpointPair};
pub use region::UvRegion;
pub use xi::{sample_xi1, sample_xi2, sample_xi3, xi1_density, xi2_density, xi3_density};
pub use zero_increment::{
    sample_b_zero_increment, zero_increment_density, zero_increment_proposal,
};

use crate::error::{domain, Result};
use crate::rng::RngStream;
use crate::skeleton::SkeletonPoint;

/// Two anchors `(s1, b1, l1)` and `(s3, b3, l3)` and an interior time `s2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeQuery {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub b1: f64,
    pub b3: f64,
    pub l1: f64,
    pub l3: f64,
}

impl BridgeQuery {
    pub fn between(left: SkeletonPoint, t: f64, right: SkeletonPoint) -> Self {
        Self {
            s1: left.t,
            s2: t,
            s3: right.t,
            b1: left.x,
            b3: right.x,
            l1: left.l,
            l3: right.l,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.s1, self.s2, self.s3, self.b1, self.b3, self.l1, self.l3,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(domain(format!("non-finite bridge query {self:?}")));
        }
        if !(self.s1 < self.s2 && self.s2 < self.s3) {
            return Err(domain(format!(
                "bridge times must satisfy s1 < s2 < s3, got ({}, {}, {})",
                self.s1, self.s2, self.s3
            )));
        }
        if self.l1 < 0.0 || self.l3 < self.l1 {
            return Err(domain(format!(
                "local times must satisfy 0 <= l1 <= l3, got ({}, {})",
                self.l1, self.l3
            )));
        }
        if self.l1 == self.l3 && self.b1 * self.b3 <= 0.0 {
            return Err(domain(format!(
                "constant local time needs b1, b3 of one strict sign, got ({}, {})",
                self.b1, self.b3
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn d1(&self) -> f64 {
        self.s2 - self.s1
    }

    #[inline]
    pub(crate) fn d2(&self) -> f64 {
        self.s3 - self.s2
    }

    #[inline]
    pub(crate) fn d13(&self) -> f64 {
        self.s3 - self.s1
    }

    #[inline]
    pub(crate) fn dl(&self) -> f64 {
        self.l3 - self.l1
    }
}

/// Which of the three bridge cases produced a draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BridgeCase {
    /// `l1 = l3`: the local time cannot move.
    Constant,
    /// `l2 = l1`
    StaysLeft,
    /// `l2 = l3`
    StaysRight,
    /// `l1 < l2 < l3`
    Interior,
}

/// Draws `(B_{s2}, L_{s2})` given both anchors, reporting which case fired.
pub fn sample_bridge_point_with_case(
    q: &BridgeQuery,
    rng: &mut RngStream,
) -> Result<(f64, f64, BridgeCase)> {
    q.validate()?;
    if q.l1 == q.l3 {
        let b2 = zero_increment::sample_unchecked(q, rng)?;
        return Ok((b2, q.l1, BridgeCase::Constant));
    }
    let w = compute_case_weights(q)?;
    let u = rng.uniform();
    if u < w.p1 {
        Ok((
            xi::sample_xi1_unchecked(q, rng)?,
            q.l1,
            BridgeCase::StaysLeft,
        ))
    } else if u < w.p1 + w.p3 {
        Ok((
            xi::sample_xi3_unchecked(q, rng)?,
            q.l3,
            BridgeCase::StaysRight,
        ))
    } else {
        let (b2, l2) = xi::sample_xi2_unchecked(q, rng)?;
        Ok((b2, l2, BridgeCase::Interior))
    }
}

/// Exact draw of `(B_{s2}, L_{s2})` given `(B, L)` at `s1` and `s3`.
pub fn sample_bridge_point(q: &BridgeQuery, rng: &mut RngStream) -> Result<(f64, f64)> {
    sample_bridge_point_with_case(q, rng).map(|(b, l, _)| (b, l))
}

/// Inserts `new_times` into a time-ordered skeleton, filling each new node from
/// its two current neighbours.
///
/// Times are inserted in increasing order, so a node filled earlier becomes the
/// left anchor of the next one in the same gap. Times already present are
/// left as they are.
pub fn interpolate_skeleton(
    points: &[SkeletonPoint],
    new_times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<SkeletonPoint>> {
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return Err(domain("cannot interpolate an empty skeleton"));
    };
    if points.windows(2).any(|w| !(w[0].t < w[1].t)) {
        return Err(domain("skeleton times must be strictly increasing"));
    }
    let mut times: Vec<f64> = new_times.to_vec();
    if let Some(bad) = times.iter().find(|t| !(**t >= first.t && **t <= last.t)) {
        return Err(domain(format!(
            "time {bad} outside skeleton range [{}, {}]",
            first.t, last.t
        )));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut out = Vec::with_capacity(points.len() + times.len());
    let mut next = 0;
    out.push(*first);
    for &right in &points[1..] {
        while next < times.len() && times[next] < right.t {
            let t = times[next];
            next += 1;
            let left = *out.last().expect("nonempty");
            if t <= left.t {
                continue;
            }
            let (x, l) = sample_bridge_point(&BridgeQuery::between(left, t, right), rng)?;
            out.push(SkeletonPoint::new(t, x, l));
        }
        out.push(right);
    }
    Ok(out)
}
