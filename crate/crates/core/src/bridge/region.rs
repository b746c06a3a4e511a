use super::BridgeQuery;
use crate::dist::{doubly_truncated_normal, doubly_truncated_rayleigh};
use crate::error::{check_ratio, Error, Result};
use crate::rng::RngStream;
use crate::special::{log_diff_exp, log_std_normal_sf, std_normal_sf};

/// Image of `{b2 ≥ 0} × [l1, l3]` under
/// `u = l2 - l1 + |b2| + |b1|`, `v = l3 - l2 + |b3| + |b2|`.
///
/// The region is `v ≤ u + alpha` (`l2 ≥ l1`), `v ≥ u - beta` (`l2 ≤ l3`) and
/// `u + v ≥ sum` (`|b2| ≥ 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UvRegion {
    pub l1: f64,
    pub l3: f64,
    pub abs_b1: f64,
    pub abs_b3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sum: f64,
}

impl UvRegion {
    pub fn new(q: &BridgeQuery) -> Self {
        let (a1, a3) = (q.b1.abs(), q.b3.abs());
        let dl = q.l3 - q.l1;
        Self {
            l1: q.l1,
            l3: q.l3,
            abs_b1: a1,
            abs_b3: a3,
            alpha: dl - a1 + a3,
            beta: dl + a1 - a3,
            sum: dl + a1 + a3,
        }
    }

    /// The three boundary lines as `(slope, intercept)` in the `(u, v)` plane.
    pub fn lines(&self) -> [(f64, f64); 3] {
        [(1.0, self.alpha), (1.0, -self.beta), (-1.0, self.sum)]
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        v <= u + self.alpha && v >= u - self.beta && u + v >= self.sum
    }

    /// `(|b2|, l2)` for a point of the plane.
    pub fn to_b_l(&self, u: f64, v: f64) -> (f64, f64) {
        let l2 = 0.5 * (u - v + self.l1 + self.l3 - self.abs_b1 + self.abs_b3);
        let b2 = 0.5 * (u + v - self.l3 + self.l1 - self.abs_b1 - self.abs_b3);
        (b2, l2)
    }

    pub fn from_b_l(&self, abs_b2: f64, l2: f64) -> (f64, f64) {
        (
            l2 - self.l1 + abs_b2 + self.abs_b1,
            self.l3 - l2 + self.abs_b3 + abs_b2,
        )
    }

    /// Draws `(u, v)` with density `∝ u e^{-u²/2d1} v e^{-v²/2d2}` on the region.
    ///
    /// Given `u`, `v` ranges over `[lo(u), u + alpha]` with `lo(u) = sum - u`
    /// up to `u = |b1| + dl` and `u - beta` beyond, so the `u` marginal is
    /// explicit and log-concave on each piece. `u` is drawn by rejection from
    /// the Gaussian obtained by bounding its log-density by the tangent at the
    /// piece's mode, then `v` by inverting its truncated Rayleigh law.
    pub(crate) fn sample(&self, d1: f64, d2: f64, rng: &mut RngStream) -> Result<(f64, f64)> {
        let kink = self.abs_b1 + (self.alpha + self.beta) / 2.0;
        let pieces = [
            Piece::new(self, d1, d2, self.abs_b1, kink, -1.0, self.sum),
            Piece::new(self, d1, d2, kink, f64::INFINITY, 1.0, -self.beta),
        ];
        let p_first = 1.0 / (1.0 + (pieces[1].log_mass - pieces[0].log_mass).exp());
        if p_first.is_nan() {
            return Err(Error::AcceptanceRatio {
                sampler: "bridge interior envelope",
                ratio: f64::NAN,
            });
        }
        loop {
            let piece = &pieces[if rng.uniform() < p_first { 0 } else { 1 }];
            let u = doubly_truncated_normal(piece.mu, piece.sd, piece.left, piece.right, rng);
            let ratio = check_ratio(
                "bridge interior (u, v)",
                (piece.log_target(u) - piece.log_envelope(u)).exp(),
            )?;
            if rng.uniform() < ratio {
                let (lo, hi) = (piece.lo(u).max(0.0), u + self.alpha);
                return Ok((u, doubly_truncated_rayleigh(d2, lo, hi.max(lo), rng)));
            }
        }
    }
}

/// One piece of the `u` marginal, `u e^{-u²/2d1} (e^{-lo²/2d2} - e^{-hi²/2d2})`
/// with `lo = k u + c` and `hi = u + alpha`, and its Gaussian envelope.
struct Piece {
    d1: f64,
    d2: f64,
    k: f64,
    c: f64,
    alpha: f64,
    left: f64,
    right: f64,
    u0: f64,
    /// Tangent of `ln(1 - e^{-x(u)})` at `u0`: value and slope.
    g0: f64,
    g1: f64,
    mu: f64,
    sd: f64,
    log_mass: f64,
}

impl Piece {
    fn new(r: &UvRegion, d1: f64, d2: f64, left: f64, right: f64, k: f64, c: f64) -> Self {
        let mut p = Self {
            d1,
            d2,
            k,
            c,
            alpha: r.alpha,
            left,
            right,
            u0: 0.0,
            g0: 0.0,
            g1: 0.0,
            mu: 0.0,
            sd: 0.0,
            log_mass: f64::NEG_INFINITY,
        };
        p.u0 = p.mode();
        let x0 = p.x(p.u0);
        p.g0 = (-(-x0).exp_m1()).ln();
        p.g1 = p.x_slope() / x0.exp_m1();
        // envelope exponent c0 + c1 u - c2 u²
        let c2 = 0.5 / d1 + 0.5 / d2;
        let c1 = -k * c / d2 + 1.0 / p.u0 + p.g1;
        let c0 = -c * c / (2.0 * d2) + p.u0.ln() - 1.0 + p.g0 - p.g1 * p.u0;
        p.mu = c1 / (2.0 * c2);
        p.sd = (0.5 / c2).sqrt();
        p.log_mass = c0
            + c1 * c1 / (4.0 * c2)
            + (p.sd * (2.0 * std::f64::consts::PI).sqrt()).ln()
            + log_normal_interval((left - p.mu) / p.sd, (right - p.mu) / p.sd);
        p
    }

    fn lo(&self, u: f64) -> f64 {
        self.k * u + self.c
    }

    /// `(hi² - lo²) / 2d2`, linear in `u`.
    fn x(&self, u: f64) -> f64 {
        let (lo, hi) = (self.lo(u), u + self.alpha);
        (hi - lo) * (hi + lo) / (2.0 * self.d2)
    }

    fn x_slope(&self) -> f64 {
        self.x(1.0) - self.x(0.0)
    }

    fn log_target(&self, u: f64) -> f64 {
        let lo = self.lo(u);
        u.ln() - u * u / (2.0 * self.d1) - lo * lo / (2.0 * self.d2) + (-(-self.x(u)).exp_m1()).ln()
    }

    fn log_envelope(&self, u: f64) -> f64 {
        let lo = self.lo(u);
        -u * u / (2.0 * self.d1) - lo * lo / (2.0 * self.d2) + self.u0.ln() - 1.0
            + u / self.u0
            + self.g0
            + self.g1 * (u - self.u0)
    }

    fn slope(&self, u: f64) -> f64 {
        // the target vanishes where the v interval is empty, so it rises there
        if !(self.x(u) > 0.0) {
            return f64::INFINITY;
        }
        1.0 / u - u / self.d1 - self.k * self.lo(u) / self.d2 + self.x_slope() / self.x(u).exp_m1()
    }

    /// Maximiser of the concave `log_target` on the piece.
    fn mode(&self) -> f64 {
        let mut lo = self.left;
        let mut hi = if self.right.is_finite() {
            self.right
        } else {
            let mut step = self.d1.sqrt().max(self.d2.sqrt()).max(1e-3);
            while self.slope(lo + step) > 0.0 {
                step *= 2.0;
            }
            lo + step
        };
        if self.slope(hi) >= 0.0 {
            return hi;
        }
        if lo > 0.0 && self.slope(lo) <= 0.0 {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `ln(Φ(b) - Φ(a))` for `a < b`.
fn log_normal_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        log_diff_exp(log_std_normal_sf(a), log_std_normal_sf(b))
    } else if b < 0.0 {
        log_diff_exp(log_std_normal_sf(-b), log_std_normal_sf(-a))
    } else {
        (1.0 - std_normal_sf(b) - std_normal_sf(-a)).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query() -> BridgeQuery {
        BridgeQuery {
            s1: 0.0,
            s2: 0.5,
            s3: 1.0,
            b1: -0.4,
            b3: 0.9,
            l1: 0.2,
            l3: 0.75,
        }
    }

    #[test]
    fn membership_matches_pullback() {
        let r = UvRegion::new(&query());
        let mut rng = RngStream::new(21, 0);
        let mut inside = 0;
        for _ in 0..1_000_000 {
            let u = 4.0 * rng.uniform();
            let v = 4.0 * rng.uniform();
            let (b2, l2) = r.to_b_l(u, v);
            let pulled = b2 >= 0.0 && l2 >= r.l1 && l2 <= r.l3;
            assert_eq!(r.contains(u, v), pulled, "({u}, {v})");
            inside += pulled as u32;
        }
        assert!(inside > 10_000);
    }

    #[test]
    fn transform_round_trip() {
        let r = UvRegion::new(&query());
        let (u, v) = r.from_b_l(0.3, 0.5);
        let (b, l) = r.to_b_l(u, v);
        assert!((b - 0.3).abs() < 1e-14 && (l - 0.5).abs() < 1e-14);
        // the corner lines are where l2 hits l1 and l3
        let [(_, ia), (_, ib), _] = r.lines();
        let (u1, v1) = r.from_b_l(0.3, r.l1);
        assert!((v1 - (u1 + ia)).abs() < 1e-14);
        let (u3, v3) = r.from_b_l(0.3, r.l3);
        assert!((v3 - (u3 + ib)).abs() < 1e-14);
    }

    #[test]
    fn draws_stay_inside_for_tail_regions() {
        let mut rng = RngStream::new(22, 0);
        // deep in the Rayleigh tails, lopsided variances, a thin strip
        for &(d1, d2, b1, b3, l1, l3) in &[
            (0.5, 0.5, -0.4, 0.9, 0.2, 0.75),
            (0.01, 0.01, 2.0, -2.0, 0.0, 1.5),
            (0.01, 3.0, 1.5, 0.1, 0.3, 1.8),
            (3.0, 0.02, 0.0, 1.9, 0.0, 0.05),
            (0.2, 0.2, 0.0, 0.0, 0.4, 0.400001),
        ] {
            let q = BridgeQuery {
                s1: 0.0,
                s2: d1,
                s3: d1 + d2,
                b1,
                b3,
                l1,
                l3,
            };
            let r = UvRegion::new(&q);
            for _ in 0..20_000 {
                let (u, v) = r.sample(d1, d2, &mut rng).unwrap();
                let (b2, l2) = r.to_b_l(u, v);
                let tol = 1e-9 * (1.0 + u + v);
                assert!(
                    b2 >= -tol && l2 >= l1 - tol && l2 <= l3 + tol,
                    "({u}, {v}) for {q:?}"
                );
            }
        }
    }

    #[test]
    fn u_marginal_matches_quadrature() {
        use crate::quadrature::{integrate, quadrature_cdf};
        use crate::validation::stats::ks_one_sample;
        let wide = BridgeQuery {
            s1: 0.0,
            s2: 0.272_382_196_363_325_7,
            s3: 1.407_109_707_807_853_8,
            b1: 0.628_295_224_348_336_8,
            b3: 0.905_874_567_836_846_7,
            l1: 0.579_644_630_493_917_3,
            l3: 1.349_502_224_845_233_7,
        };
        for q in [query(), wide] {
            let (d1, d2) = (q.s2 - q.s1, q.s3 - q.s2);
            let r = UvRegion::new(&q);
            let mut rng = RngStream::new(23, 0);
            let us: Vec<f64> = (0..50_000)
                .map(|_| r.sample(d1, d2, &mut rng).unwrap().0)
                .collect();
            // the u marginal by integrating the joint density over v numerically
            let density = |u: f64| {
                let lo = (r.sum - u).max(u - r.beta).max(0.0);
                let hi = u + r.alpha;
                if !(hi > lo) {
                    return 0.0;
                }
                let inner = integrate(|v| v * (-v * v / (2.0 * d2)).exp(), lo, hi, 1e-14).unwrap();
                u * (-u * u / (2.0 * d1)).exp() * inner.value
            };
            let kink = r.abs_b1 + 0.5 * (r.alpha + r.beta);
            let cdf = quadrature_cdf(density, r.abs_b1, 12.0, &[kink], 400, 1e-12).unwrap();
            let t = ks_one_sample(&us, |u| cdf.cdf(u));
            assert!(t.p_value > 1e-3, "{t:?} for {q:?}");
        }
    }
}
