//! Gaussian special functions with tail-stable variants.
//!
//! Everything here is unchecked: callers guarantee positive variances.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this point the Mills ratio is taken from its continued fraction.
const CF_SWITCH: f64 = 8.0;
const CF_TERMS: usize = 120;

#[inline]
pub fn std_normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

#[inline]
pub fn std_normal_log_pdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

#[inline]
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t * FRAC_1_SQRT_2)
}

/// Upper tail `Q(t) = 1 - Φ(t)`, accurate in relative terms for large `t`.
#[inline]
pub fn std_normal_sf(t: f64) -> f64 {
    0.5 * erfc(t * FRAC_1_SQRT_2)
}

/// Density of `N(mean, var)` at `u`.
#[inline]
pub fn normal_density(u: f64, mean: f64, var: f64) -> f64 {
    let z = u - mean;
    (-0.5 * z * z / var).exp() / (2.0 * PI * var).sqrt()
}

#[inline]
pub fn normal_log_density(u: f64, mean: f64, var: f64) -> f64 {
    let z = u - mean;
    -0.5 * z * z / var - 0.5 * var.ln() - LN_SQRT_2PI
}

/// Continued fraction `t + k0/(t + (k0+1)/(t + ...))`, evaluated backwards.
fn mills_tail_fraction(t: f64, k0: usize) -> f64 {
    let mut g = t;
    for k in (k0..=CF_TERMS).rev() {
        g = t + k as f64 / g;
    }
    g
}

/// Mills ratio `R(t) = Q(t) / φ(t)`.
pub fn mills_ratio(t: f64) -> f64 {
    if t < CF_SWITCH {
        std_normal_sf(t) / std_normal_pdf(t)
    } else {
        1.0 / mills_tail_fraction(t, 1)
    }
}

/// `1 - t R(t)`, which is positive and of order `1/t²` for large `t`.
fn mills_defect(t: f64) -> f64 {
    if t < CF_SWITCH {
        1.0 - t * mills_ratio(t)
    } else {
        let g = mills_tail_fraction(t, 2);
        1.0 / (t * g + 1.0)
    }
}

/// `ln Q(t)`.
pub fn log_std_normal_sf(t: f64) -> f64 {
    if t < CF_SWITCH {
        std_normal_sf(t).ln()
    } else {
        std_normal_log_pdf(t) + mills_ratio(t).ln()
    }
}

/// `ln ∫_0^∞ (k + z) φ_{m,s²}(z) dz` for `k ≥ 0`, `s > 0`.
///
/// This is the building block of the local-time case weights and of the
/// endpoint mixture normalisers. For `m ≪ 0` the integrand lives deep in the
/// Gaussian tail and the naive `(m + k) Q + s φ` cancels, so the tail branch
/// factors out `φ(-m/s)` and uses the Mills defect instead.
pub fn log_linear_gauss_tail(m: f64, s: f64, k: f64) -> f64 {
    let t = -m / s;
    if t <= 0.0 {
        ((m + k) * std_normal_sf(t) + s * std_normal_pdf(t)).ln()
    } else {
        s.ln() + std_normal_log_pdf(t) + (mills_defect(t) + (k / s) * mills_ratio(t)).ln()
    }
}

/// `ln(e^a - e^b)` for `a ≥ b`; `-inf` when they are equal.
#[inline]
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp_m1()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-16);
        // Φ(1.96) from a 40-digit table
        assert!((std_normal_cdf(1.96) - 0.975_002_104_851_780_0).abs() < 1e-14);
        assert!((std_normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        // Q(10) = 7.619853024160526e-24
        let q10 = std_normal_sf(10.0);
        assert!((q10 / 7.619_853_024_160_526e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mills_ratio_branches_agree_at_switch() {
        for &t in &[8.0, 8.5, 10.0, 20.0, 35.0] {
            let direct = std_normal_sf(t) / std_normal_pdf(t);
            let cf = 1.0 / mills_tail_fraction(t, 1);
            assert!(
                (direct / cf - 1.0).abs() < 1e-12,
                "t = {t}: {direct} vs {cf}"
            );
            let d_direct = 1.0 - t * direct;
            let d_cf = mills_defect(t);
            // the direct defect loses ~t² ulps to cancellation
            assert!(
                (d_direct / d_cf - 1.0).abs() < 1e-12 * t * t,
                "defect at {t}"
            );
        }
    }

    #[test]
    fn log_sf_continuous_and_finite_far_out() {
        let below = log_std_normal_sf(CF_SWITCH - 1e-9);
        let above = log_std_normal_sf(CF_SWITCH);
        assert!((below - above).abs() < 1e-7);
        let far = log_std_normal_sf(60.0);
        // ln Q(60) ≈ -60²/2 - ln(60 √(2π))
        assert!((far - (-1800.0 - (60.0 * (2.0 * PI).sqrt()).ln())).abs() < 1e-3);
    }

    #[test]
    fn linear_gauss_tail_matches_direct_integral() {
        // direct midpoint sum over a fine grid as a crude oracle
        for &(m, s, k) in &[
            (0.5f64, 1.0f64, 0.3f64),
            (-2.0, 0.7, 1.0),
            (-4.0, 0.5, 0.0),
            (3.0, 2.0, 2.0),
        ] {
            let hi = (m + 12.0 * s).max(12.0 * s);
            let n = 400_000;
            let h = hi / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let z = (i as f64 + 0.5) * h;
                acc += (k + z) * normal_density(z, m, s * s);
            }
            acc *= h;
            let got = log_linear_gauss_tail(m, s, k).exp();
            assert!(
                (got / acc - 1.0).abs() < 1e-6,
                "({m},{s},{k}): {got} vs {acc}"
            );
        }
    }

    #[test]
    fn linear_gauss_tail_far_tail_is_finite() {
        // m/s = -200: the mass is ~e^{-20000}, only the log is representable
        let l = log_linear_gauss_tail(-100.0, 0.5, 1.0);
        assert!(l.is_finite());
        assert!(l < -19_000.0);
    }
}
