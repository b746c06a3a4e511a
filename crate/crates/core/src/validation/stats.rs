//! Goodness-of-fit statistics.

use statrs::function::gamma::gamma_ur;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestStatistic {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov distribution tail `P(K > λ)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value with Stephens' finite-sample correction for effective size `ne`.
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let rn = ne.sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

/// One-sample KS test of `samples` against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> TestStatistic {
    assert!(!samples.is_empty(), "KS test needs samples");
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    TestStatistic {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestStatistic {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs samples");
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    TestStatistic {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
    }
}

/// Critical value of the one-sample KS statistic at level 0.05 for `n` draws.
pub fn ks_critical_005(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub cells: usize,
}

/// Pearson χ² test of observed counts against cell probabilities.
///
/// Mass not covered by `probs` forms an extra cell with zero observed count
/// unless the caller accounts for it. Adjacent cells are pooled until each
/// expected count is at least 5.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut obs = observed.to_vec();
    let mut p = probs.to_vec();
    let covered: f64 = probs.iter().sum();
    if 1.0 - covered > 1e-12 {
        obs.push(0);
        p.push(1.0 - covered);
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &pi) in obs.iter().zip(&p) {
        o_acc += o as f64;
        e_acc += pi * nf;
        if e_acc >= 5.0 {
            pooled.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => pooled.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = pooled.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = pooled.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, statistic / 2.0)
    };
    ChiSquare {
        statistic,
        df,
        p_value,
        cells: pooled.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::special::std_normal_cdf;

    #[test]
    fn kolmogorov_tail_reference() {
        // P(K > 1.36) ≈ 0.0494, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 3e-4);
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let a = [0.3, -1.0, 2.0, 0.5];
        let t = ks_two_sample(&a, &a);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn one_sample_against_true_cdf() {
        let mut rng = RngStream::new(41, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.standard_normal()).collect();
        let t = ks_one_sample(&xs, std_normal_cdf);
        assert!(t.p_value > 0.001, "{t:?}");
        let shifted = ks_one_sample(&xs, |x| std_normal_cdf(x - 0.1));
        assert!(shifted.p_value < 1e-6);
    }

    #[test]
    fn two_sample_power() {
        let mut rng = RngStream::new(42, 0);
        let a: Vec<f64> = (0..100_000).map(|_| rng.standard_normal()).collect();
        let b: Vec<f64> = (0..100_000).map(|_| 0.05 + rng.standard_normal()).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let r = chi_square(&[48, 50, 2, 0], &[0.5, 0.49, 0.005, 0.005]);
        assert_eq!(r.cells, 2);
        assert_eq!(r.df, 1);
        // pooled counts 48 and 52 against 50 and 50
        assert!((r.statistic - 0.16).abs() < 1e-12);
    }

    #[test]
    fn chi_square_uniform_die() {
        let mut rng = RngStream::new(43, 0);
        let mut counts = [0u64; 6];
        for _ in 0..60_000 {
            counts[rng.index(6)] += 1;
        }
        let r = chi_square(&counts, &[1.0 / 6.0; 6]);
        assert_eq!(r.df, 5);
        assert!(r.p_value > 0.001);
    }
}
