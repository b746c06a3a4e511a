//! Euler–Maruyama baseline.

use crate::drift::DriftSpec;
use crate::error::{domain, Result};
use crate::rng::RngStream;
use rayon::prelude::*;

/// Terminal values of `X_{k+1} = X_k + α(X_k) dt + √dt Z_k` for `n` paths;
/// path `i` uses stream `i` of `seed`.
pub fn euler_maruyama(
    d: &DriftSpec,
    x: f64,
    t: f64,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t > 0.0 && dt <= t) {
        return Err(domain(format!("need 0 < dt <= T, got dt = {dt}, T = {t}")));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t {
        return Err(domain(format!("dt = {dt} does not divide T = {t}")));
    }
    let steps = steps as u64;
    let sq = dt.sqrt();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let mut y = x;
            for _ in 0..steps {
                y += d.alpha(y) * dt + sq * rng.standard_normal();
            }
            y
        })
        .collect())
}
