//! Lévy's identity: for Brownian motion from zero, `(|B_T|, L_T)` has the law
//! of `(M_T - W_T, M_T)` with `M` the running maximum of another Brownian
//! motion `W`.

use crate::rng::RngStream;

/// `n` exact draws of `(|B_T|, L_T)` for Brownian motion started at zero.
///
/// The maximum of a Brownian bridge from 0 to `w` over `[0, T]` is
/// `(w + √(w² - 2T ln U)) / 2`, so no time grid is involved.
pub fn levy_identity_oracle(t: f64, n: usize, rng: &mut RngStream) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            let w = t.sqrt() * rng.standard_normal();
            let m = 0.5 * (w + (w * w - 2.0 * t * rng.open01().ln()).sqrt());
            (m - w, m)
        })
        .collect()
}
