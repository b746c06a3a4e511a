//! Mixture envelope for the tilted endpoint law.
//!
//! With `w = l + |b| + |x|` and `m = -θT`, the continuous part on the side
//! where `A(b) = a b` is
//!
//! ```text
//! g̃(b, l) = C e^{r|b|} w φ_{m,T}(w),   C = e^{m²/2T + θ|x|} / T,   r = a·sign(b) + θ,
//! ```
//!
//! so each component draws `|b|` from a law matching `e^{r|b|}` on a band and
//! then `w` from `w φ_{m,T}(w)` above `|b| + |x|`. The atom part
//! `φ_{x,T}(b)(1 - e^{-2xb/T}) e^{ab}` lives on the side of `x` and is covered by
//! a uniform piece near zero and a Gaussian tail.

use super::EndpointLaw;
use crate::dist::truncated_normal_above;
use crate::error::{check_ratio, Error, Result};
use crate::rng::RngStream;
use crate::special::{log_linear_gauss_tail, log_std_normal_sf, mills_ratio, normal_log_density};

/// One piece of a mixture proposal for `(b, l)`; `l = 0` marks the atom.
pub trait MixtureComponent: Send + Sync {
    fn sample(&self, rng: &mut RngStream) -> Result<(f64, f64)>;
    /// `ln h(b, l)` with respect to `db dl`, or `db` on the atom; `-∞` off support.
    fn log_density(&self, b: f64, l: f64) -> f64;
}

/// Equal-weight mixture with bound `K`: every proposal satisfies
/// `g̃ ≤ K h_i / n` on the support of the component it came from.
pub struct MixtureEnvelope {
    pub components: Vec<Box<dyn MixtureComponent>>,
    pub log_k: f64,
}

impl std::fmt::Debug for MixtureEnvelope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixtureEnvelope")
            .field("components", &self.components.len())
            .field("log_k", &self.log_k)
            .finish()
    }
}

/// Draws `w` with density `∝ w φ_{m,T}(w)` on `(w0, ∞)`.
fn sample_w(m: f64, t: f64, w0: f64, rng: &mut RngStream) -> Result<f64> {
    let sd = t.sqrt();
    let lambda = 1.0 / (w0.max(m) + sd);
    let mean = m + lambda * t;
    loop {
        let w = truncated_normal_above(mean, sd, w0, rng);
        let y = lambda * w;
        if rng.uniform() < check_ratio("endpoint local time", y * (1.0 - y).exp())? {
            return Ok(w);
        }
    }
}

/// `ln ∫_{w0}^∞ w φ_{m,T}(w) dw`.
fn log_w_mass(m: f64, t: f64, w0: f64) -> f64 {
    log_linear_gauss_tail(m - w0, t.sqrt(), w0)
}

#[derive(Clone, Copy, Debug)]
struct Shape {
    m: f64,
    t: f64,
    abs_x: f64,
}

impl Shape {
    fn log_conditional(&self, beta: f64, l: f64) -> f64 {
        let w0 = beta + self.abs_x;
        let w = w0 + l;
        w.ln() + normal_log_density(w, self.m, self.t) - log_w_mass(self.m, self.t, w0)
    }

    fn draw_l(&self, beta: f64, rng: &mut RngStream) -> Result<f64> {
        let w0 = beta + self.abs_x;
        let l = sample_w(self.m, self.t, w0, rng)? - w0;
        Ok(if l > 0.0 { l } else { f64::MIN_POSITIVE })
    }
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    /// `|b| ∈ [0, xi]`, density `∝ e^{r|b|}`.
    InnerBand { r: f64, xi: f64, log_z: f64 },
    /// `|b| > xi`, density `N(mu, T)` truncated.
    TailBand { mu: f64, xi: f64, log_z: f64 },
    /// Atom, `|b|` uniform on `[0, xi]`.
    InnerAtom { xi: f64 },
    /// Atom, `|b| > xi`, `N(mu, T)` truncated.
    TailAtom { mu: f64, xi: f64, log_z: f64 },
}

#[derive(Clone, Copy, Debug)]
struct BuiltinComponent {
    side: f64,
    piece: Piece,
    shape: Shape,
}

impl BuiltinComponent {
    fn on_side(&self, b: f64) -> bool {
        if self.side > 0.0 {
            b >= 0.0
        } else {
            b < 0.0
        }
    }

    fn draw_beta(&self, rng: &mut RngStream) -> f64 {
        let sd = self.shape.t.sqrt();
        match self.piece {
            Piece::InnerBand { r, xi, .. } => {
                let u = rng.open01();
                if (r * xi).abs() < 1e-12 {
                    u * xi
                } else {
                    (u * (r * xi).exp_m1()).ln_1p() / r
                }
            }
            Piece::TailBand { mu, xi, .. } | Piece::TailAtom { mu, xi, .. } => {
                truncated_normal_above(mu, sd, xi, rng)
            }
            Piece::InnerAtom { xi } => rng.open01() * xi,
        }
    }

    fn log_beta_density(&self, beta: f64) -> f64 {
        match self.piece {
            Piece::InnerBand { r, xi, log_z } => {
                if beta <= xi {
                    r * beta - log_z
                } else {
                    f64::NEG_INFINITY
                }
            }
            Piece::TailBand { mu, xi, log_z } | Piece::TailAtom { mu, xi, log_z } => {
                if beta > xi {
                    normal_log_density(beta, mu, self.shape.t) - log_z
                } else {
                    f64::NEG_INFINITY
                }
            }
            Piece::InnerAtom { xi } => {
                if beta <= xi {
                    -xi.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self.piece, Piece::InnerAtom { .. } | Piece::TailAtom { .. })
    }
}

impl MixtureComponent for BuiltinComponent {
    fn sample(&self, rng: &mut RngStream) -> Result<(f64, f64)> {
        let beta = self.draw_beta(rng);
        let b = self.side * beta;
        if self.is_atom() {
            return Ok((b, 0.0));
        }
        Ok((b, self.shape.draw_l(beta, rng)?))
    }

    fn log_density(&self, b: f64, l: f64) -> f64 {
        if !self.on_side(b) || (l == 0.0) != self.is_atom() || l < 0.0 {
            return f64::NEG_INFINITY;
        }
        let beta = b.abs();
        let lb = self.log_beta_density(beta);
        if self.is_atom() {
            lb
        } else {
            lb + self.shape.log_conditional(beta, l)
        }
    }
}

/// `ln ∫_0^xi e^{rβ} dβ`.
fn log_exp_integral(r: f64, xi: f64) -> f64 {
    if (r * xi).abs() < 1e-12 {
        xi.ln()
    } else if r > 0.0 {
        r * xi + (-(-r * xi).exp_m1()).ln() - r.ln()
    } else {
        ((r * xi).exp_m1() / r).ln()
    }
}

const GRID: usize = 200;

/// Builds the envelope for a drift with piecewise-linear `A`.
pub(crate) fn build_mixture(law: &EndpointLaw) -> Result<MixtureEnvelope> {
    let (a1, a2) = law.drift.piecewise_linear_slopes().ok_or_else(|| {
        Error::UnsupportedDrift(
            "the built-in mixture needs a piecewise-constant drift; supply an envelope".into(),
        )
    })?;
    let (x, t, theta) = (law.x, law.t, law.drift.theta());
    let sd = t.sqrt();
    let abs_x = x.abs();
    let m = -theta * t;
    let shape = Shape { m, t, abs_x };
    // ln C with C = e^{m²/2T + θ|x|}/T
    let log_c = m * m / (2.0 * t) + theta * abs_x - t.ln();
    let xi = abs_x + sd;

    let mut comps: Vec<(BuiltinComponent, f64)> = Vec::new();
    for (side, a) in [(1.0, a1), (-1.0, a2)] {
        let r = a * side + theta;
        let log_zq = log_exp_integral(r, xi);
        let inner = BuiltinComponent {
            side,
            piece: Piece::InnerBand {
                r,
                xi,
                log_z: log_zq,
            },
            shape,
        };
        comps.push((inner, log_c + log_zq + log_w_mass(m, t, abs_x)));

        let mu = m - abs_x + r * t;
        let log_qt = log_std_normal_sf((xi - mu) / sd);
        let tail = BuiltinComponent {
            side,
            piece: Piece::TailBand {
                mu,
                xi,
                log_z: log_qt,
            },
            shape,
        };
        // ratio ≤ C e^{(μ² - (m-|x|)²)/2T} Q((ξ-μ)/√T) (T + max(m,0) √T R(t_ξ))
        let t_xi = (xi + abs_x - m) / sd;
        let lin = t + m.max(0.0) * sd * mills_ratio(t_xi);
        let mx = m - abs_x;
        comps.push((
            tail,
            log_c + (mu * mu - mx * mx) / (2.0 * t) + log_qt + lin.ln(),
        ));
    }
    if x != 0.0 {
        let side = x.signum();
        let a = if x > 0.0 { a1 } else { a2 };
        let c = a * side;
        let mu = abs_x + c * t;
        let log_shift = c * abs_x + 0.5 * c * c * t;
        let xi3 = abs_x + sd;
        let peak = mu.clamp(0.0, xi3);
        let inner = BuiltinComponent {
            side,
            piece: Piece::InnerAtom { xi: xi3 },
            shape,
        };
        comps.push((
            inner,
            xi3.ln() + log_shift + normal_log_density(peak, mu, t),
        ));
        let log_qa = log_std_normal_sf((xi3 - mu) / sd);
        let tail = BuiltinComponent {
            side,
            piece: Piece::TailAtom {
                mu,
                xi: xi3,
                log_z: log_qa,
            },
            shape,
        };
        comps.push((tail, log_shift + log_qa));
    }
    let n = comps.len() as f64;
    let log_k = n.ln() + comps.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    verify_on_grid(law, &comps, log_k)?;
    Ok(MixtureEnvelope {
        components: comps
            .into_iter()
            .map(|(c, _)| Box::new(c) as Box<dyn MixtureComponent>)
            .collect(),
        log_k,
    })
}

/// Checks `g̃ ≤ K h_i / n` on a grid over each component's support.
fn verify_on_grid(law: &EndpointLaw, comps: &[(BuiltinComponent, f64)], log_k: f64) -> Result<()> {
    let n = comps.len() as f64;
    let sd = law.t.sqrt();
    let reach = 12.0 * sd + law.x.abs() + law.drift.theta().abs() * law.t;
    for (c, _) in comps {
        let (lo, hi) = match c.piece {
            Piece::InnerBand { xi, .. } | Piece::InnerAtom { xi } => (0.0, xi),
            Piece::TailBand { mu, xi, .. } | Piece::TailAtom { mu, xi, .. } => {
                (xi, xi + reach + mu.abs())
            }
        };
        let betas = (0..GRID).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / GRID as f64);
        for beta in betas {
            let b = c.side * beta;
            let ls: Vec<f64> = if c.is_atom() {
                vec![0.0]
            } else {
                (0..GRID)
                    .map(|j| reach * (j as f64 + 0.5) / GRID as f64)
                    .collect()
            };
            for l in ls {
                let ratio = (law.log_gtilde_any(b, l) - log_k + n.ln() - c.log_density(b, l)).exp();
                if !(ratio <= 1.0 + 1e-9) {
                    return Err(Error::EnvelopeViolation { b, l, ratio });
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::make_piecewise_constant;
    use crate::quadrature::{integrate, integrate_2d};

    #[test]
    fn exp_integral_cases() {
        for &(r, xi) in &[(0.7, 1.3), (-2.0, 0.5), (1e-15, 2.0), (30.0, 2.0)] {
            let direct = integrate(|b| (r * b).exp(), 0.0, xi, 1e-12).unwrap().value;
            assert!((log_exp_integral(r, xi) - direct.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn components_are_normalised() {
        let law = EndpointLaw::mixture(make_piecewise_constant(0.3, 0.9), 0.5, 1.0).unwrap();
        let env = law.envelope().unwrap();
        assert_eq!(env.components.len(), 6);
        let cuts = [
            -40.0, -10.0, -4.0, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0, 10.0, 40.0,
        ];
        for c in &env.components {
            let mut atom = 0.0;
            let mut cont = 0.0;
            for w in cuts.windows(2) {
                atom += integrate(|b| c.log_density(b, 0.0).exp(), w[0], w[1], 1e-12)
                    .unwrap()
                    .value;
                cont += integrate_2d(
                    |b, l| c.log_density(b, l).exp(),
                    (w[0], w[1]),
                    (0.0, f64::INFINITY),
                    1e-11,
                )
                .unwrap()
                .value;
            }
            assert!((atom + cont - 1.0).abs() < 1e-8, "mass {}", atom + cont);
        }
    }

    #[test]
    fn start_at_zero_has_four_components() {
        let law = EndpointLaw::mixture(make_piecewise_constant(0.3, 0.9), 0.0, 1.0).unwrap();
        assert_eq!(law.envelope().unwrap().components.len(), 4);
    }

    #[test]
    fn envelope_covers_tilted_law_densely() {
        for &(a1, a2, x) in &[
            (0.3, 0.9, 0.0),
            (0.3, 0.9, -1.0),
            (0.2, -0.9, 0.5),
            (-1.5, 2.0, 2.0),
        ] {
            let law = EndpointLaw::mixture(make_piecewise_constant(a1, a2), x, 0.7).unwrap();
            let env = law.envelope().unwrap();
            let n = env.components.len() as f64;
            for i in 0..400 {
                let b = -8.0 + 16.0 * i as f64 / 399.0;
                for j in 0..=200 {
                    let l = 6.0 * j as f64 / 200.0;
                    let g = law.log_gtilde_any(b, l);
                    if g == f64::NEG_INFINITY {
                        continue;
                    }
                    let h = env
                        .components
                        .iter()
                        .map(|c| c.log_density(b, l))
                        .fold(f64::NEG_INFINITY, f64::max);
                    assert!(
                        g - env.log_k + n.ln() - h <= 1e-9,
                        "({a1},{a2},{x}) at ({b},{l})"
                    );
                }
            }
        }
    }

    #[test]
    fn sampled_w_stays_above_threshold() {
        let mut rng = RngStream::new(61, 0);
        for &(m, w0) in &[(0.3, 0.0), (-2.0, 1.0), (5.0, 0.1), (0.0, 9.0)] {
            for _ in 0..2000 {
                assert!(sample_w(m, 1.0, w0, &mut rng).unwrap() > w0);
            }
        }
    }

    #[test]
    fn w_mass_matches_quadrature() {
        use crate::special::normal_density;
        for &(m, t, w0) in &[(0.3, 1.0, 0.0), (-0.5, 0.5, 1.2), (2.0, 2.0, 0.3)] {
            let q = integrate(|w| w * normal_density(w, m, t), w0, f64::INFINITY, 1e-13).unwrap();
            assert!((log_w_mass(m, t, w0) - q.value.ln()).abs() < 1e-9);
        }
    }
}
