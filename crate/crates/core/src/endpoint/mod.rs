//! Exact draws of `(X_T, L_T)` from the local-time-tilted endpoint law
//!
//! ```text
//! g̃(b, l) = f_T^x(b, l) e^{A(b) - θl}  (l > 0),     g̃*(b) = f_{*,T}^x(b) e^{A(b)}  (l = 0).
//! ```

mod mixture;

pub use mixture::{MixtureComponent, MixtureEnvelope};

use crate::bridge::one_sided::sample_l_unchecked;
use crate::dist::{
    log_atom_density, log_joint_density, log_tilted_l_marginal, truncated_normal_above,
    truncated_normal_below,
};
use crate::drift::{tilted_mass, DriftSpec};
use crate::error::{check_ratio, domain, Error, Result};
use crate::rng::RngStream;
use crate::special::log_std_normal_sf;

/// Proposals tried before a sampler gives up.
const MAX_PROPOSALS: u64 = 100_000_000;

#[derive(Debug)]
enum Strategy {
    TwoStep,
    Mixture(MixtureEnvelope),
}

/// The tilted endpoint law for a drift, start `x` and horizon `T`.
#[derive(Debug)]
pub struct EndpointLaw {
    pub(crate) drift: DriftSpec,
    pub(crate) x: f64,
    pub(crate) t: f64,
    strategy: Strategy,
}

fn exhausted() -> Error {
    Error::RoundLimit {
        rounds: MAX_PROPOSALS,
        bound: 1.0 / MAX_PROPOSALS as f64,
    }
}

fn check_inputs(x: f64, t: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(domain(format!("start must be finite, got {x}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!(
            "horizon must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

impl EndpointLaw {
    /// Picks the two-step sampler when `θ ≥ 0` and the mixture otherwise.
    pub fn new(drift: DriftSpec, x: f64, t: f64) -> Result<Self> {
        if drift.theta() >= 0.0 {
            Self::two_step(drift, x, t)
        } else {
            Self::mixture(drift, x, t)
        }
    }

    /// Draw `X_T` from `h`, then `L_T` given `X_T`, and accept with `e^{-θ L_T}`.
    pub fn two_step(drift: DriftSpec, x: f64, t: f64) -> Result<Self> {
        check_inputs(x, t)?;
        if drift.theta() < 0.0 {
            return Err(domain(format!(
                "two-step sampler needs θ ≥ 0, got {}",
                drift.theta()
            )));
        }
        if drift.piecewise_linear_slopes().is_none() && drift.a_sup().is_none() {
            return Err(Error::UnsupportedDrift(
                "sampling h needs piecewise-linear A or a finite sup A".into(),
            ));
        }
        Ok(Self {
            drift,
            x,
            t,
            strategy: Strategy::TwoStep,
        })
    }

    /// Built-in mixture rejection sampler; any sign of `θ`.
    pub fn mixture(drift: DriftSpec, x: f64, t: f64) -> Result<Self> {
        check_inputs(x, t)?;
        let mut law = Self {
            drift,
            x,
            t,
            strategy: Strategy::TwoStep,
        };
        law.strategy = Strategy::Mixture(mixture::build_mixture(&law)?);
        Ok(law)
    }

    /// Mixture rejection with a caller-supplied envelope.
    ///
    /// The bound is checked on every proposal; a violation is an error.
    pub fn with_envelope(
        drift: DriftSpec,
        x: f64,
        t: f64,
        envelope: MixtureEnvelope,
    ) -> Result<Self> {
        check_inputs(x, t)?;
        if envelope.components.is_empty() || !envelope.log_k.is_finite() {
            return Err(domain("envelope needs components and a finite bound"));
        }
        Ok(Self {
            drift,
            x,
            t,
            strategy: Strategy::Mixture(envelope),
        })
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn envelope(&self) -> Option<&MixtureEnvelope> {
        match &self.strategy {
            Strategy::Mixture(e) => Some(e),
            Strategy::TwoStep => None,
        }
    }

    pub fn log_gtilde(&self, b: f64, l: f64) -> f64 {
        if !(l > 0.0) {
            return f64::NEG_INFINITY;
        }
        log_joint_density(self.x, self.t, b, l) + self.drift.antiderivative(b)
            - self.drift.theta() * l
    }

    pub fn log_gstar_tilde(&self, b: f64) -> f64 {
        log_atom_density(self.x, self.t, b) + self.drift.antiderivative(b)
    }

    /// `g̃(b, l)` for `l > 0`, zero otherwise. Unnormalised.
    pub fn gtilde(&self, b: f64, l: f64) -> f64 {
        self.log_gtilde(b, l).exp()
    }

    /// `g̃*(b)`, zero unless `x·b > 0`. Unnormalised.
    pub fn gstar_tilde(&self, b: f64) -> f64 {
        self.log_gstar_tilde(b).exp()
    }

    /// `ln g̃` on the continuous part for `l > 0` and `ln g̃*` for `l = 0`.
    pub(crate) fn log_gtilde_any(&self, b: f64, l: f64) -> f64 {
        if l == 0.0 {
            self.log_gstar_tilde(b)
        } else {
            self.log_gtilde(b, l)
        }
    }

    /// `∫ g̃(b, l) dl`, the continuous part of the `X_T` marginal.
    pub fn continuous_b_density(&self, b: f64) -> f64 {
        (self.drift.antiderivative(b)
            + log_tilted_l_marginal(self.x, self.t, b, self.drift.theta()))
        .exp()
    }

    /// Total unnormalised mass `∫∫ g̃ + ∫ g̃*`, by quadrature.
    pub fn total_mass(&self) -> Result<f64> {
        let slope = self
            .drift
            .alpha_plus()
            .abs()
            .max(self.drift.alpha_minus().abs())
            .max(1.0);
        tilted_mass(
            &self.drift,
            self.x,
            self.t,
            40.0 * self.t.sqrt() + 20.0 * self.t * slope,
        )
    }

    /// Exact draw with density `∝ e^{A(u)} φ_{x,T}(u)`.
    pub fn sample_xt_from_h(&self, rng: &mut RngStream) -> Result<f64> {
        let (x, t) = (self.x, self.t);
        let sd = t.sqrt();
        if let Some((a1, a2)) = self.drift.piecewise_linear_slopes() {
            let m1 = x + a1 * t;
            let m2 = x + a2 * t;
            let w1 = a1 * x + 0.5 * a1 * a1 * t + log_std_normal_sf(-m1 / sd);
            let w2 = a2 * x + 0.5 * a2 * a2 * t + log_std_normal_sf(m2 / sd);
            let p_pos = 1.0 / (1.0 + (w2 - w1).exp());
            return Ok(if rng.uniform() < p_pos {
                truncated_normal_above(m1, sd, 0.0, rng)
            } else {
                truncated_normal_below(m2, sd, 0.0, rng)
            });
        }
        let Some(sup) = self.drift.a_sup() else {
            return Err(Error::UnsupportedDrift(
                "A is neither piecewise linear nor bounded above".into(),
            ));
        };
        for _ in 0..MAX_PROPOSALS {
            let u = x + sd * rng.standard_normal();
            let ratio = check_ratio("endpoint h", (self.drift.antiderivative(u) - sup).exp())?;
            if rng.uniform() < ratio {
                return Ok(u);
            }
        }
        Err(exhausted())
    }

    fn sample_two_step(&self, rng: &mut RngStream) -> Result<(f64, f64)> {
        let theta = self.drift.theta();
        for _ in 0..MAX_PROPOSALS {
            let b = self.sample_xt_from_h(rng)?;
            let l = sample_l_unchecked(self.x, b, 0.0, self.t, rng);
            let ratio = check_ratio("endpoint local-time tilt", (-theta * l).exp())?;
            if rng.uniform() < ratio {
                return Ok((b, l));
            }
        }
        Err(exhausted())
    }

    fn sample_mixture(&self, env: &MixtureEnvelope, rng: &mut RngStream) -> Result<(f64, f64)> {
        let n = env.components.len();
        let log_n = (n as f64).ln();
        for _ in 0..MAX_PROPOSALS {
            let c = &env.components[rng.index(n)];
            let (b, l) = c.sample(rng)?;
            let ratio = (self.log_gtilde_any(b, l) - env.log_k + log_n - c.log_density(b, l)).exp();
            if !(ratio <= 1.0 + 1e-9) {
                return Err(Error::EnvelopeViolation { b, l, ratio });
            }
            if rng.uniform() <= ratio {
                return Ok((b, l));
            }
        }
        Err(exhausted())
    }

    /// Exact draw of `(X_T, L_T)`; `L_T = 0` marks the atom.
    pub fn sample(&self, rng: &mut RngStream) -> Result<(f64, f64)> {
        match &self.strategy {
            Strategy::TwoStep => self.sample_two_step(rng),
            Strategy::Mixture(env) => self.sample_mixture(env, rng),
        }
    }
}

/// Two-step sampler for `θ ≥ 0`.
pub fn sample_endpoint_theta_positive(
    law: &EndpointLaw,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if law.drift.theta() < 0.0 {
        return Err(domain("two-step sampler needs θ ≥ 0"));
    }
    law.sample_two_step(rng)
}

/// Mixture rejection sampler; uses the law's envelope, building one if needed.
pub fn sample_endpoint_theta_negative(
    law: &EndpointLaw,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    match &law.strategy {
        Strategy::Mixture(env) => law.sample_mixture(env, rng),
        Strategy::TwoStep => {
            let env = mixture::build_mixture(law)?;
            law.sample_mixture(&env, rng)
        }
    }
}
