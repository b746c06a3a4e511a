//! Drifts with a single discontinuity at zero.
//!
//! A drift is described by `α` off zero, its derivative, the antiderivative
//! `A(u) = ∫_0^u α`, the half jump `θ = (α(0+) - α(0-))/2` and constants
//! `κ ≤ (α² + α')/2` and `M ≥ (α² + α')/2 - κ`. The algorithm thins with
//! `φ(u) = (α²(u) + α'(u))/2 - κ` on `u ≠ 0`, and `φ(0) = -κ` by convention.

use crate::dist::{log_atom_density, log_tilted_l_marginal};
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// User-supplied drift functions. Values at exactly zero are never used for `α`.
pub trait DriftFunctions: Send + Sync {
    fn alpha(&self, u: f64) -> f64;
    fn alpha_prime(&self, u: f64) -> f64;
    /// `∫_0^u α(y) dy`
    fn antiderivative(&self, u: f64) -> f64;
}

/// Constants the library trusts but checks on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftBounds {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub kappa: f64,
    pub big_m: f64,
    /// `sup A`, if `A` is bounded above.
    pub a_sup: Option<f64>,
}

#[derive(Clone)]
pub enum DriftFamily {
    PiecewiseConstant { a1: f64, a2: f64 },
    PiecewiseSine { theta1: f64, theta2: f64 },
    Custom(Arc<dyn DriftFunctions>),
}

impl fmt::Debug for DriftFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PiecewiseConstant { a1, a2 } => write!(f, "PiecewiseConstant({a1}, {a2})"),
            Self::PiecewiseSine { theta1, theta2 } => {
                write!(f, "PiecewiseSine({theta1}, {theta2})")
            }
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DriftSpec {
    family: DriftFamily,
    theta: f64,
    kappa: f64,
    big_m: f64,
    alpha_plus: f64,
    alpha_minus: f64,
    a_sup: Option<f64>,
    a_inf: Option<f64>,
}

/// `α(u) = a1` for `u ≥ 0`, `a2` for `u < 0`.
pub fn make_piecewise_constant(a1: f64, a2: f64) -> DriftSpec {
    DriftSpec {
        family: DriftFamily::PiecewiseConstant { a1, a2 },
        theta: 0.5 * (a1 - a2),
        kappa: 0.5 * (a1 * a1).min(a2 * a2),
        big_m: 0.5 * (a1 * a1 - a2 * a2).abs(),
        alpha_plus: a1,
        alpha_minus: a2,
        a_sup: if a1 <= 0.0 && a2 >= 0.0 {
            Some(0.0)
        } else {
            None
        },
        a_inf: if a1 >= 0.0 && a2 <= 0.0 {
            Some(0.0)
        } else {
            None
        },
    }
}

/// `α(u) = sin(u - θ1)` for `u ≥ 0`, `sin(u - θ2)` for `u < 0`.
pub fn make_piecewise_sine(theta1: f64, theta2: f64) -> DriftSpec {
    let (c1, c2) = (theta1.cos(), theta2.cos());
    DriftSpec {
        family: DriftFamily::PiecewiseSine { theta1, theta2 },
        theta: 0.5 * (theta2.sin() - theta1.sin()),
        // sin² + cos = 1 + c - c² ranges over [-1, 5/4]
        kappa: -0.5,
        big_m: 9.0 / 8.0,
        alpha_plus: -theta1.sin(),
        alpha_minus: -theta2.sin(),
        a_sup: Some(c1.max(c2) + 1.0),
        a_inf: Some(c1.min(c2) - 1.0),
    }
}

/// A drift from user functions; `θ` is derived from the stated one-sided limits.
pub fn make_custom(functions: Arc<dyn DriftFunctions>, bounds: DriftBounds) -> DriftSpec {
    DriftSpec {
        family: DriftFamily::Custom(functions),
        theta: 0.5 * (bounds.alpha_plus - bounds.alpha_minus),
        kappa: bounds.kappa,
        big_m: bounds.big_m,
        alpha_plus: bounds.alpha_plus,
        alpha_minus: bounds.alpha_minus,
        a_sup: bounds.a_sup,
        a_inf: None,
    }
}

impl DriftSpec {
    pub fn family(&self) -> &DriftFamily {
        &self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn alpha_plus(&self) -> f64 {
        self.alpha_plus
    }

    pub fn alpha_minus(&self) -> f64 {
        self.alpha_minus
    }

    pub fn a_sup(&self) -> Option<f64> {
        self.a_sup
    }

    pub fn a_inf(&self) -> Option<f64> {
        self.a_inf
    }

    /// Slopes `(a1, a2)` when `A` is linear on each half-line.
    pub fn piecewise_linear_slopes(&self) -> Option<(f64, f64)> {
        match self.family {
            DriftFamily::PiecewiseConstant { a1, a2 } => Some((a1, a2)),
            _ => None,
        }
    }

    pub fn alpha(&self, u: f64) -> f64 {
        match &self.family {
            DriftFamily::PiecewiseConstant { a1, a2 } => {
                if u >= 0.0 {
                    *a1
                } else {
                    *a2
                }
            }
            DriftFamily::PiecewiseSine { theta1, theta2 } => {
                (u - if u >= 0.0 { theta1 } else { theta2 }).sin()
            }
            DriftFamily::Custom(f) => f.alpha(u),
        }
    }

    pub fn alpha_prime(&self, u: f64) -> f64 {
        match &self.family {
            DriftFamily::PiecewiseConstant { .. } => 0.0,
            DriftFamily::PiecewiseSine { theta1, theta2 } => {
                (u - if u >= 0.0 { theta1 } else { theta2 }).cos()
            }
            DriftFamily::Custom(f) => f.alpha_prime(u),
        }
    }

    /// `A(u) = ∫_0^u α(y) dy`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        match &self.family {
            DriftFamily::PiecewiseConstant { a1, a2 } => u * if u >= 0.0 { a1 } else { a2 },
            DriftFamily::PiecewiseSine { theta1, theta2 } => {
                let th = if u >= 0.0 { theta1 } else { theta2 };
                th.cos() - (u - th).cos()
            }
            DriftFamily::Custom(f) => f.antiderivative(u),
        }
    }

    /// Thinning function; `-κ` at zero.
    pub fn phi(&self, u: f64) -> f64 {
        if u == 0.0 {
            return -self.kappa;
        }
        let a = self.alpha(u);
        0.5 * (a * a + self.alpha_prime(u)) - self.kappa
    }
}

pub fn phi(d: &DriftSpec, u: f64) -> f64 {
    d.phi(u)
}

/// Outcome of the grid checks; every field describes a passed check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub grid_points: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub big_m: f64,
    pub a_jump_at_zero: f64,
    /// `∫∫ f e^{A - lθ} + ∫ f* e^{A}` over `x ± width`, and over `x ± 2 width`.
    pub tilted_mass: f64,
    pub tilted_mass_wide: f64,
    pub notes: Vec<String>,
}

const PHI_SLACK: f64 = 1e-12;

/// Checks the drift conditions that can be checked numerically.
///
/// Passing means "not falsified on this grid"; the martingale condition on the
/// Girsanov density is the caller's obligation.
pub fn validate_assumptions(
    d: &DriftSpec,
    grid: &[f64],
    x: f64,
    t: f64,
) -> Result<AssumptionReport> {
    if grid.is_empty() {
        return Err(Error::Validation("empty validation grid".into()));
    }
    if !(t > 0.0 && t.is_finite() && x.is_finite()) {
        return Err(Error::Validation(format!(
            "need finite x and T > 0, got ({x}, {t})"
        )));
    }
    for (name, v) in [("theta", d.theta), ("kappa", d.kappa), ("M", d.big_m)] {
        if !v.is_finite() {
            return Err(Error::Validation(format!("{name} is not finite")));
        }
    }
    if d.big_m < 0.0 {
        return Err(Error::Validation(format!(
            "M must be nonnegative, got {}",
            d.big_m
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut used = 0;
    for &u in grid.iter().filter(|u| **u != 0.0) {
        let p = d.phi(u);
        if !(p >= -PHI_SLACK) {
            return Err(Error::Validation(format!(
                "phi({u}) = {p} is negative: kappa too large"
            )));
        }
        if !(p <= d.big_m + PHI_SLACK) {
            return Err(Error::Validation(format!(
                "phi({u}) = {p} exceeds M = {}",
                d.big_m
            )));
        }
        if let Some(s) = d.a_sup {
            let a = d.antiderivative(u);
            if a > s + PHI_SLACK {
                return Err(Error::Validation(format!(
                    "A({u}) = {a} exceeds stated sup {s}"
                )));
            }
        }
        lo = lo.min(p);
        hi = hi.max(p);
        used += 1;
    }
    let eps = 1e-9;
    let side = (d.alpha(eps) - d.alpha_plus)
        .abs()
        .max((d.alpha(-eps) - d.alpha_minus).abs());
    if side > 1e-6 {
        return Err(Error::Validation(format!(
            "one-sided limits of alpha disagree with the stated values by {side}"
        )));
    }
    let a0 = d.antiderivative(0.0);
    let jump = (d.antiderivative(eps) - a0)
        .abs()
        .max((d.antiderivative(-eps) - a0).abs());
    let slope = d.alpha_plus.abs().max(d.alpha_minus.abs()).max(1.0);
    if a0.abs() > 1e-12 || jump > 1e-12 + eps * slope {
        return Err(Error::Validation(format!(
            "A is not continuous with A(0) = 0 (A(0) = {a0})"
        )));
    }

    let width = 20.0 * t.sqrt() + 10.0 * t * slope;
    let mass = tilted_mass(d, x, t, width)?;
    let wide = tilted_mass(d, x, t, 2.0 * width)?;
    if !(mass.is_finite() && mass > 0.0 && wide.is_finite()) {
        return Err(Error::Validation(format!(
            "tilted endpoint law is not normalisable ({mass})"
        )));
    }
    let mut notes =
        vec!["the Girsanov density must be a true martingale; this is not checked".into()];
    if (wide - mass).abs() > 1e-6 * mass {
        notes.push(format!(
            "tilted mass not settled: {mass} on x ± {width}, {wide} on twice that; tails may be heavy"
        ));
    }
    Ok(AssumptionReport {
        grid_points: used,
        phi_min: lo,
        phi_max: hi,
        big_m: d.big_m,
        a_jump_at_zero: jump,
        tilted_mass: mass,
        tilted_mass_wide: wide,
        notes,
    })
}

/// Mass of the unnormalised tilted endpoint law over `b ∈ x ± width`.
pub(crate) fn tilted_mass(d: &DriftSpec, x: f64, t: f64, width: f64) -> Result<f64> {
    let theta = d.theta;
    let cont = |b: f64| (d.antiderivative(b) + log_tilted_l_marginal(x, t, b, theta)).exp();
    let atom = |b: f64| (d.antiderivative(b) + log_atom_density(x, t, b)).exp();
    let mut pts = vec![x - width, x + width];
    if 0.0 > x - width && 0.0 < x + width {
        pts.insert(1, 0.0);
    }
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(cont, w[0], w[1], 1e-11)?.value;
        total += integrate(atom, w[0], w[1], 1e-11)?.value;
    }
    Ok(total)
}
