//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used as the independent oracle for every closed-form density in the crate
//! and by the endpoint-law normalisation checks.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let (value, err) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    while total_err > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: tol,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            return Err(Error::Quadrature {
                achieved: total_err,
                requested: tol,
            });
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
        // re-sum occasionally so cancellation in the running totals cannot stall
        if heap.len() % 256 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
    if !total.is_finite() {
        return Err(Error::Quadrature {
            achieved: f64::INFINITY,
            requested: tol,
        });
    }
    let total = heap.iter().map(|s| s.value).sum();
    let total_err = heap.iter().map(|s| s.err).sum();
    Ok(Quadrature {
        value: total,
        abs_error: total_err,
    })
}

/// `∫_a^b f` to absolute tolerance `tol`; either limit may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a > b {
        let q = integrate(f, b, a, tol)?;
        return Ok(Quadrature {
            value: -q.value,
            ..q
        });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adapt(&f, a, b, tol),
        (true, false) => adapt(
            &|t: f64| {
                let d = 1.0 - t;
                f(a + t / d) / (d * d)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => adapt(
            &|t: f64| {
                let d = 1.0 - t;
                f(b - t / d) / (d * d)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => adapt(
            &|t: f64| {
                let d = 1.0 - t * t;
                f(t / d) * (1.0 + t * t) / (d * d)
            },
            -1.0,
            1.0,
            tol,
        ),
    }
}

/// Integral over consecutive pieces `[p0, p1], [p1, p2], ...`, for integrands
/// with kinks or jumps at the break points.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> Result<Quadrature> {
    let pieces = points.len().saturating_sub(1).max(1) as f64;
    let mut acc = Quadrature {
        value: 0.0,
        abs_error: 0.0,
    };
    for w in points.windows(2) {
        let q = integrate(&f, w[0], w[1], tol / pieces)?;
        acc.value += q.value;
        acc.abs_error += q.abs_error;
    }
    Ok(acc)
}

/// `∫_{xa}^{xb} ∫_{ya}^{yb} f(x, y) dy dx` by nested adaptive rules.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (xa, xb): (f64, f64),
    (ya, yb): (f64, f64),
    tol: f64,
) -> Result<Quadrature> {
    let width = if xa.is_finite() && xb.is_finite() {
        (xb - xa).max(1.0)
    } else {
        10.0
    };
    let inner_tol = 0.1 * tol / width;
    let failure = std::cell::Cell::new(None);
    let q = integrate(
        |x| match integrate(|y| f(x, y), ya, yb, inner_tol) {
            Ok(q) => q.value,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        xa,
        xb,
        tol,
    )?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(q),
    }
}

/// CDF of an (unnormalised) density, tabulated on a grid and refined with one
/// Gauss–Kronrod rule inside the last cell at query time.
pub struct GridCdf<F> {
    density: F,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
}

impl<F: Fn(f64) -> f64> GridCdf<F> {
    /// Total mass over the tabulated range.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Unnormalised cumulative mass up to `x`.
    pub fn mass_below(&self, x: f64) -> f64 {
        if x <= self.nodes[0] {
            return 0.0;
        }
        let last = self.nodes.len() - 1;
        if x >= self.nodes[last] {
            return self.total;
        }
        let i = self.nodes.partition_point(|&n| n <= x) - 1;
        let (partial, _) = gk15(&self.density, self.nodes[i], x);
        self.cumulative[i] + partial
    }

    /// Normalised CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        (self.mass_below(x) / self.total).clamp(0.0, 1.0)
    }
}

/// Tabulates the CDF of `density` on `[lo, hi]` with `cells` uniform cells plus
/// the given break points (support edges, kinks).
pub fn quadrature_cdf<F: Fn(f64) -> f64>(
    density: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    cells: usize,
    tol: f64,
) -> Result<GridCdf<F>> {
    let cells = cells.max(1);
    let mut nodes: Vec<f64> = (0..=cells)
        .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
        .chain(breakpoints.iter().copied().filter(|&p| p > lo && p < hi))
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut cumulative = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    let cell_tol = tol / nodes.len() as f64;
    cumulative.push(0.0);
    for w in nodes.windows(2) {
        acc += integrate(&density, w[0], w[1], cell_tol)?.value;
        cumulative.push(acc);
    }
    Ok(GridCdf {
        density,
        nodes,
        cumulative,
        total: acc,
    })
}
