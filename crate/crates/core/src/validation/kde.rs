//! Gaussian kernel density estimates on a uniform grid.

use crate::special::std_normal_pdf;
use serde::Serialize;

pub const GRID_POINTS: usize = 512;
/// Kernel contributions beyond this many bandwidths are dropped (< 1e-14).
const KERNEL_REACH: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityGrid {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityGrid {
    /// Trapezoid integral of the tabulated values.
    pub fn mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Silverman's rule `0.9 min(sd, IQR/1.34) n^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    silverman_sorted(&xs)
}

fn silverman_sorted(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Estimate evaluated at the given points.
pub fn kde_at(samples: &[f64], bandwidth: f64, points: &[f64]) -> Vec<f64> {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    eval_sorted(&xs, bandwidth, points)
}

fn eval_sorted(xs: &[f64], h: f64, points: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (xs.len() as f64 * h);
    points
        .iter()
        .map(|&g| {
            let lo = xs.partition_point(|&x| x < g - KERNEL_REACH * h);
            let hi = xs.partition_point(|&x| x <= g + KERNEL_REACH * h);
            xs[lo..hi]
                .iter()
                .map(|&x| std_normal_pdf((g - x) / h))
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Uniform grid of `GRID_POINTS` points over `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64) -> Vec<f64> {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(|i| lo + step * i as f64).collect()
}

/// Kernel density estimate on a 512-point grid spanning the sample range
/// widened by three bandwidths on each side.
pub fn kde(samples: &[f64], bandwidth: Bandwidth) -> DensityGrid {
    assert!(samples.len() >= 2, "KDE needs at least two samples");
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let h = match bandwidth {
        Bandwidth::Silverman => silverman_sorted(&xs),
        Bandwidth::Fixed(h) => h,
    };
    let grid = uniform_grid(xs[0] - 3.0 * h, xs[xs.len() - 1] + 3.0 * h);
    let values = eval_sorted(&xs, h, &grid);
    DensityGrid {
        grid,
        values,
        bandwidth: h,
    }
}
