use serde::Serialize;

/// One skeleton node: time, process value and local time at 0 accumulated by `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkeletonPoint {
    pub t: f64,
    pub x: f64,
    pub l: f64,
}

impl SkeletonPoint {
    pub fn new(t: f64, x: f64, l: f64) -> Self {
        Self { t, x, l }
    }
}
