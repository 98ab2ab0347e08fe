//! Maps between the chart coordinates of each grid and the Euclidean plane.

use super::state::Chart;
use crate::error::{Error, Result};

/// Euclidean coordinates of the chart point `(c1, c2)`.
///
/// Polar: `(x, y) ↦ (x cos y, x sin y)`. Parabolic: `(u, v) ↦ (½(u² − v²), uv)`.
/// Elliptic: `(u, v) ↦ (c√((u−1)(v−1)), c√(−uv))` on the branch where both
/// roots are real (`u < 0 < v < 1` or `v < 0 < u < 1`).
pub fn to_cartesian(chart: Chart, c1: f64, c2: f64) -> Result<(f64, f64)> {
    match chart {
        Chart::Cartesian => Ok((c1, c2)),
        Chart::Polar => Ok((c1 * c2.cos(), c1 * c2.sin())),
        Chart::ParabolicUV => Ok((0.5 * (c1 * c1 - c2 * c2), c1 * c2)),
        Chart::EllipticUV { c } => {
            let (u, v) = (c1, c2);
            let xx = (u - 1.0) * (v - 1.0);
            let yy = -u * v;
            if !(xx >= 0.0 && yy >= 0.0) {
                return Err(Error::ChartDegenerate(format!("elliptic point ({u}, {v}) has no real image")));
            }
            Ok((c * xx.sqrt(), c * yy.sqrt()))
        }
    }
}

/// Chart coordinates of the Euclidean point `(x, y)`.
///
/// Polar angles lie in `(−π, π]`; the parabolic inverse takes `u ≥ 0`; the
/// elliptic inverse takes `u ≤ v` and needs `x, y ≥ 0`.
pub fn from_cartesian(chart: Chart, x: f64, y: f64) -> Result<(f64, f64)> {
    match chart {
        Chart::Cartesian => Ok((x, y)),
        Chart::Polar => Ok((x.hypot(y), y.atan2(x))),
        Chart::ParabolicUV => {
            let r = x.hypot(y);
            let u = (r + x).max(0.0).sqrt();
            let v = (r - x).max(0.0).sqrt();
            Ok((u, if y < 0.0 { -v } else { v }))
        }
        Chart::EllipticUV { c } => {
            if x < 0.0 || y < 0.0 {
                return Err(Error::ChartDegenerate(format!("elliptic inverse needs x, y >= 0, got ({x}, {y})")));
            }
            // u, v are the roots of z² − s z + p with p = uv, s = u + v
            let p = -(y * y) / (c * c);
            let s = p + 1.0 - (x * x) / (c * c);
            let disc = (s * s - 4.0 * p).max(0.0).sqrt();
            Ok((0.5 * (s - disc), 0.5 * (s + disc)))
        }
    }
}

/// `∂(X, Y) / ∂(c1, c2)` as rows `[[X_1, X_2], [Y_1, Y_2]]`.
pub fn jacobian(chart: Chart, c1: f64, c2: f64) -> Result<[[f64; 2]; 2]> {
    match chart {
        Chart::Cartesian => Ok([[1.0, 0.0], [0.0, 1.0]]),
        Chart::Polar => Ok([[c2.cos(), -c1 * c2.sin()], [c2.sin(), c1 * c2.cos()]]),
        Chart::ParabolicUV => Ok([[c1, -c2], [c2, c1]]),
        Chart::EllipticUV { c } => {
            let (u, v) = (c1, c2);
            let (x, y) = to_cartesian(chart, u, v)?;
            if x == 0.0 || y == 0.0 {
                return Err(Error::ChartDegenerate(format!("elliptic jacobian singular at ({u}, {v})")));
            }
            let c2 = c * c;
            Ok([[c2 * (v - 1.0) / (2.0 * x), c2 * (u - 1.0) / (2.0 * x)], [-c2 * v / (2.0 * y), -c2 * u / (2.0 * y)]])
        }
    }
}
