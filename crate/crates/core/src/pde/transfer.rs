use std::f64::consts::TAU;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::chart::{from_cartesian, to_cartesian};
use super::state::{grid_spacing, Boundary, Chart, ConformalGridState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Linear,
    Cubic,
}

/// Node layout of a transfer target.
#[derive(Debug, Clone)]
pub struct TargetGrid {
    pub chart: Chart,
    pub shape: [usize; 2],
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub bc: Boundary,
}

/// Source chart coordinates of a target node. Polar angles are shifted by
/// whole turns into the source's angular range.
fn source_coords(source: &ConformalGridState, target: Chart, a: f64, b: f64) -> Result<(f64, f64)> {
    if source.chart == target {
        return Ok((a, b));
    }
    let (x, y) = to_cartesian(target, a, b)?;
    let (mut c1, mut c2) = from_cartesian(source.chart, x, y)?;
    if source.chart == Chart::Polar {
        let lo = source.origin[1];
        c2 = lo + (c2 - lo).rem_euclid(TAU);
        if c2 - lo > TAU - 1e-12 {
            c2 = lo;
        }
    }
    if source.chart == Chart::ParabolicUV && c1 < source.origin[0] - 1e-12 {
        // (u, v) and (−u, −v) have the same image
        c1 = -c1;
        c2 = -c2;
    }
    Ok((c1, c2))
}

/// Resamples the scalar `h` on the target grid. `interpolation_error` on the
/// result is the largest gap between linear and cubic interpolation.
pub fn chart_transfer(source: &ConformalGridState, target: &TargetGrid, interp: Interpolation) -> Result<ConformalGridState> {
    let spacing = grid_spacing(target.shape, target.lower, target.upper, target.bc.is_periodic())?;
    let mut h = Array2::zeros((target.shape[0], target.shape[1]));
    let mut gap = 0.0f64;
    for ((i, j), slot) in h.indexed_iter_mut() {
        let a = target.lower[0] + i as f64 * spacing[0];
        let b = target.lower[1] + j as f64 * spacing[1];
        let (c1, c2) = source_coords(source, target.chart, a, b)?;
        let lin = source.interpolate(&source.h, c1, c2, false).map_err(|_| Error::Uncovered(a, b))?;
        let cub = source.interpolate(&source.h, c1, c2, true).map_err(|_| Error::Uncovered(a, b))?;
        gap = gap.max((lin - cub).abs());
        *slot = match interp {
            Interpolation::Linear => lin,
            Interpolation::Cubic => cub,
        };
    }
    let mut out = ConformalGridState::new(target.chart, h, spacing, target.lower, source.t, target.bc.clone())?;
    out.interpolation_error = Some(gap);
    Ok(out)
}
