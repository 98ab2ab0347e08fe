use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate chart of a grid. Grid coordinates are `(c1, c2)`:
/// `(x, y)` Cartesian, `(x, y) = (radius, angle)` polar, `(u, v)` for the
/// parabolic and elliptic systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Chart {
    Cartesian,
    Polar,
    ParabolicUV,
    EllipticUV { c: f64 },
}

impl Chart {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Cartesian => "cartesian",
            Self::Polar => "polar",
            Self::ParabolicUV => "parabolic",
            Self::EllipticUV { .. } => "elliptic",
        }
    }

    /// Weight `w` with `g = e^h w (dc1² + dc2²)` for the conformal charts.
    pub fn conformal_weight(&self, c1: f64, c2: f64) -> Option<f64> {
        match self {
            Self::Cartesian => Some(1.0),
            Self::ParabolicUV => Some(c1 * c1 + c2 * c2),
            Self::Polar | Self::EllipticUV { .. } => None,
        }
    }
}

pub type BoundaryFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DirichletData {
    /// Boundary nodes keep their initial values.
    Frozen,
    /// Boundary values `b(t, c1, c2)` imposed at every (stage) time.
    Exact(BoundaryFn),
}

#[derive(Clone)]
pub enum Boundary {
    Periodic,
    Dirichlet(DirichletData),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Periodic => write!(f, "Periodic"),
            Self::Dirichlet(DirichletData::Frozen) => write!(f, "Dirichlet(Frozen)"),
            Self::Dirichlet(DirichletData::Exact(_)) => write!(f, "Dirichlet(Exact)"),
        }
    }
}

impl Boundary {
    pub fn is_periodic(&self) -> bool {
        matches!(self, Self::Periodic)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::Dirichlet(DirichletData::Frozen) => "dirichlet-frozen",
            Self::Dirichlet(DirichletData::Exact(_)) => "dirichlet-exact",
        }
    }
}

pub const MIN_NODES: usize = 5;

/// Conformal factor exponent `h` sampled on a uniform grid in one chart.
#[derive(Debug, Clone)]
pub struct ConformalGridState {
    pub chart: Chart,
    /// `h[[i, j]]` sits at `(origin[0] + i·spacing[0], origin[1] + j·spacing[1])`.
    pub h: Array2<f64>,
    pub spacing: [f64; 2],
    pub origin: [f64; 2],
    pub t: f64,
    pub bc: Boundary,
    /// Interpolation error estimate, set when the state comes from a chart transfer.
    pub interpolation_error: Option<f64>,
}

impl ConformalGridState {
    pub fn new(chart: Chart, h: Array2<f64>, spacing: [f64; 2], origin: [f64; 2], t: f64, bc: Boundary) -> Result<Self> {
        let (n1, n2) = h.dim();
        if n1 < MIN_NODES || n2 < MIN_NODES {
            return Err(Error::InvalidGrid(format!("grid {n1}x{n2} is below the {MIN_NODES}-node minimum")));
        }
        if !(spacing[0] > 0.0 && spacing[1] > 0.0 && spacing.iter().all(|d| d.is_finite())) {
            return Err(Error::InvalidGrid(format!("spacing {spacing:?} must be positive")));
        }
        if !origin.iter().all(|o| o.is_finite()) || !t.is_finite() {
            return Err(Error::InvalidGrid(format!("origin {origin:?} / time {t} must be finite")));
        }
        if let Some(((i, j), v)) = h.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("h[{i}, {j}] = {v} is not finite")));
        }
        if let Chart::EllipticUV { c } = chart {
            if !(c > 0.0) {
                return Err(Error::InvalidGrid(format!("elliptic scale c = {c} must be positive")));
            }
        }
        Ok(Self { chart, h, spacing, origin, t, bc, interpolation_error: None })
    }

    /// Samples `h0(c1, c2)` on `shape` nodes spanning `[lower, upper]`
    /// (periodic grids exclude the upper end).
    pub fn from_fn(
        chart: Chart,
        shape: [usize; 2],
        lower: [f64; 2],
        upper: [f64; 2],
        t: f64,
        bc: Boundary,
        h0: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let spacing = grid_spacing(shape, lower, upper, bc.is_periodic())?;
        let h = Array2::from_shape_fn((shape[0], shape[1]), |(i, j)| {
            h0(lower[0] + i as f64 * spacing[0], lower[1] + j as f64 * spacing[1])
        });
        Self::new(chart, h, spacing, lower, t, bc)
    }

    pub fn shape(&self) -> [usize; 2] {
        let (n1, n2) = self.h.dim();
        [n1, n2]
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.origin[0] + i as f64 * self.spacing[0], self.origin[1] + j as f64 * self.spacing[1])
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        let [n1, n2] = self.shape();
        !self.bc.is_periodic() && (i == 0 || j == 0 || i + 1 == n1 || j + 1 == n2)
    }

    /// Conformal weights `w` at every node; errors on non-conformal charts or `w ≤ 0`.
    pub fn weights(&self) -> Result<Array2<f64>> {
        let [n1, n2] = self.shape();
        let mut w = Array2::zeros((n1, n2));
        for ((i, j), slot) in w.indexed_iter_mut() {
            let (c1, c2) = self.coords(i, j);
            let v = self.chart.conformal_weight(c1, c2).ok_or_else(|| {
                Error::InvalidGrid(format!("the {} chart has no conformal grid form", self.chart.name()))
            })?;
            if !(v > 0.0) {
                return Err(Error::ChartDegenerate(format!("weight {v} at ({c1}, {c2})")));
            }
            *slot = v;
        }
        Ok(w)
    }

    /// Flat five-point (order 2) or nine-point (order 4) Laplacian in chart
    /// coordinates. Dirichlet boundary nodes are `NaN`; nodes next to a
    /// Dirichlet boundary fall back to order 2.
    pub fn laplacian_of(&self, field: &Array2<f64>, order: u8) -> Array2<f64> {
        let [n1, n2] = self.shape();
        let periodic = self.bc.is_periodic();
        let (d1, d2) = (self.spacing[0], self.spacing[1]);
        let mut out = Array2::zeros((n1, n2));
        Zip::indexed(&mut out).par_for_each(|(i, j), slot| {
            if !periodic && (i == 0 || j == 0 || i + 1 == n1 || j + 1 == n2) {
                *slot = f64::NAN;
                return;
            }
            let at = |di: isize, dj: isize| {
                let ii = (i as isize + di).rem_euclid(n1 as isize) as usize;
                let jj = (j as isize + dj).rem_euclid(n2 as isize) as usize;
                field[[ii, jj]]
            };
            let c = field[[i, j]];
            let wide1 = periodic || (i >= 2 && i + 2 < n1);
            let wide2 = periodic || (j >= 2 && j + 2 < n2);
            let second = |m: f64, p: f64, mm: f64, pp: f64, d: f64, wide: bool| {
                if order >= 4 && wide {
                    (-pp + 16.0 * p - 30.0 * c + 16.0 * m - mm) / (12.0 * d * d)
                } else {
                    (p - 2.0 * c + m) / (d * d)
                }
            };
            let s1 = second(at(-1, 0), at(1, 0), if wide1 { at(-2, 0) } else { 0.0 }, if wide1 { at(2, 0) } else { 0.0 }, d1, wide1);
            let s2 = second(at(0, -1), at(0, 1), if wide2 { at(0, -2) } else { 0.0 }, if wide2 { at(0, 2) } else { 0.0 }, d2, wide2);
            *slot = s1 + s2;
        });
        out
    }

    /// `K = −½ e^{−h} Δh / w` at every node.
    pub fn gauss_curvature_field(&self, order: u8) -> Result<Array2<f64>> {
        let w = self.weights()?;
        let mut k = self.laplacian_of(&self.h, order);
        Zip::from(&mut k).and(&self.h).and(&w).for_each(|k, &h, &w| *k = -0.5 * (-h).exp() * *k / w);
        Ok(k)
    }

    /// Fractional node index of chart coordinates, wrapping periodic axes.
    pub fn fractional_index(&self, c1: f64, c2: f64) -> Result<[f64; 2]> {
        let shape = self.shape();
        let mut out = [0.0; 2];
        for (axis, c) in [c1, c2].into_iter().enumerate() {
            let n = shape[axis] as f64;
            let mut s = (c - self.origin[axis]) / self.spacing[axis];
            if self.bc.is_periodic() {
                s = s.rem_euclid(n);
                if s > n - 1e-9 {
                    s = 0.0;
                }
            } else if s < -1e-9 || s > n - 1.0 + 1e-9 {
                return Err(Error::Uncovered(c1, c2));
            }
            let nearest = s.round();
            if (s - nearest).abs() < 1e-9 {
                s = nearest;
            }
            out[axis] = s.clamp(0.0, n - if self.bc.is_periodic() { 0.0 } else { 1.0 });
        }
        Ok(out)
    }

    fn node(&self, i: isize, j: isize) -> (usize, usize) {
        let [n1, n2] = self.shape();
        (i.rem_euclid(n1 as isize) as usize, j.rem_euclid(n2 as isize) as usize)
    }

    /// Interpolates `field` (same shape as `h`) at chart coordinates.
    /// `cubic` selects 4×4 Lagrange interpolation instead of bilinear.
    /// Points on nodes return the node value exactly.
    pub fn interpolate(&self, field: &Array2<f64>, c1: f64, c2: f64, cubic: bool) -> Result<f64> {
        let s = self.fractional_index(c1, c2)?;
        let shape = self.shape();
        let periodic = self.bc.is_periodic();
        if s[0].fract() == 0.0 && s[1].fract() == 0.0 {
            let (i, j) = self.node(s[0] as isize, s[1] as isize);
            return Ok(field[[i, j]]);
        }
        let width: isize = if cubic { 4 } else { 2 };
        let mut axes = [(0isize, [0.0; 4]); 2];
        for axis in 0..2 {
            let n = shape[axis] as isize;
            let base = s[axis].floor() as isize;
            let mut start = base - (width / 2 - 1);
            if !periodic {
                start = start.clamp(0, n - width);
            }
            let mut weights = [0.0; 4];
            for (a, w) in weights.iter_mut().enumerate().take(width as usize) {
                let xa = (start + a as isize) as f64;
                *w = (0..width)
                    .filter(|&b| b != a as isize)
                    .map(|b| {
                        let xb = (start + b) as f64;
                        (s[axis] - xb) / (xa - xb)
                    })
                    .product();
            }
            axes[axis] = (start, weights);
        }
        let mut v = 0.0;
        for a in 0..width {
            for b in 0..width {
                let (i, j) = self.node(axes[0].0 + a, axes[1].0 + b);
                v += axes[0].1[a as usize] * axes[1].1[b as usize] * field[[i, j]];
            }
        }
        Ok(v)
    }

    pub fn max_abs_h(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn grid_spacing(shape: [usize; 2], lower: [f64; 2], upper: [f64; 2], periodic: bool) -> Result<[f64; 2]> {
    let mut spacing = [0.0; 2];
    for axis in 0..2 {
        let n = shape[axis];
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("{n} nodes along axis {axis}; need at least {MIN_NODES}")));
        }
        if !(upper[axis] > lower[axis]) {
            return Err(Error::InvalidGrid(format!("empty range [{}, {}]", lower[axis], upper[axis])));
        }
        let cells = if periodic { n } else { n - 1 };
        spacing[axis] = (upper[axis] - lower[axis]) / cells as f64;
    }
    Ok(spacing)
}
