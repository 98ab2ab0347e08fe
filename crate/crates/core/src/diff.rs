//! Central finite differences with optional Richardson extrapolation.
//!
//! Everything that needs a derivative goes through [`derivative`] or
//! [`second_derivative`], which act on any value type implementing
//! [`Combine`]. Nested differencing (derivatives of quantities that were
//! themselves obtained by differencing) is just composition of closures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{SymTensor2, Tensor3};

/// Step size, stencil order and Richardson switch for one differencing level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffSpec {
    pub step: f64,
    /// Accuracy order of the central stencil, 2 or 4.
    pub order: u8,
    pub richardson: bool,
}

impl Default for DiffSpec {
    fn default() -> Self {
        Self { step: 1e-3, order: 2, richardson: true }
    }
}

impl DiffSpec {
    pub fn new(step: f64, order: u8, richardson: bool) -> Result<Self> {
        let spec = Self { step, order, richardson };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidDiffSpec(format!("step must be positive, got {}", self.step)));
        }
        if self.order != 2 && self.order != 4 {
            return Err(Error::InvalidDiffSpec(format!("order must be 2 or 4, got {}", self.order)));
        }
        Ok(())
    }

    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    /// Largest offset from the evaluation point touched by one level.
    pub fn radius(&self) -> f64 {
        f64::from(self.order / 2) * self.step
    }

    /// Order actually achieved, counting the Richardson gain.
    pub fn effective_order(&self) -> u8 {
        if self.richardson {
            self.order + 2
        } else {
            self.order
        }
    }
}

/// Values that can be linearly combined by a stencil.
pub trait Combine: Sized + Clone {
    fn combine(terms: &[(f64, Self)]) -> Self;
}

impl Combine for f64 {
    fn combine(terms: &[(f64, Self)]) -> Self {
        terms.iter().map(|(c, v)| c * v).sum()
    }
}

impl Combine for Vec<f64> {
    fn combine(terms: &[(f64, Self)]) -> Self {
        let len = terms.first().map_or(0, |(_, v)| v.len());
        let mut out = vec![0.0; len];
        for (c, v) in terms {
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }
}

impl Combine for SymTensor2 {
    fn combine(terms: &[(f64, Self)]) -> Self {
        let n = terms.first().map_or(0, |(_, v)| v.dim());
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (c, v) in terms {
            m += v.matrix() * *c;
        }
        SymTensor2::from_raw(m)
    }
}

impl Combine for Tensor3 {
    fn combine(terms: &[(f64, Self)]) -> Self {
        let n = terms.first().map_or(0, |(_, v)| v.dim());
        let mut out = Tensor3::zeros(n);
        for (c, v) in terms {
            for (o, x) in out.data_mut().iter_mut().zip(v.as_slice()) {
                *o += c * x;
            }
        }
        out
    }
}

// Stencils are stored as (offset, weight) over symmetric pairs so constant
// inputs cancel exactly: first derivatives use f(x+kh) - f(x-kh), second
// derivatives use f(x+kh) + f(x-kh) - 2f(x).
const FIRST_2: &[(f64, f64)] = &[(1.0, 0.5)];
const FIRST_4: &[(f64, f64)] = &[(1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const SECOND_2: &[(f64, f64)] = &[(1.0, 1.0)];
const SECOND_4: &[(f64, f64)] = &[(1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

#[derive(Clone, Copy)]
enum Kind {
    First,
    Second,
}

fn apply<V, F>(f: &F, x: f64, h: f64, stencil: &[(f64, f64)], kind: Kind) -> Result<V>
where
    V: Combine,
    F: Fn(f64) -> Result<V>,
{
    let center = match kind {
        Kind::First => None,
        Kind::Second => Some(f(x)?),
    };
    let scale = match kind {
        Kind::First => h.recip(),
        Kind::Second => (h * h).recip(),
    };
    let mut terms = Vec::with_capacity(stencil.len());
    for &(offset, w) in stencil {
        let plus = f(x + offset * h)?;
        let minus = f(x - offset * h)?;
        let pair = match &center {
            None => V::combine(&[(1.0, plus), (-1.0, minus)]),
            Some(c) => V::combine(&[(1.0, plus), (1.0, minus), (-2.0, c.clone())]),
        };
        terms.push((w * scale, pair));
    }
    Ok(V::combine(&terms))
}

fn extrapolate<V, F>(f: &F, x: f64, spec: &DiffSpec, stencil: &[(f64, f64)], kind: Kind) -> Result<V>
where
    V: Combine,
    F: Fn(f64) -> Result<V>,
{
    spec.validate()?;
    let coarse = apply(f, x, spec.step, stencil, kind)?;
    if !spec.richardson {
        return Ok(coarse);
    }
    let fine = apply(f, x, 0.5 * spec.step, stencil, kind)?;
    let gain = 2f64.powi(i32::from(spec.order));
    Ok(V::combine(&[(gain / (gain - 1.0), fine), (-1.0 / (gain - 1.0), coarse)]))
}

/// First derivative of a scalar-parameter function.
pub fn derivative<V, F>(f: F, x: f64, spec: &DiffSpec) -> Result<V>
where
    V: Combine,
    F: Fn(f64) -> Result<V>,
{
    let stencil = if spec.order == 4 { FIRST_4 } else { FIRST_2 };
    extrapolate(&f, x, spec, stencil, Kind::First)
}

/// Second derivative of a scalar-parameter function.
pub fn second_derivative<V, F>(f: F, x: f64, spec: &DiffSpec) -> Result<V>
where
    V: Combine,
    F: Fn(f64) -> Result<V>,
{
    let stencil = if spec.order == 4 { SECOND_4 } else { SECOND_2 };
    extrapolate(&f, x, spec, stencil, Kind::Second)
}

fn shifted(p: &[f64], axis: usize, s: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[axis] = s;
    q
}

/// Partial derivative along coordinate `axis`.
pub fn partial<V, F>(f: F, p: &[f64], axis: usize, spec: &DiffSpec) -> Result<V>
where
    V: Combine,
    F: Fn(&[f64]) -> Result<V>,
{
    derivative(|s| f(&shifted(p, axis, s)), p[axis], spec)
}

/// All first partials, one entry per coordinate.
pub fn gradient<V, F>(f: F, p: &[f64], spec: &DiffSpec) -> Result<Vec<V>>
where
    V: Combine,
    F: Fn(&[f64]) -> Result<V>,
{
    (0..p.len()).map(|axis| partial(&f, p, axis, spec)).collect()
}

/// Second partial `∂_a ∂_b f`. Pure second derivatives use the compact stencil,
/// mixed ones nest two first-derivative stencils.
pub fn second_partial<V, F>(f: F, p: &[f64], a: usize, b: usize, spec: &DiffSpec) -> Result<V>
where
    V: Combine,
    F: Fn(&[f64]) -> Result<V>,
{
    if a == b {
        second_derivative(|s| f(&shifted(p, a, s)), p[a], spec)
    } else {
        partial(|q: &[f64]| partial(&f, q, b, spec), p, a, spec)
    }
}

/// Flat Laplacian `Σ_a ∂_a² f`.
pub fn flat_laplacian<F>(f: F, p: &[f64], spec: &DiffSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    (0..p.len()).map(|a| second_partial(&f, p, a, a, spec)).sum()
}

/// Observed convergence orders between successive `(step, error)` pairs.
pub fn observed_orders(sequence: &[(f64, f64)]) -> Vec<f64> {
    sequence
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}
