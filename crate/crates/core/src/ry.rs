//! The (α, β) Ricci–Yamabe map `RY = ∂_t g + 2α Ric + β R g` and the
//! quantities derived from it: signature, volume variation and steadiness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::{self, DiffSpec};
use crate::error::{Error, Result};
use crate::geometry::{checked_metric, curvature, gauss_isothermal, CurvatureBundle, MetricField};
use crate::quad;
use crate::tensor::SymTensor2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl RyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::InvalidParameter(format!("alpha = {alpha}, beta = {beta}")))
        }
    }

    /// Pure Ricci flow weights.
    pub fn ricci() -> Self {
        Self { alpha: 1.0, beta: 0.0 }
    }

    pub fn sum(&self) -> f64 {
        self.alpha + self.beta
    }

    /// `2α + nβ`, the weight of `R` in the trace of the map.
    pub fn mix(&self, n: usize) -> f64 {
        2.0 * self.alpha + n as f64 * self.beta
    }
}

const TIME_SPEC: DiffSpec = DiffSpec { step: 1e-4, order: 4, richardson: false };

/// `∂_t g`, exact when the field provides it.
pub fn time_derivative<M: MetricField + ?Sized>(field: &M, t: f64, p: &[f64]) -> Result<SymTensor2> {
    match field.exact_dt(t, p) {
        Some(dt) => dt,
        None => diff::derivative(|s| field.eval(s, p), t, &TIME_SPEC),
    }
}

/// Curvature from the field's closed form when attached, else from the engine.
pub fn curvature_of<M: MetricField + ?Sized>(field: &M, t: f64, p: &[f64], spec: &DiffSpec) -> Result<CurvatureBundle> {
    match field.exact_curvature(t, p) {
        Some(c) => c,
        None => curvature(field, t, p, spec),
    }
}

fn assemble(dt: &SymTensor2, c: &CurvatureBundle, g: &SymTensor2, params: &RyParams) -> SymTensor2 {
    &(dt + &c.ricci.scale(2.0 * params.alpha)) + &g.scale(params.beta * c.scalar)
}

pub fn ry_eval<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
) -> Result<SymTensor2> {
    let g = checked_metric(field, t, p)?;
    let dt = time_derivative(field, t, p)?;
    let c = curvature_of(field, t, p, spec)?;
    Ok(assemble(&dt, &c, &g, params))
}

/// RY map of `g = λ(t, ·) I` on a surface via `RY = (∂_t λ + 2(α+β) K λ) I`.
///
/// `lam_dt` is used for `∂_t λ` when given; otherwise `λ` is differenced in time.
pub fn ry_eval_2d_conformal<F, D>(
    lam: F,
    lam_dt: Option<D>,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
) -> Result<SymTensor2>
where
    F: Fn(f64, &[f64]) -> Result<f64>,
    D: Fn(f64, &[f64]) -> Result<f64>,
{
    if p.len() != 2 {
        return Err(Error::Dimension { expected: 2, got: p.len() });
    }
    let positive = |s: f64, q: &[f64]| -> Result<f64> {
        let v = lam(s, q)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Positivity(format!("conformal factor {v} at t = {s}, p = {q:?}")))
        }
    };
    let l = positive(t, p)?;
    let dl = match lam_dt {
        Some(d) => d(t, p)?,
        None => diff::derivative(|s| positive(s, p), t, &TIME_SPEC)?,
    };
    let k = gauss_isothermal(|q| positive(t, q), p, spec)?;
    let c = dl + 2.0 * params.sum() * k * l;
    Ok(SymTensor2::diagonal(&[c, c]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignatureKind {
    Riemannian,
    SemiRiemannian,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureClass {
    pub kind: SignatureKind,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Eigenvalue classification. The default tolerance is `1e-9 · (1 + spectral radius)`.
pub fn classify_signature(tensor: &SymTensor2, tol: Option<f64>) -> SignatureClass {
    let ev = tensor.eigenvalues();
    let min = ev.first().copied().unwrap_or(0.0);
    let max = ev.last().copied().unwrap_or(0.0);
    let radius = min.abs().max(max.abs());
    let tol = tol.unwrap_or(1e-9 * (1.0 + radius));
    let kind = if ev.iter().any(|e| e.abs() <= tol) {
        SignatureKind::Degenerate
    } else if min > 0.0 {
        SignatureKind::Riemannian
    } else {
        SignatureKind::SemiRiemannian
    };
    SignatureClass { kind, min_eigenvalue: min, max_eigenvalue: max }
}

/// `Tr_g RY = g^{ij} RY_ij`.
pub fn volume_variation_rate<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
) -> Result<f64> {
    let g_inv = checked_metric(field, t, p)?.inverse()?;
    Ok(ry_eval(field, t, p, params, spec)?.contract(&g_inv))
}

/// `∫_{t0}^{t1} Tr_g RY dt` at a fixed point, by adaptive quadrature of the rate.
pub fn accumulated_volume_change<M: MetricField + ?Sized>(
    field: &M,
    p: &[f64],
    t0: f64,
    t1: f64,
    params: &RyParams,
    spec: &DiffSpec,
    tol: f64,
) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let v = quad::integrate(
        |s| match volume_variation_rate(field, s, p, params, spec) {
            Ok(r) => r,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        t0,
        t1,
        tol,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => v,
    }
}

/// `(2α + nβ) R + Tr_g ∂_t g`; zero exactly on steady flows.
pub fn steady_residual<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
) -> Result<f64> {
    let g_inv = checked_metric(field, t, p)?.inverse()?;
    let dt = time_derivative(field, t, p)?;
    let c = curvature_of(field, t, p, spec)?;
    Ok(params.mix(p.len()) * c.scalar + dt.contract(&g_inv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    Expanding,
    Steady,
    Shrinking,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCharacter {
    pub trend: Trend,
    pub uniform: bool,
    pub min_rate: f64,
    pub max_rate: f64,
}

/// Sign classification of the volume variation over a sample set.
///
/// The flow is uniform when, at every sampled time, the spatial spread of
/// the rate is at most `1e-6 · (1 + |mean rate|)`.
pub fn classify_character<M: MetricField + ?Sized>(
    field: &M,
    params: &RyParams,
    samples: &[(f64, Vec<f64>)],
    spec: &DiffSpec,
    tol: f64,
) -> Result<FlowCharacter> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rates: Vec<f64> = samples
        .par_iter()
        .map(|(t, p)| volume_variation_rate(field, *t, p, params, spec))
        .collect::<Result<_>>()?;
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let trend = if min > tol {
        Trend::Expanding
    } else if max < -tol {
        Trend::Shrinking
    } else if min >= -tol && max <= tol {
        Trend::Steady
    } else {
        Trend::Mixed
    };

    let mut by_time: Vec<(f64, f64)> = samples.iter().map(|(t, _)| *t).zip(rates).collect();
    by_time.sort_by(|a, b| a.0.total_cmp(&b.0));
    let uniform = by_time.chunk_by(|a, b| a.0 == b.0).all(|group| {
        let lo = group.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let hi = group.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let mean = group.iter().map(|x| x.1).sum::<f64>() / group.len() as f64;
        hi - lo <= 1e-6 * (1.0 + mean.abs())
    });
    Ok(FlowCharacter { trend, uniform, min_rate: min, max_rate: max })
}
