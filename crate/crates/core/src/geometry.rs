//! Pointwise differential geometry of time-dependent metrics.
//!
//! All quantities are computed from metric samples by nested central
//! differences: `∂g` from metric values, `Γ` from `∂g`, `∂Γ` by differencing
//! `Γ` at neighbouring points, and so on. Index conventions:
//!
//! * `Γ^k_ij = ½ g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`, stored at `(k, i, j)`;
//! * `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`;
//! * `Ric_jk = R^i_ijk`, `R = g^{jk} Ric_jk`, and `K = R / 2` on surfaces.
//!
//! With these conventions the hyperbolic half-plane has `R = −2`.

use std::sync::Arc;

use crate::diff::{self, DiffSpec};
use crate::error::{Error, Result};
use crate::tensor::{SymTensor2, Tensor3};

/// A time-dependent Riemannian metric in a single chart.
///
/// Implementations must be safe to evaluate concurrently.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, p: &[f64]) -> Result<SymTensor2>;

    /// Exact `∂_t g`, when known.
    fn exact_dt(&self, _t: f64, _p: &[f64]) -> Option<Result<SymTensor2>> {
        None
    }

    /// Exact curvature, when known.
    fn exact_curvature(&self, _t: f64, _p: &[f64]) -> Option<Result<CurvatureBundle>> {
        None
    }
}

impl<M: MetricField + ?Sized> MetricField for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, p: &[f64]) -> Result<SymTensor2> {
        (**self).eval(t, p)
    }
    fn exact_dt(&self, t: f64, p: &[f64]) -> Option<Result<SymTensor2>> {
        (**self).exact_dt(t, p)
    }
    fn exact_curvature(&self, t: f64, p: &[f64]) -> Option<Result<CurvatureBundle>> {
        (**self).exact_curvature(t, p)
    }
}

impl<M: MetricField + ?Sized> MetricField for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, p: &[f64]) -> Result<SymTensor2> {
        (**self).eval(t, p)
    }
    fn exact_dt(&self, t: f64, p: &[f64]) -> Option<Result<SymTensor2>> {
        (**self).exact_dt(t, p)
    }
    fn exact_curvature(&self, t: f64, p: &[f64]) -> Option<Result<CurvatureBundle>> {
        (**self).exact_curvature(t, p)
    }
}

impl<M: MetricField + ?Sized> MetricField for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, p: &[f64]) -> Result<SymTensor2> {
        (**self).eval(t, p)
    }
    fn exact_dt(&self, t: f64, p: &[f64]) -> Option<Result<SymTensor2>> {
        (**self).exact_dt(t, p)
    }
    fn exact_curvature(&self, t: f64, p: &[f64]) -> Option<Result<CurvatureBundle>> {
        (**self).exact_curvature(t, p)
    }
}

type MetricFn = dyn Fn(f64, &[f64]) -> SymTensor2 + Send + Sync;

/// A metric given by closures, mostly for ad-hoc fields and tests.
pub struct FnMetric {
    dim: usize,
    eval: Box<MetricFn>,
    dt: Option<Box<MetricFn>>,
}

impl FnMetric {
    pub fn new(dim: usize, eval: impl Fn(f64, &[f64]) -> SymTensor2 + Send + Sync + 'static) -> Self {
        Self { dim, eval: Box::new(eval), dt: None }
    }

    pub fn with_dt(mut self, dt: impl Fn(f64, &[f64]) -> SymTensor2 + Send + Sync + 'static) -> Self {
        self.dt = Some(Box::new(dt));
        self
    }

    /// Static metric `λ(p)·I`.
    pub fn conformal(dim: usize, lambda: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(dim, move |_, p| {
            let l = lambda(p);
            SymTensor2::from_fn(dim, |i, j| if i == j { l } else { 0.0 })
        })
        .with_dt(move |_, _| SymTensor2::zeros(dim))
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::conformal(dim, |_| 1.0)
    }
}

impl MetricField for FnMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, p: &[f64]) -> Result<SymTensor2> {
        Ok((self.eval)(t, p))
    }
    fn exact_dt(&self, t: f64, p: &[f64]) -> Option<Result<SymTensor2>> {
        self.dt.as_ref().map(|dt| Ok(dt(t, p)))
    }
}

/// Curvature data at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBundle {
    /// `Γ^k_ij` at index `(k, i, j)`.
    pub christoffel: Tensor3,
    pub ricci: SymTensor2,
    pub scalar: f64,
    /// Gaussian curvature, surfaces only.
    pub gauss: Option<f64>,
}

/// Evaluates the metric and enforces finiteness, dimension and positive-definiteness.
pub fn checked_metric<M: MetricField + ?Sized>(field: &M, t: f64, p: &[f64]) -> Result<SymTensor2> {
    if p.len() != field.dim() {
        return Err(Error::Dimension { expected: field.dim(), got: p.len() });
    }
    let g = field.eval(t, p)?;
    if g.dim() != field.dim() {
        return Err(Error::Dimension { expected: field.dim(), got: g.dim() });
    }
    if !g.is_finite() {
        return Err(Error::NonFinite { t, point: p.to_vec() });
    }
    if !g.is_positive_definite() {
        return Err(Error::DegenerateMetric(format!(
            "metric at t = {t}, point {p:?} is not positive definite"
        )));
    }
    Ok(g)
}

/// `∂_k g_ij`, stored at `(k, i, j)`.
pub fn metric_partials<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    spec: &DiffSpec,
) -> Result<Tensor3> {
    let n = field.dim();
    let grads: Vec<SymTensor2> = diff::gradient(|q| checked_metric(field, t, q), p, spec)?;
    let mut out = Tensor3::zeros(n);
    for (k, dg) in grads.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                out.set(k, i, j, dg.get(i, j));
            }
        }
    }
    Ok(out)
}

/// Levi-Civita symbols from an inverse metric and metric partials.
pub fn christoffel_from(g_inv: &SymTensor2, dg: &Tensor3) -> Tensor3 {
    let n = g_inv.dim();
    let mut gamma = Tensor3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += g_inv.get(k, l) * (dg.get(i, j, l) + dg.get(j, i, l) - dg.get(l, i, j));
                }
                gamma.set(k, i, j, 0.5 * acc);
                gamma.set(k, j, i, 0.5 * acc);
            }
        }
    }
    gamma
}

pub fn christoffel<M: MetricField + ?Sized>(field: &M, t: f64, p: &[f64], spec: &DiffSpec) -> Result<Tensor3> {
    let g = checked_metric(field, t, p)?;
    let dg = metric_partials(field, t, p, spec)?;
    Ok(christoffel_from(&g.inverse()?, &dg))
}

/// Ricci tensor from `Γ` and its partials `dgamma[a] = ∂_a Γ`.
pub fn ricci_from(gamma: &Tensor3, dgamma: &[Tensor3]) -> SymTensor2 {
    let n = gamma.dim();
    SymTensor2::from_fn(n, |j, k| {
        // average the (j,k) and (k,j) contractions; they agree analytically
        0.5 * (ricci_component(gamma, dgamma, j, k) + ricci_component(gamma, dgamma, k, j))
    })
}

fn ricci_component(gamma: &Tensor3, dgamma: &[Tensor3], j: usize, k: usize) -> f64 {
    let n = gamma.dim();
    let mut acc = 0.0;
    for i in 0..n {
        acc += dgamma[i].get(i, j, k) - dgamma[j].get(i, i, k);
        for m in 0..n {
            acc += gamma.get(i, i, m) * gamma.get(m, j, k) - gamma.get(i, j, m) * gamma.get(m, i, k);
        }
    }
    acc
}

/// Christoffel symbols, Ricci tensor, scalar and (for n = 2) Gaussian curvature.
pub fn curvature<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    spec: &DiffSpec,
) -> Result<CurvatureBundle> {
    let g = checked_metric(field, t, p)?;
    let g_inv = g.inverse()?;
    let gamma = christoffel_from(&g_inv, &metric_partials(field, t, p, spec)?);
    let dgamma: Vec<Tensor3> = diff::gradient(|q| christoffel(field, t, q, spec), p, spec)?;
    let ricci = ricci_from(&gamma, &dgamma);
    let scalar = ricci.contract(&g_inv);
    let gauss = (field.dim() == 2).then_some(0.5 * scalar);
    Ok(CurvatureBundle { christoffel: gamma, ricci, scalar, gauss })
}

/// Gaussian curvature of the isothermal metric `λ (du² + dv²)`:
/// `K = −Δ(ln λ) / (2λ)` with the flat Laplacian.
pub fn gauss_isothermal<F>(lam: F, p: &[f64], spec: &DiffSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let positive_log = |q: &[f64]| -> Result<f64> {
        let l = lam(q)?;
        if !(l > 0.0) {
            return Err(Error::Positivity(format!("conformal factor {l} at {q:?}")));
        }
        Ok(l.ln())
    };
    let l0 = lam(p)?;
    if !(l0 > 0.0) {
        return Err(Error::Positivity(format!("conformal factor {l0} at {p:?}")));
    }
    let lap = diff::flat_laplacian(positive_log, p, spec)?;
    Ok(-lap / (2.0 * l0))
}

/// `Δ_g f = (1/√det g) ∂_i (√det g · g^{ij} ∂_j f)`.
pub fn laplace_beltrami<M, F>(f: F, field: &M, t: f64, p: &[f64], spec: &DiffSpec) -> Result<f64>
where
    M: MetricField + ?Sized,
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = field.dim();
    let flux = |q: &[f64]| -> Result<Vec<f64>> {
        let g = checked_metric(field, t, q)?;
        let g_inv = g.inverse()?;
        let sqrt_det = g.determinant().sqrt();
        let grad: Vec<f64> = diff::gradient(&f, q, spec)?;
        Ok((0..n)
            .map(|i| sqrt_det * (0..n).map(|j| g_inv.get(i, j) * grad[j]).sum::<f64>())
            .collect())
    };
    let mut div = 0.0;
    for i in 0..n {
        let d: Vec<f64> = diff::partial(&flux, p, i, spec)?;
        div += d[i];
    }
    Ok(div / volume_form(field, t, p)?)
}

/// `√det g`.
pub fn volume_form<M: MetricField + ?Sized>(field: &M, t: f64, p: &[f64]) -> Result<f64> {
    let g = checked_metric(field, t, p)?;
    let det = g.determinant();
    if !(det > 0.0) {
        return Err(Error::DegenerateMetric(format!("determinant {det} at {p:?}")));
    }
    Ok(det.sqrt())
}

/// `∇_l T_ij = ∂_l T_ij − Γ^m_li T_mj − Γ^m_lj T_im`, stored at `(l, i, j)`.
pub fn covariant_derivative_sym2<M, F>(
    tensor: F,
    field: &M,
    t: f64,
    p: &[f64],
    spec: &DiffSpec,
) -> Result<Tensor3>
where
    M: MetricField + ?Sized,
    F: Fn(&[f64]) -> Result<SymTensor2>,
{
    let n = field.dim();
    let value = tensor(p)?;
    let gamma = christoffel(field, t, p, spec)?;
    let dt: Vec<SymTensor2> = diff::gradient(&tensor, p, spec)?;
    let mut out = Tensor3::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut v = dt[l].get(i, j);
                for m in 0..n {
                    v -= gamma.get(m, l, i) * value.get(m, j) + gamma.get(m, l, j) * value.get(i, m);
                }
                out.set(l, i, j, v);
                out.set(l, j, i, v);
            }
        }
    }
    Ok(out)
}

/// `|T|²_g = g^{ik} g^{jl} T_ij T_kl`.
pub fn norm_sq(tensor: &SymTensor2, g_inv: &SymTensor2) -> f64 {
    let raised = g_inv.matrix() * tensor.matrix() * g_inv.matrix();
    raised.component_mul(tensor.matrix()).sum()
}

/// Exact curvature of a conformally flat metric `e^{2φ} δ` from the
/// gradient and Hessian of `φ`.
pub(crate) fn conformally_flat_curvature(lambda: f64, dphi: &[f64], hess: &[Vec<f64>]) -> CurvatureBundle {
    let n = dphi.len();
    let nf = n as f64;
    let mut gamma = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if k == i {
                    v += dphi[j];
                }
                if k == j {
                    v += dphi[i];
                }
                if i == j {
                    v -= dphi[k];
                }
                gamma.set(k, i, j, v);
            }
        }
    }
    let lap: f64 = (0..n).map(|a| hess[a][a]).sum();
    let grad_sq: f64 = dphi.iter().map(|d| d * d).sum();
    let ricci = SymTensor2::from_fn(n, |i, j| {
        let mut v = -(nf - 2.0) * (hess[i][j] - dphi[i] * dphi[j]);
        if i == j {
            v -= lap + (nf - 2.0) * grad_sq;
        }
        v
    });
    let scalar = (-2.0 * (nf - 1.0) * lap - (nf - 2.0) * (nf - 1.0) * grad_sq) / lambda;
    CurvatureBundle {
        christoffel: gamma,
        ricci,
        scalar,
        gauss: (n == 2).then_some(0.5 * scalar),
    }
}
