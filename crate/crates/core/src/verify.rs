//! Numerical checks of the evolution identities satisfied along an RY flow:
//! variations of the Christoffel symbols, scalar curvature and volume form,
//! the constant-volume specialisation, Ricci-recurrent forms, and the
//! curvature lower bound on closed surfaces.
//!
//! Every identity compares a time-differenced left side against a spatially
//! differenced right side. The same [`DiffSpec`] drives both, so refining
//! the step refines space and time together.

use serde::{Deserialize, Serialize};

use crate::diff::{self, DiffSpec};
use crate::error::{Error, Result};
use crate::geometry::{
    checked_metric, christoffel, covariant_derivative_sym2, curvature, laplace_beltrami, norm_sq, volume_form,
    CurvatureBundle, MetricField,
};
use crate::pde::ConformalGridState;
use crate::ry::{ry_eval, RyParams};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityId {
    ChristoffelVariation,
    ScalarVariation,
    SurfaceScalarVariation,
    SurfaceGaussVariation,
    VolumeFormVariation,
    ConstantVolumeScalar,
    RicciRecurrence,
    RecurrentChristoffelVariation,
    RecurrentScalarVariation,
    RecurrentGaussVariation,
}

impl IdentityId {
    pub fn describe(&self) -> &'static str {
        match self {
            Self::ChristoffelVariation => "d/dt of the Christoffel symbols along an RY flow",
            Self::ScalarVariation => "d/dt R = [a+(n-1)b] Lap R + 2a |Ric|^2 + b R^2",
            Self::SurfaceScalarVariation => "surface form: d/dt R = (a+b)(Lap R + R^2)",
            Self::SurfaceGaussVariation => "surface form: d/dt K = (a+b)(Lap K + 2K^2)",
            Self::VolumeFormVariation => "d/dt sqrt(det g) = -(a + n b/2) R sqrt(det g)",
            Self::ConstantVolumeScalar => "2a+nb=0: (1/a) d/dt R = ((2-n)/n) Lap R + 2|Ric|^2 - (2/n) R^2",
            Self::RicciRecurrence => "nabla_l Ric_ij = eta_l Ric_ij",
            Self::RecurrentChristoffelVariation => "Christoffel variation rewritten with a recurrence form",
            Self::RecurrentScalarVariation => "d/dt R = (a+b)[(div eta + |eta|^2) R + R^2]",
            Self::RecurrentGaussVariation => "d/dt K = (a+b)[(Lap ln K + |grad ln K|^2) K + 2K^2]",
        }
    }
}

/// Both sides of one identity at one point, flattened, with their max-norm gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity: IdentityId,
    pub t: f64,
    pub point: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual_norm: f64,
    /// `(step, residual_norm)` from coarse to fine, when refined.
    pub step_sequence: Vec<(f64, f64)>,
    /// Whether the RY flow equation was confirmed at the point.
    pub flow_equation_holds: bool,
}

impl IdentityResidual {
    fn new(identity: IdentityId, t: f64, p: &[f64], lhs: Vec<f64>, rhs: Vec<f64>, holds: bool) -> Self {
        let residual_norm = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Self {
            identity,
            t,
            point: p.to_vec(),
            lhs,
            rhs,
            residual_norm,
            step_sequence: Vec::new(),
            flow_equation_holds: holds,
        }
    }

    pub fn observed_orders(&self) -> Vec<f64> {
        diff::observed_orders(&self.step_sequence)
    }
}

/// How to treat a point where the flow equation does not hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VerifyMode {
    /// Refuse with [`Error::NotRyFlow`] when `max |RY| > tol`.
    Strict { tol: f64 },
    /// Evaluate anyway and record the outcome in `flow_equation_holds`.
    ReportOnly,
}

impl Default for VerifyMode {
    fn default() -> Self {
        Self::Strict { tol: 1e-6 }
    }
}

const FLOW_CHECK_TOL: f64 = 1e-6;

/// Checks `RY = 0` at the point with the default (fine) spec.
fn flow_check<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    mode: VerifyMode,
) -> Result<bool> {
    let norm = ry_eval(field, t, p, params, &DiffSpec::default())?.max_abs();
    match mode {
        VerifyMode::Strict { tol } if norm > tol => Err(Error::NotRyFlow { norm, tol }),
        VerifyMode::Strict { .. } => Ok(true),
        VerifyMode::ReportOnly => Ok(norm <= FLOW_CHECK_TOL),
    }
}

/// Re-evaluates an identity over a decreasing step ladder, returning the
/// finest result with the whole ladder in `step_sequence`.
pub fn refine<F>(steps: &[f64], base: &DiffSpec, eval: F) -> Result<IdentityResidual>
where
    F: Fn(&DiffSpec) -> Result<IdentityResidual>,
{
    if steps.is_empty() || steps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter(format!("step ladder must be strictly decreasing: {steps:?}")));
    }
    let mut sequence = Vec::with_capacity(steps.len());
    let mut last = None;
    for &h in steps {
        let spec = base.with_step(h);
        spec.validate()?;
        let r = eval(&spec)?;
        sequence.push((h, r.residual_norm));
        last = Some(r);
    }
    let mut finest = last.expect("non-empty ladder");
    finest.step_sequence = sequence;
    Ok(finest)
}

fn ricci_at<'a, M: MetricField + ?Sized>(field: &'a M, t: f64, spec: &'a DiffSpec) -> impl Fn(&[f64]) -> Result<crate::tensor::SymTensor2> + 'a {
    let spec = *spec;
    move |q| Ok(curvature(field, t, q, &spec)?.ricci)
}

fn scalar_at<'a, M: MetricField + ?Sized>(field: &'a M, t: f64, spec: &'a DiffSpec) -> impl Fn(&[f64]) -> Result<f64> + 'a {
    let spec = *spec;
    move |q| Ok(curvature(field, t, q, &spec)?.scalar)
}

fn kron(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

pub fn christoffel_variation_residual<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
    mode: VerifyMode,
) -> Result<IdentityResidual> {
    let holds = flow_check(field, t, p, params, mode)?;
    let n = field.dim();
    let lhs: Tensor3 = diff::derivative(|s| christoffel(field, s, p, spec), t, spec)?;
    let g = checked_metric(field, t, p)?;
    let g_inv = g.inverse()?;
    let d_ric = covariant_derivative_sym2(ricci_at(field, t, spec), field, t, p, spec)?;
    let d_r: Vec<f64> = diff::gradient(scalar_at(field, t, spec), p, spec)?;
    let up_r: Vec<f64> = (0..n).map(|k| (0..n).map(|l| g_inv.get(k, l) * d_r[l]).sum()).collect();
    let (a, b) = (params.alpha, params.beta);
    let mut rhs = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let ricci_part: f64 = (0..n)
                    .map(|l| g_inv.get(k, l) * (d_ric.get(l, i, j) - d_ric.get(i, j, l) - d_ric.get(j, i, l)))
                    .sum();
                let scalar_part = d_r[i] * kron(k, j) + d_r[j] * kron(k, i) - up_r[k] * g.get(i, j);
                rhs.set(k, i, j, a * ricci_part - 0.5 * b * scalar_part);
            }
        }
    }
    Ok(IdentityResidual::new(
        IdentityId::ChristoffelVariation,
        t,
        p,
        lhs.as_slice().to_vec(),
        rhs.as_slice().to_vec(),
        holds,
    ))
}

/// Scalar-curvature variation; on surfaces the two specialised forms follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarVariation {
    pub general: IdentityResidual,
    pub surface_scalar: Option<IdentityResidual>,
    pub surface_gauss: Option<IdentityResidual>,
}

pub fn scalar_variation_residual<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
    mode: VerifyMode,
) -> Result<ScalarVariation> {
    let holds = flow_check(field, t, p, params, mode)?;
    let n = field.dim();
    let nf = n as f64;
    let (a, b, s) = (params.alpha, params.beta, params.sum());
    let dr: f64 = diff::derivative(|tau| Ok(curvature(field, tau, p, spec)?.scalar), t, spec)?;
    let c: CurvatureBundle = curvature(field, t, p, spec)?;
    let g_inv = checked_metric(field, t, p)?.inverse()?;
    let lap_r = laplace_beltrami(scalar_at(field, t, spec), field, t, p, spec)?;
    let ric_sq = norm_sq(&c.ricci, &g_inv);
    let r = c.scalar;
    let rhs = (a + (nf - 1.0) * b) * lap_r + 2.0 * a * ric_sq + b * r * r;
    let general = IdentityResidual::new(IdentityId::ScalarVariation, t, p, vec![dr], vec![rhs], holds);
    if n != 2 {
        return Ok(ScalarVariation { general, surface_scalar: None, surface_gauss: None });
    }
    let k = 0.5 * r;
    let surface_scalar = IdentityResidual::new(
        IdentityId::SurfaceScalarVariation,
        t,
        p,
        vec![dr],
        vec![s * (lap_r + r * r)],
        holds,
    );
    let surface_gauss = IdentityResidual::new(
        IdentityId::SurfaceGaussVariation,
        t,
        p,
        vec![0.5 * dr],
        vec![s * (0.5 * lap_r + 2.0 * k * k)],
        holds,
    );
    Ok(ScalarVariation { general, surface_scalar: Some(surface_scalar), surface_gauss: Some(surface_gauss) })
}

pub fn volume_form_variation_residual<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
    mode: VerifyMode,
) -> Result<IdentityResidual> {
    let holds = flow_check(field, t, p, params, mode)?;
    let nf = field.dim() as f64;
    let lhs: f64 = diff::derivative(|s| volume_form(field, s, p), t, spec)?;
    let r = curvature(field, t, p, spec)?.scalar;
    let rhs = -(params.alpha + 0.5 * nf * params.beta) * r * volume_form(field, t, p)?;
    Ok(IdentityResidual::new(IdentityId::VolumeFormVariation, t, p, vec![lhs], vec![rhs], holds))
}

/// The scalar-curvature identity when `2α + nβ = 0` and `α ≠ 0`.
pub fn constant_volume_scalar_residual<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    spec: &DiffSpec,
    mode: VerifyMode,
) -> Result<IdentityResidual> {
    let n = field.dim();
    let nf = n as f64;
    if params.mix(n).abs() > 1e-12 || params.alpha == 0.0 {
        return Err(Error::Precondition(format!(
            "needs 2a + nb = 0 and a != 0, got a = {}, b = {}, n = {n}",
            params.alpha, params.beta
        )));
    }
    let holds = flow_check(field, t, p, params, mode)?;
    let dr: f64 = diff::derivative(|tau| Ok(curvature(field, tau, p, spec)?.scalar), t, spec)?;
    let c = curvature(field, t, p, spec)?;
    let g_inv = checked_metric(field, t, p)?.inverse()?;
    let lap_r = if n == 2 { 0.0 } else { laplace_beltrami(scalar_at(field, t, spec), field, t, p, spec)? };
    let rhs = (2.0 - nf) / nf * lap_r + 2.0 * norm_sq(&c.ricci, &g_inv) - 2.0 / nf * c.scalar * c.scalar;
    Ok(IdentityResidual::new(IdentityId::ConstantVolumeScalar, t, p, vec![dr / params.alpha], vec![rhs], holds))
}

/// Lower curvature bound observed at one output time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSample {
    pub t: f64,
    pub min_gauss: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub samples: Vec<LowerBoundSample>,
    pub all_hold: bool,
}

/// Checks `min K(t) ≥ −1/(2(α+β)t) − tol` on periodic snapshots with `t > 0`.
///
/// `tol` is ten times the spatial truncation estimate `max |K₂ − K₄|`,
/// the gap between second- and fourth-order discrete curvature.
pub fn curvature_lower_bound_check(snapshots: &[ConformalGridState], params: &RyParams) -> Result<LowerBoundReport> {
    let s = params.sum();
    if s < 1.0 {
        return Err(Error::Precondition(format!("the bound needs a + b >= 1, got {s}")));
    }
    let mut samples = Vec::new();
    for state in snapshots.iter().filter(|st| st.t > 0.0) {
        if !state.bc.is_periodic() {
            return Err(Error::Precondition("the bound is checked on closed (periodic) grids only".into()));
        }
        let k2 = state.gauss_curvature_field(2)?;
        let k4 = state.gauss_curvature_field(4)?;
        let truncation = k2.iter().zip(k4.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let min_gauss = k4.iter().copied().fold(f64::INFINITY, f64::min);
        let bound = -1.0 / (2.0 * s * state.t);
        let tolerance = 10.0 * truncation;
        samples.push(LowerBoundSample { t: state.t, min_gauss, bound, tolerance, holds: min_gauss >= bound - tolerance });
    }
    let all_hold = samples.iter().all(|x| x.holds);
    Ok(LowerBoundReport { samples, all_hold })
}

/// The recurrence form `η = d ln K` of a positively curved surface, with
/// the residual of `∇_l Ric_ij = η_l Ric_ij` at the point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceForm {
    pub eta: Vec<f64>,
    pub gauss: f64,
    pub recurrence: IdentityResidual,
}

fn log_gauss<'a, M: MetricField + ?Sized>(field: &'a M, t: f64, spec: &'a DiffSpec) -> impl Fn(&[f64]) -> Result<f64> + 'a {
    let spec = *spec;
    move |q| {
        let k = 0.5 * curvature(field, t, q, &spec)?.scalar;
        if k > 0.0 {
            Ok(k.ln())
        } else {
            Err(Error::Positivity(format!("Gaussian curvature {k} at t = {t}, p = {q:?}")))
        }
    }
}

fn recurrence_residual<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    eta: &[f64],
    spec: &DiffSpec,
) -> Result<IdentityResidual> {
    let n = field.dim();
    let d_ric = covariant_derivative_sym2(ricci_at(field, t, spec), field, t, p, spec)?;
    let ric = curvature(field, t, p, spec)?.ricci;
    let mut rhs = Tensor3::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                rhs.set(l, i, j, eta[l] * ric.get(i, j));
            }
        }
    }
    Ok(IdentityResidual::new(
        IdentityId::RicciRecurrence,
        t,
        p,
        d_ric.as_slice().to_vec(),
        rhs.as_slice().to_vec(),
        true,
    ))
}

pub fn recurrent_eta<M: MetricField + ?Sized>(field: &M, t: f64, p: &[f64], spec: &DiffSpec) -> Result<RecurrenceForm> {
    if field.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: field.dim() });
    }
    let ln_k = log_gauss(field, t, spec);
    let gauss = ln_k(p)?.exp();
    let eta: Vec<f64> = diff::gradient(&ln_k, p, spec)?;
    let recurrence = recurrence_residual(field, t, p, &eta, spec)?;
    Ok(RecurrenceForm { eta, gauss, recurrence })
}

/// Recurrence form used by [`recurrent_variation_residuals`].
pub enum EtaSource<'a> {
    /// `η = d ln K` (surfaces with `K > 0`).
    Derived,
    /// `η(t, p)` given explicitly.
    Supplied(&'a (dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Sync)),
}

/// Christoffel and curvature variations rewritten with a recurrence form.
///
/// The recurrence `∇Ric = η ⊗ Ric` is checked first against `recurrence_tol`;
/// in strict mode a failure is an error. The second residual uses the
/// `ln K` form for a derived `η` and the divergence form otherwise.
pub fn recurrent_variation_residuals<M: MetricField + ?Sized>(
    field: &M,
    t: f64,
    p: &[f64],
    params: &RyParams,
    eta_source: EtaSource<'_>,
    spec: &DiffSpec,
    mode: VerifyMode,
    recurrence_tol: f64,
) -> Result<(IdentityResidual, IdentityResidual)> {
    let holds = flow_check(field, t, p, params, mode)?;
    let n = field.dim();
    let eta_at = |tau: f64, q: &[f64]| -> Result<Vec<f64>> {
        match &eta_source {
            EtaSource::Derived => diff::gradient(log_gauss(field, tau, spec), q, spec),
            EtaSource::Supplied(f) => f(tau, q),
        }
    };
    let eta = eta_at(t, p)?;
    let recurrence = recurrence_residual(field, t, p, &eta, spec)?;
    if recurrence.residual_norm > recurrence_tol && matches!(mode, VerifyMode::Strict { .. }) {
        return Err(Error::Precondition(format!(
            "Ricci recurrence residual {} exceeds {recurrence_tol}",
            recurrence.residual_norm
        )));
    }
    let holds = holds && recurrence.residual_norm <= recurrence_tol;

    let (a, b, s) = (params.alpha, params.beta, params.sum());
    let g = checked_metric(field, t, p)?;
    let g_inv = g.inverse()?;
    let c = curvature(field, t, p, spec)?;
    let r = c.scalar;
    let up_eta: Vec<f64> = (0..n).map(|k| (0..n).map(|l| g_inv.get(k, l) * eta[l]).sum()).collect();
    let mixed_ric = |k: usize, j: usize| (0..n).map(|m| g_inv.get(k, m) * c.ricci.get(m, j)).sum::<f64>();
    let lhs: Tensor3 = diff::derivative(|tau| christoffel(field, tau, p, spec), t, spec)?;
    let mut rhs = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let ricci_part = up_eta[k] * c.ricci.get(i, j) - eta[i] * mixed_ric(k, j) - eta[j] * mixed_ric(k, i);
                let scalar_part = eta[i] * kron(k, j) + eta[j] * kron(k, i) - g.get(i, j) * up_eta[k];
                rhs.set(k, i, j, a * ricci_part - 0.5 * b * scalar_part * r);
            }
        }
    }
    let christoffel_form = IdentityResidual::new(
        IdentityId::RecurrentChristoffelVariation,
        t,
        p,
        lhs.as_slice().to_vec(),
        rhs.as_slice().to_vec(),
        holds,
    );

    let eta_sq: f64 = (0..n).map(|i| eta[i] * up_eta[i]).sum();
    let second = match eta_source {
        EtaSource::Derived => {
            let ln_k = log_gauss(field, t, spec);
            let k = ln_k(p)?.exp();
            let dk: f64 = diff::derivative(|tau| Ok(0.5 * curvature(field, tau, p, spec)?.scalar), t, spec)?;
            let lap_ln_k = laplace_beltrami(&ln_k, field, t, p, spec)?;
            let rhs = s * ((lap_ln_k + eta_sq) * k + 2.0 * k * k);
            IdentityResidual::new(IdentityId::RecurrentGaussVariation, t, p, vec![dk], vec![rhs], holds)
        }
        EtaSource::Supplied(_) => {
            let flux = |q: &[f64]| -> Result<Vec<f64>> {
                let gq = checked_metric(field, t, q)?;
                let gq_inv = gq.inverse()?;
                let sqrt_det = gq.determinant().sqrt();
                let e = eta_at(t, q)?;
                Ok((0..n).map(|k| sqrt_det * (0..n).map(|l| gq_inv.get(k, l) * e[l]).sum::<f64>()).collect())
            };
            let mut div = 0.0;
            for l in 0..n {
                let d: Vec<f64> = diff::partial(&flux, p, l, spec)?;
                div += d[l];
            }
            div /= volume_form(field, t, p)?;
            let dr: f64 = diff::derivative(|tau| Ok(curvature(field, tau, p, spec)?.scalar), t, spec)?;
            let rhs = s * ((div + eta_sq) * r + r * r);
            IdentityResidual::new(IdentityId::RecurrentScalarVariation, t, p, vec![dr], vec![rhs], holds)
        }
    };
    Ok((christoffel_form, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{cigar_steady_potential, make_flow, BaseMetric, Flow, FlowKind, Potential};
    use crate::geometry::FnMetric;
    use approx::assert_relative_eq;

    fn steady_cigar(params: &RyParams) -> Flow {
        make_flow(FlowKind::GeneralizedCigar { f: cigar_steady_potential(params) }).unwrap()
    }

    fn coarse() -> DiffSpec {
        DiffSpec::new(0.1, 2, false).unwrap()
    }

    /// Curvature derivatives nest four difference levels; a wide order-4
    /// stencil keeps roundoff below the truncation error.
    fn nested() -> DiffSpec {
        DiffSpec::new(0.01, 4, false).unwrap()
    }

    #[test]
    fn flat_static_metric_has_zero_residuals() {
        let g = FnMetric::euclidean(2);
        let params = RyParams::ricci();
        let spec = DiffSpec::default();
        let p = [0.3, 0.4];
        let mode = VerifyMode::default();
        assert_eq!(christoffel_variation_residual(&g, 0.0, &p, &params, &spec, mode).unwrap().residual_norm, 0.0);
        let s = scalar_variation_residual(&g, 0.0, &p, &params, &spec, mode).unwrap();
        assert_eq!(s.general.residual_norm, 0.0);
        assert_eq!(s.surface_gauss.unwrap().residual_norm, 0.0);
        assert_eq!(volume_form_variation_residual(&g, 0.0, &p, &params, &spec, mode).unwrap().residual_norm, 0.0);
        let cv = RyParams::new(1.0, -1.0).unwrap();
        assert_eq!(constant_volume_scalar_residual(&g, 0.0, &p, &cv, &spec, mode).unwrap().residual_norm, 0.0);
    }

    #[test]
    fn christoffel_identity_converges_on_cigar() {
        for (a, b) in [(1.0, 0.0), (0.3, 0.7)] {
            let params = RyParams::new(a, b).unwrap();
            let flow = steady_cigar(&params);
            let r = refine(&[0.1, 0.05, 0.025], &coarse(), |spec| {
                christoffel_variation_residual(&flow, 0.0, &[0.3, 0.4], &params, spec, VerifyMode::default())
            })
            .unwrap();
            assert!(r.flow_equation_holds);
            for order in r.observed_orders() {
                assert!(order >= 1.8, "orders {:?}", r.observed_orders());
            }
        }
    }

    #[test]
    fn scalar_forms_agree_on_surfaces() {
        let params = RyParams::new(0.5, 0.5).unwrap();
        let flow = steady_cigar(&params);
        let s = scalar_variation_residual(&flow, 0.1, &[0.2, -0.1], &params, &nested(), VerifyMode::default()).unwrap();
        let sr = s.surface_scalar.unwrap();
        let sk = s.surface_gauss.unwrap();
        assert_relative_eq!(sr.rhs[0], 2.0 * sk.rhs[0], epsilon = 1e-12 * (1.0 + sr.rhs[0].abs()));
        assert_relative_eq!(s.general.rhs[0], sr.rhs[0], epsilon = 1e-6 * (1.0 + sr.rhs[0].abs()));
        assert!(s.general.residual_norm < 1e-5, "{}", s.general.residual_norm);
    }

    #[test]
    fn volume_form_at_cigar_origin() {
        let params = RyParams::new(1.0, 0.0).unwrap();
        let flow = steady_cigar(&params);
        let t = 0.2;
        let r = volume_form_variation_residual(&flow, t, &[0.0, 0.0], &params, &DiffSpec::default(), VerifyMode::default())
            .unwrap();
        let f = (4.0 * t).exp();
        assert_relative_eq!(r.lhs[0], -4.0 / f, epsilon = 1e-8);
        assert_relative_eq!(r.rhs[0], -4.0 / f, epsilon = 1e-8);
    }

    #[test]
    fn strict_mode_refuses_non_flows() {
        let params = RyParams::ricci();
        let flow = make_flow(FlowKind::GeneralizedCigar { f: Potential::Exponential { rate: 1.0 } }).unwrap();
        let r = volume_form_variation_residual(&flow, 0.0, &[0.1, 0.1], &params, &DiffSpec::default(), VerifyMode::default());
        assert!(matches!(r, Err(Error::NotRyFlow { .. })));
        let r = volume_form_variation_residual(&flow, 0.0, &[0.1, 0.1], &params, &DiffSpec::default(), VerifyMode::ReportOnly)
            .unwrap();
        assert!(!r.flow_equation_holds);
    }

    #[test]
    fn constant_volume_preconditions() {
        let g = FnMetric::euclidean(2);
        let spec = DiffSpec::default();
        let bad = RyParams::new(1.0, 0.0).unwrap();
        assert!(matches!(
            constant_volume_scalar_residual(&g, 0.0, &[0.0, 0.0], &bad, &spec, VerifyMode::default()),
            Err(Error::Precondition(_))
        ));
        let params = RyParams::new(1.0, -1.0).unwrap();
        let flow = make_flow(FlowKind::GeneralizedCigar { f: Potential::Constant(1.0) }).unwrap();
        let r = constant_volume_scalar_residual(&flow, 0.0, &[0.3, 0.2], &params, &spec, VerifyMode::default()).unwrap();
        assert!(r.rhs[0].abs() < 1e-8);
        assert!(r.residual_norm < 1e-8);
    }

    #[test]
    fn cigar_recurrence_form() {
        let params = RyParams::ricci();
        let flow = steady_cigar(&params);
        let t = 0.1;
        let p = [0.4, -0.2];
        let form = recurrent_eta(&flow, t, &p, &DiffSpec::default()).unwrap();
        let s = (4.0 * t).exp() + p[0] * p[0] + p[1] * p[1];
        assert_relative_eq!(form.eta[0], -2.0 * p[0] / s, epsilon = 1e-6);
        assert_relative_eq!(form.eta[1], -2.0 * p[1] / s, epsilon = 1e-6);
        assert!(form.recurrence.residual_norm < 1e-5);
    }

    #[test]
    fn negative_curvature_has_no_log_form() {
        let half_plane = FnMetric::conformal(2, |p| p[1].powi(-2));
        assert!(matches!(recurrent_eta(&half_plane, 0.0, &[0.0, 1.0], &DiffSpec::default()), Err(Error::Positivity(_))));
    }

    #[test]
    fn shrinking_round_sphere() {
        let params = RyParams::new(0.25, 0.25).unwrap();
        let flow = make_flow(FlowKind::Conformal {
            f: Potential::Linear { intercept: 1.0, slope: -2.0 * params.sum() },
            base: BaseMetric::Sphere { n: 2 },
        })
        .unwrap();
        let spec = nested();
        let t = 0.3;
        let p = [0.2, 0.1];
        let (chris, gauss) =
            recurrent_variation_residuals(&flow, t, &p, &params, EtaSource::Derived, &spec, VerifyMode::default(), 1e-5)
                .unwrap();
        let k = 1.0 / (1.0 - 2.0 * params.sum() * t);
        assert_relative_eq!(gauss.lhs[0], 2.0 * params.sum() * k * k, epsilon = 1e-6);
        assert!(gauss.residual_norm < 1e-5, "{}", gauss.residual_norm);
        assert!(chris.residual_norm < 1e-5);

        let zero = |_: f64, _: &[f64]| Ok(vec![0.0, 0.0]);
        let (_, scalar) = recurrent_variation_residuals(
            &flow,
            t,
            &p,
            &params,
            EtaSource::Supplied(&zero),
            &spec,
            VerifyMode::default(),
            1e-5,
        )
        .unwrap();
        let general = scalar_variation_residual(&flow, t, &p, &params, &spec, VerifyMode::default()).unwrap();
        assert_relative_eq!(scalar.rhs[0], general.surface_scalar.unwrap().rhs[0], epsilon = 1e-5);
    }

    #[test]
    fn cigar_gauss_form_off_axis() {
        let params = RyParams::ricci();
        let flow = steady_cigar(&params);
        let r = refine(&[0.1, 0.05, 0.025], &coarse(), |spec| {
            Ok(recurrent_variation_residuals(
                &flow,
                0.0,
                &[0.5, 0.0],
                &params,
                EtaSource::Derived,
                spec,
                VerifyMode::default(),
                1e-1,
            )?
            .1)
        })
        .unwrap();
        assert!(r.step_sequence[2].1 < r.step_sequence[0].1);
    }

    #[test]
    fn ladder_must_decrease() {
        let r = refine(&[0.1, 0.1], &coarse(), |_| unreachable!());
        assert!(r.is_err());
    }
}
