use std::fmt;
use std::sync::Arc;

use crate::diff::{self, DiffSpec};
use crate::error::{Error, Result};
use crate::geometry::{conformally_flat_curvature, CurvatureBundle, MetricField};
use crate::tensor::{SymTensor2, Tensor3};

use super::potential::Potential;
use super::sn::SnK;

/// Static Einstein base metrics, all conformally flat `λ(x)·δ` in the chart used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseMetric {
    Euclidean { n: usize },
    /// Unit round sphere in stereographic coordinates, `λ = 4 / (1 + |x|²)²`.
    Sphere { n: usize },
    /// Upper half-space model of hyperbolic space, `λ = x_n^{-2}`.
    Hyperbolic { n: usize },
}

impl BaseMetric {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Euclidean { n } | Self::Sphere { n } | Self::Hyperbolic { n } => n,
        }
    }

    pub fn conformal_factor(&self, p: &[f64]) -> Result<f64> {
        check_dim(self.dim(), p)?;
        match self {
            Self::Euclidean { .. } => Ok(1.0),
            Self::Sphere { .. } => Ok(4.0 / (1.0 + norm_sq(p)).powi(2)),
            Self::Hyperbolic { .. } => {
                let xn = p[p.len() - 1];
                if xn > 0.0 {
                    Ok(xn.powi(-2))
                } else {
                    Err(Error::OutOfDomain { what: "hyperbolic half-space", t: 0.0, point: p.to_vec() })
                }
            }
        }
    }

    /// Gradient and Hessian of `φ = ½ ln λ`.
    fn log_derivatives(&self, p: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = p.len();
        match self {
            Self::Euclidean { .. } => (vec![0.0; n], vec![vec![0.0; n]; n]),
            Self::Sphere { .. } => {
                let s = 1.0 + norm_sq(p);
                let grad = p.iter().map(|x| -2.0 * x / s).collect();
                let hess = (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| 4.0 * p[a] * p[b] / (s * s) - if a == b { 2.0 / s } else { 0.0 })
                            .collect()
                    })
                    .collect();
                (grad, hess)
            }
            Self::Hyperbolic { .. } => {
                let xn = p[n - 1];
                let mut grad = vec![0.0; n];
                grad[n - 1] = -1.0 / xn;
                let mut hess = vec![vec![0.0; n]; n];
                hess[n - 1][n - 1] = 1.0 / (xn * xn);
                (grad, hess)
            }
        }
    }

    pub fn curvature_at(&self, p: &[f64]) -> Result<CurvatureBundle> {
        let lambda = self.conformal_factor(p)?;
        let (grad, hess) = self.log_derivatives(p);
        Ok(conformally_flat_curvature(lambda, &grad, &hess))
    }

    /// The (constant) scalar curvature.
    pub fn scalar_curvature(&self) -> f64 {
        let n = self.dim() as f64;
        match self {
            Self::Euclidean { .. } => 0.0,
            Self::Sphere { .. } => n * (n - 1.0),
            Self::Hyperbolic { .. } => -n * (n - 1.0),
        }
    }
}

impl MetricField for BaseMetric {
    fn dim(&self) -> usize {
        BaseMetric::dim(self)
    }
    fn eval(&self, _t: f64, p: &[f64]) -> Result<SymTensor2> {
        Ok(scaled_identity(p.len(), self.conformal_factor(p)?))
    }
    fn exact_dt(&self, _t: f64, p: &[f64]) -> Option<Result<SymTensor2>> {
        Some(Ok(SymTensor2::zeros(p.len())))
    }
    fn exact_curvature(&self, _t: f64, p: &[f64]) -> Option<Result<CurvatureBundle>> {
        Some(self.curvature_at(p))
    }
}

type PlaneFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Positive conformal factor `E(u, v)` of a static isothermal surface metric.
#[derive(Clone)]
pub enum IsothermalFactor {
    Constant(f64),
    /// `E = 1 + amplitude · exp(−width · (u² + v²))`.
    GaussianBump { amplitude: f64, width: f64 },
    Custom { label: String, value: PlaneFn },
}

impl fmt::Debug for IsothermalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::GaussianBump { amplitude, width } => {
                write!(f, "GaussianBump {{ amplitude: {amplitude}, width: {width} }}")
            }
            Self::Custom { label, .. } => write!(f, "Custom({label:?})"),
        }
    }
}

const FACTOR_SPEC: DiffSpec = DiffSpec { step: 1e-3, order: 4, richardson: true };

impl IsothermalFactor {
    pub fn value(&self, p: &[f64]) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::GaussianBump { amplitude, width } => 1.0 + amplitude * (-width * norm_sq(p)).exp(),
            Self::Custom { value, .. } => value(p),
        }
    }

    pub fn gradient(&self, p: &[f64]) -> [f64; 2] {
        match self {
            Self::Constant(_) => [0.0, 0.0],
            Self::GaussianBump { amplitude, width } => {
                let e = amplitude * (-width * norm_sq(p)).exp();
                [-2.0 * width * p[0] * e, -2.0 * width * p[1] * e]
            }
            Self::Custom { value, .. } => {
                let g: Vec<f64> = diff::gradient(|q| Ok(value(q)), p, &FACTOR_SPEC).unwrap_or_default();
                [g[0], g[1]]
            }
        }
    }

    pub fn hessian(&self, p: &[f64]) -> [[f64; 2]; 2] {
        match self {
            Self::Constant(_) => [[0.0; 2]; 2],
            Self::GaussianBump { amplitude, width } => {
                let e = amplitude * (-width * norm_sq(p)).exp();
                let h = |a: usize, b: usize| {
                    e * (4.0 * width * width * p[a] * p[b] - if a == b { 2.0 * width } else { 0.0 })
                };
                [[h(0, 0), h(0, 1)], [h(1, 0), h(1, 1)]]
            }
            Self::Custom { value, .. } => {
                let h = |a, b| diff::second_partial(|q| Ok(value(q)), p, a, b, &FACTOR_SPEC).unwrap_or(f64::NAN);
                let off = h(0, 1);
                [[h(0, 0), off], [off, h(1, 1)]]
            }
        }
    }
}

/// Warping profile `G(u)` of `du² + f(t) G(u) dv²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WarpProfile {
    /// `G = sn_k²`.
    SnSquared(SnK),
    /// `G = u^p`.
    Power(f64),
}

impl WarpProfile {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Self::SnSquared(sn) => sn.eval(u).powi(2),
            Self::Power(p) => u.powf(*p),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Self::SnSquared(sn) => 2.0 * sn.eval(u) * sn.derivative(u),
            Self::Power(p) => p * u.powf(p - 1.0),
        }
    }

    /// `(ln G)''`.
    pub fn log_second_derivative(&self, u: f64) -> f64 {
        match self {
            Self::SnSquared(sn) => {
                let (s, c) = (sn.eval(u), sn.derivative(u));
                -2.0 * sn.k - 2.0 * c * c / (s * s)
            }
            Self::Power(p) => -p / (u * u),
        }
    }

    /// Gaussian curvature `−(√G)'' / √G` of `du² + c·G dv²` (independent of `c > 0`).
    pub fn gauss_curvature(&self, u: f64) -> f64 {
        match self {
            Self::SnSquared(sn) => sn.k,
            Self::Power(p) => {
                let q = 0.5 * p;
                -q * (q - 1.0) / (u * u)
            }
        }
    }
}

/// The catalog of time-dependent metrics.
#[derive(Debug, Clone)]
pub enum FlowKind {
    /// `g(t) = f(t)·g_base`.
    Conformal { f: Potential, base: BaseMetric },
    /// Conformal flow with `f(t) = t` on `t > 0`.
    Cone { base: BaseMetric },
    /// `g(t) = [(1 − t)E + t]·I` on a surface, `t ∈ [0, 1]`.
    ConvexEuclidean { e: IsothermalFactor },
    /// `g(t) = x_n^{−t}·g_e` on the upper half-space.
    Poincare { n: usize },
    /// `g(t) = I / (f(t) + u² + v²)`, `f(0) = 1`.
    GeneralizedCigar { f: Potential },
    /// `g(t) = du² + f(t)·sn_k(u)² dv²`, `f(0) = 1`.
    WarpedRotSym { f: Potential, k: f64 },
    /// `g(t) = du² + f(t)·G(u) dv²`, `f(0) = 1`.
    WarpedGeneral { f: Potential, g: WarpProfile },
}

impl FlowKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Conformal { .. } => "conformal",
            Self::Cone { .. } => "cone",
            Self::ConvexEuclidean { .. } => "convex-euclidean",
            Self::Poincare { .. } => "poincare",
            Self::GeneralizedCigar { .. } => "cigar",
            Self::WarpedRotSym { .. } => "warped",
            Self::WarpedGeneral { .. } => "warped-general",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Conformal { base, .. } | Self::Cone { base } => base.dim(),
            Self::Poincare { n } => *n,
            _ => 2,
        }
    }

    /// Time profile for the kinds that have one (cone reports `f(t) = t`).
    pub fn potential(&self) -> Option<Potential> {
        match self {
            Self::Conformal { f, .. }
            | Self::GeneralizedCigar { f }
            | Self::WarpedRotSym { f, .. }
            | Self::WarpedGeneral { f, .. } => Some(f.clone()),
            Self::Cone { .. } => Some(Potential::Linear { intercept: 0.0, slope: 1.0 }),
            _ => None,
        }
    }

    pub fn warp_profile(&self) -> Option<WarpProfile> {
        match self {
            Self::WarpedRotSym { k, .. } => Some(WarpProfile::SnSquared(SnK::new(*k))),
            Self::WarpedGeneral { g, .. } => Some(*g),
            _ => None,
        }
    }
}

/// A catalog flow as a [`MetricField`], with exact `∂_t g` always attached and
/// exact curvature attached on request.
#[derive(Debug, Clone)]
pub struct Flow {
    kind: FlowKind,
    exact_curvature: bool,
}

/// Validates the kind's parameters and wraps it as a metric field.
pub fn make_flow(kind: FlowKind) -> Result<Flow> {
    let unit_start = |f: &Potential, what: &str| -> Result<()> {
        let f0 = f.value(0.0);
        if (f0 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("{what} requires f(0) = 1, got {f0}")));
        }
        Ok(())
    };
    let base_ok = |base: &BaseMetric| -> Result<()> {
        if base.dim() == 0 {
            return Err(Error::InvalidParameter("base dimension must be at least 1".into()));
        }
        Ok(())
    };
    match &kind {
        FlowKind::Conformal { base, .. } | FlowKind::Cone { base } => base_ok(base)?,
        FlowKind::ConvexEuclidean { e } => match e {
            IsothermalFactor::Constant(c) if !(*c > 0.0) => {
                return Err(Error::InvalidParameter(format!("E must be positive, got {c}")))
            }
            IsothermalFactor::GaussianBump { amplitude, width } if !(*amplitude > -1.0 && *width > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "bump needs amplitude > -1 and width > 0, got {amplitude}, {width}"
                )))
            }
            _ => {}
        },
        FlowKind::Poincare { n } => {
            if *n < 2 {
                return Err(Error::InvalidParameter(format!("Poincaré flow needs n >= 2, got {n}")));
            }
        }
        FlowKind::GeneralizedCigar { f } => unit_start(f, "the generalized cigar flow")?,
        FlowKind::WarpedRotSym { f, k } => {
            unit_start(f, "the warped flow")?;
            if !k.is_finite() {
                return Err(Error::InvalidParameter(format!("curvature parameter k = {k}")));
            }
        }
        FlowKind::WarpedGeneral { f, .. } => unit_start(f, "the warped flow")?,
    }
    Ok(Flow { kind, exact_curvature: false })
}

fn check_dim(n: usize, p: &[f64]) -> Result<()> {
    if p.len() == n {
        Ok(())
    } else {
        Err(Error::Dimension { expected: n, got: p.len() })
    }
}

fn norm_sq(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

fn scaled_identity(n: usize, s: f64) -> SymTensor2 {
    SymTensor2::from_fn(n, |i, j| if i == j { s } else { 0.0 })
}

/// Conformal factor with the gradient and Hessian of `φ = ½ ln λ`.
struct ConformalData {
    lambda: f64,
    grad: Vec<f64>,
    hess: Vec<Vec<f64>>,
}

impl Flow {
    pub fn kind(&self) -> &FlowKind {
        &self.kind
    }

    /// Attaches the exact curvature so that RY evaluations use closed forms.
    pub fn with_exact_curvature(mut self) -> Self {
        self.exact_curvature = true;
        self
    }

    pub fn has_exact_curvature(&self) -> bool {
        self.exact_curvature
    }

    fn domain_error(&self, t: f64, p: &[f64]) -> Error {
        Error::OutOfDomain { what: self.kind.name(), t, point: p.to_vec() }
    }

    fn positive_profile(&self, f: &Potential, t: f64, p: &[f64]) -> Result<f64> {
        let v = f.value(t);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain_error(t, p))
        }
    }

    /// `λ(t, p)` for the conformally flat kinds.
    fn conformal_data(&self, t: f64, p: &[f64]) -> Result<Option<ConformalData>> {
        check_dim(self.kind.dim(), p)?;
        let n = p.len();
        let data = match &self.kind {
            FlowKind::Conformal { f, base } => {
                let ft = self.positive_profile(f, t, p)?;
                let (grad, hess) = base.log_derivatives(p);
                ConformalData { lambda: ft * base.conformal_factor(p)?, grad, hess }
            }
            FlowKind::Cone { base } => {
                if !(t > 0.0) {
                    return Err(self.domain_error(t, p));
                }
                let (grad, hess) = base.log_derivatives(p);
                ConformalData { lambda: t * base.conformal_factor(p)?, grad, hess }
            }
            FlowKind::ConvexEuclidean { e } => {
                let lambda = (1.0 - t) * e.value(p) + t;
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(self.domain_error(t, p));
                }
                let de = e.gradient(p);
                let he = e.hessian(p);
                let dl = [(1.0 - t) * de[0], (1.0 - t) * de[1]];
                let grad = vec![dl[0] / (2.0 * lambda), dl[1] / (2.0 * lambda)];
                let hess = (0..2)
                    .map(|a| {
                        (0..2)
                            .map(|b| (1.0 - t) * he[a][b] / (2.0 * lambda) - dl[a] * dl[b] / (2.0 * lambda * lambda))
                            .collect()
                    })
                    .collect();
                ConformalData { lambda, grad, hess }
            }
            FlowKind::Poincare { .. } => {
                let xn = p[n - 1];
                if !(xn > 0.0) {
                    return Err(self.domain_error(t, p));
                }
                let mut grad = vec![0.0; n];
                grad[n - 1] = -0.5 * t / xn;
                let mut hess = vec![vec![0.0; n]; n];
                hess[n - 1][n - 1] = 0.5 * t / (xn * xn);
                ConformalData { lambda: xn.powf(-t), grad, hess }
            }
            FlowKind::GeneralizedCigar { f } => {
                let s = f.value(t) + norm_sq(p);
                if !(s > 0.0 && s.is_finite()) {
                    return Err(self.domain_error(t, p));
                }
                let grad = p.iter().map(|x| -x / s).collect();
                let hess = (0..2)
                    .map(|a| {
                        (0..2)
                            .map(|b| 2.0 * p[a] * p[b] / (s * s) - if a == b { 1.0 / s } else { 0.0 })
                            .collect()
                    })
                    .collect();
                ConformalData { lambda: 1.0 / s, grad, hess }
            }
            FlowKind::WarpedRotSym { .. } | FlowKind::WarpedGeneral { .. } => return Ok(None),
        };
        Ok(Some(data))
    }

    /// `(f(t), G(u))` for the warped kinds, domain-checked.
    fn warped_parts(&self, t: f64, p: &[f64]) -> Result<(Potential, WarpProfile, f64, f64)> {
        check_dim(2, p)?;
        let (f, g) = match &self.kind {
            FlowKind::WarpedRotSym { f, k } => (f, WarpProfile::SnSquared(SnK::new(*k))),
            FlowKind::WarpedGeneral { f, g } => (f, *g),
            _ => unreachable!("warped_parts on a conformal kind"),
        };
        let ft = self.positive_profile(f, t, p)?;
        let gu = g.value(p[0]);
        if !(gu > 0.0 && gu.is_finite()) {
            return Err(self.domain_error(t, p));
        }
        Ok((f.clone(), g, ft, gu))
    }
}

impl MetricField for Flow {
    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn eval(&self, t: f64, p: &[f64]) -> Result<SymTensor2> {
        match self.conformal_data(t, p)? {
            Some(d) => Ok(scaled_identity(p.len(), d.lambda)),
            None => {
                let (_, _, ft, gu) = self.warped_parts(t, p)?;
                Ok(SymTensor2::diagonal(&[1.0, ft * gu]))
            }
        }
    }

    fn exact_dt(&self, t: f64, p: &[f64]) -> Option<Result<SymTensor2>> {
        let n = p.len();
        let value = (|| -> Result<SymTensor2> {
            self.eval(t, p)?;
            Ok(match &self.kind {
                FlowKind::Conformal { f, base } => scaled_identity(n, f.derivative(t) * base.conformal_factor(p)?),
                FlowKind::Cone { base } => scaled_identity(n, base.conformal_factor(p)?),
                FlowKind::ConvexEuclidean { e } => scaled_identity(2, 1.0 - e.value(p)),
                FlowKind::Poincare { .. } => {
                    let xn = p[n - 1];
                    scaled_identity(n, -xn.ln() * xn.powf(-t))
                }
                FlowKind::GeneralizedCigar { f } => {
                    let s = f.value(t) + norm_sq(p);
                    scaled_identity(2, -f.derivative(t) / (s * s))
                }
                FlowKind::WarpedRotSym { .. } | FlowKind::WarpedGeneral { .. } => {
                    let (f, _, _, gu) = self.warped_parts(t, p)?;
                    SymTensor2::diagonal(&[0.0, f.derivative(t) * gu])
                }
            })
        })();
        Some(value)
    }

    fn exact_curvature(&self, t: f64, p: &[f64]) -> Option<Result<CurvatureBundle>> {
        if !self.exact_curvature {
            return None;
        }
        let value = (|| -> Result<CurvatureBundle> {
            if let Some(d) = self.conformal_data(t, p)? {
                return Ok(conformally_flat_curvature(d.lambda, &d.grad, &d.hess));
            }
            let (_, g, ft, gu) = self.warped_parts(t, p)?;
            let u = p[0];
            let dg = g.derivative(u);
            let mut gamma = Tensor3::zeros(2);
            gamma.set(0, 1, 1, -0.5 * ft * dg);
            gamma.set(1, 0, 1, dg / (2.0 * gu));
            gamma.set(1, 1, 0, dg / (2.0 * gu));
            let k = g.gauss_curvature(u);
            Ok(CurvatureBundle {
                christoffel: gamma,
                ricci: SymTensor2::diagonal(&[k, k * ft * gu]),
                scalar: 2.0 * k,
                gauss: Some(k),
            })
        })();
        Some(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::curvature;
    use approx::assert_relative_eq;

    fn engine_matches_exact(flow: Flow, t: f64, p: &[f64]) {
        let spec = DiffSpec::default();
        let engine = curvature(&flow, t, p, &spec).unwrap();
        let exact = flow.with_exact_curvature().exact_curvature(t, p).unwrap().unwrap();
        assert!(
            engine.christoffel.sub(&exact.christoffel).max_abs() < 1e-8,
            "christoffel gap {}",
            engine.christoffel.sub(&exact.christoffel).max_abs()
        );
        assert!((&engine.ricci - &exact.ricci).max_abs() < 1e-6 * (1.0 + exact.ricci.max_abs()));
        assert_relative_eq!(engine.scalar, exact.scalar, epsilon = 1e-6 * (1.0 + exact.scalar.abs()));
    }

    #[test]
    fn exact_curvature_agrees_with_engine_across_catalog() {
        let kinds = vec![
            (FlowKind::Conformal { f: Potential::Exponential { rate: 0.5 }, base: BaseMetric::Sphere { n: 3 } }, vec![0.2, -0.1, 0.4]),
            (FlowKind::Cone { base: BaseMetric::Hyperbolic { n: 2 } }, vec![0.3, 1.2]),
            (FlowKind::ConvexEuclidean { e: IsothermalFactor::GaussianBump { amplitude: 0.5, width: 1.0 } }, vec![0.3, -0.2]),
            (FlowKind::Poincare { n: 3 }, vec![0.1, 0.2, 1.3]),
            (FlowKind::GeneralizedCigar { f: Potential::Exponential { rate: 4.0 } }, vec![0.3, 0.4]),
            (FlowKind::WarpedRotSym { f: Potential::Exponential { rate: 1.0 }, k: 1.0 }, vec![1.0, 0.3]),
            (FlowKind::WarpedRotSym { f: Potential::Exponential { rate: 1.0 }, k: -1.0 }, vec![0.7, 0.3]),
            (FlowKind::WarpedGeneral { f: Potential::Constant(1.0), g: WarpProfile::Power(3.0) }, vec![1.1, 0.0]),
        ];
        for (kind, p) in kinds {
            engine_matches_exact(make_flow(kind).unwrap(), 0.6, &p);
        }
    }

    #[test]
    fn examples_at_special_times() {
        let cone = make_flow(FlowKind::Cone { base: BaseMetric::Sphere { n: 2 } }).unwrap();
        let base = BaseMetric::Sphere { n: 2 };
        let p = [0.3, 0.1];
        assert_eq!(cone.eval(1.0, &p).unwrap(), base.eval(0.0, &p).unwrap());

        let cigar = make_flow(FlowKind::GeneralizedCigar { f: Potential::Constant(1.0) }).unwrap();
        assert_eq!(cigar.eval(3.0, &[0.0, 0.0]).unwrap(), SymTensor2::identity(2));

        let convex = make_flow(FlowKind::ConvexEuclidean {
            e: IsothermalFactor::GaussianBump { amplitude: 0.5, width: 1.0 },
        })
        .unwrap();
        assert_eq!(convex.eval(1.0, &p).unwrap(), SymTensor2::identity(2));
    }

    #[test]
    fn domain_violations_are_reported() {
        let poincare = make_flow(FlowKind::Poincare { n: 2 }).unwrap();
        assert!(matches!(poincare.eval(1.0, &[0.0, -1.0]), Err(Error::OutOfDomain { .. })));
        let cone = make_flow(FlowKind::Cone { base: BaseMetric::Euclidean { n: 2 } }).unwrap();
        assert!(cone.eval(0.0, &[0.0, 0.0]).is_err());
        assert!(make_flow(FlowKind::GeneralizedCigar { f: Potential::Constant(2.0) }).is_err());
        assert!(make_flow(FlowKind::Poincare { n: 1 }).is_err());
    }

    #[test]
    fn warped_volume_form_at_equator() {
        let flow = make_flow(FlowKind::WarpedRotSym { f: Potential::Constant(1.0), k: 1.0 }).unwrap();
        let v = crate::geometry::volume_form(&flow, 0.0, &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_dt_matches_time_differencing() {
        let flows = [
            FlowKind::Poincare { n: 2 },
            FlowKind::GeneralizedCigar { f: Potential::Exponential { rate: 2.0 } },
            FlowKind::WarpedRotSym { f: Potential::Exponential { rate: 1.0 }, k: 1.0 },
            FlowKind::ConvexEuclidean { e: IsothermalFactor::Constant(3.0) },
        ];
        let spec = DiffSpec::new(1e-3, 4, true).unwrap();
        for kind in flows {
            let flow = make_flow(kind).unwrap();
            let p = [0.8, 1.1];
            let fd: SymTensor2 = diff::derivative(|s| flow.eval(s, &p), 0.4, &spec).unwrap();
            let exact = flow.exact_dt(0.4, &p).unwrap().unwrap();
            assert!((&fd - &exact).max_abs() < 1e-9);
        }
    }
}
