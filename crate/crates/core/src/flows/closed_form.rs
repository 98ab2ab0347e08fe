//! Published closed forms for the catalog flows, reproduced as printed.
//!
//! These are comparison oracles. A few of them disagree with what the
//! generic engine computes (warped RY maps, the Poincaré accumulated volume,
//! the cigar volume rate); the disagreement is measured elsewhere and is
//! deliberately not corrected here.

use crate::error::{Error, Result};
use crate::ry::RyParams;
use crate::tensor::SymTensor2;

use super::catalog::{BaseMetric, FlowKind, IsothermalFactor, WarpProfile};
use super::potential::Potential;
use super::sn::SnK;

/// Rate of volume change and, where a closed form exists, its time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeVariation {
    pub rate: f64,
    pub accumulated: Option<f64>,
}

fn not_available(kind: &FlowKind, what: &str) -> Error {
    Error::NotAvailable(format!("no closed-form {what} for the {} flow", kind.name()))
}

fn out_of_domain(kind: &FlowKind, t: f64, p: &[f64]) -> Error {
    Error::OutOfDomain { what: kind.name(), t, point: p.to_vec() }
}

fn check_dim(kind: &FlowKind, p: &[f64]) -> Result<()> {
    let n = kind.dim();
    if p.len() == n {
        Ok(())
    } else {
        Err(Error::Dimension { expected: n, got: p.len() })
    }
}

fn half_space_height(kind: &FlowKind, t: f64, p: &[f64]) -> Result<f64> {
    let xn = p[p.len() - 1];
    if xn > 0.0 {
        Ok(xn)
    } else {
        Err(out_of_domain(kind, t, p))
    }
}

/// Time profile and its derivative for the conformal and cone kinds.
fn conformal_profile(kind: &FlowKind, t: f64, p: &[f64]) -> Result<(BaseMetric, Potential, f64, f64)> {
    let (base, f) = match kind {
        FlowKind::Conformal { f, base } => (*base, f.clone()),
        FlowKind::Cone { base } => {
            if !(t > 0.0) {
                return Err(out_of_domain(kind, t, p));
            }
            (*base, Potential::Linear { intercept: 0.0, slope: 1.0 })
        }
        _ => unreachable!(),
    };
    let ft = f.value(t);
    if !(ft > 0.0) {
        return Err(out_of_domain(kind, t, p));
    }
    Ok((base, f.clone(), ft, f.derivative(t)))
}

/// Ricci tensor and scalar curvature of the conformal and Poincaré flows.
pub fn closed_form_ric_scalar(kind: &FlowKind, t: f64, p: &[f64]) -> Result<(SymTensor2, f64)> {
    check_dim(kind, p)?;
    match kind {
        FlowKind::Conformal { .. } | FlowKind::Cone { .. } => {
            let (base, _, ft, _) = conformal_profile(kind, t, p)?;
            let c = base.curvature_at(p)?;
            Ok((c.ricci, c.scalar / ft))
        }
        FlowKind::Poincare { n } => {
            let nf = *n as f64;
            let xn = half_space_height(kind, t, p)?;
            let x2 = xn * xn;
            let tangential = ((2.0 - nf) * t * t - 2.0 * t) / (4.0 * x2);
            let normal = (1.0 - nf) * t / (2.0 * x2);
            let ric = SymTensor2::from_fn(*n, |i, j| match (i == j, i == n - 1) {
                (false, _) => 0.0,
                (true, false) => tangential,
                (true, true) => normal,
            });
            let r = (1.0 - nf) / xn.powf(2.0 - t) * (t + (nf - 2.0) * t * t / 4.0);
            Ok((ric, r))
        }
        _ => Err(not_available(kind, "Ricci tensor")),
    }
}

/// `Δ ln[(1 − t)E + t]` in the flat `(u, v)` Laplacian.
fn convex_log_laplacian(e: &IsothermalFactor, t: f64, p: &[f64]) -> f64 {
    let lambda = (1.0 - t) * e.value(p) + t;
    let de = e.gradient(p);
    let he = e.hessian(p);
    let s = 1.0 - t;
    let lap = s * (he[0][0] + he[1][1]);
    let grad_sq = s * s * (de[0] * de[0] + de[1] * de[1]);
    lap / lambda - grad_sq / (lambda * lambda)
}

/// The printed RY map of each catalog flow.
pub fn closed_form_ry(kind: &FlowKind, t: f64, p: &[f64], params: &RyParams) -> Result<SymTensor2> {
    check_dim(kind, p)?;
    let (alpha, beta, sum) = (params.alpha, params.beta, params.sum());
    match kind {
        FlowKind::Conformal { .. } | FlowKind::Cone { .. } => {
            let (base, _, _, df) = conformal_profile(kind, t, p)?;
            let g = base.conformal_factor(p)?;
            let c = base.curvature_at(p)?;
            let gb = SymTensor2::from_fn(p.len(), |i, j| if i == j { g } else { 0.0 });
            Ok(&gb.scale(df + beta * c.scalar) + &c.ricci.scale(2.0 * alpha))
        }
        FlowKind::ConvexEuclidean { e } => {
            let lambda = (1.0 - t) * e.value(p) + t;
            if !(lambda > 0.0) {
                return Err(out_of_domain(kind, t, p));
            }
            let c = 1.0 - e.value(p) - sum * convex_log_laplacian(e, t, p);
            Ok(SymTensor2::diagonal(&[c, c]))
        }
        FlowKind::Poincare { n } => {
            let nf = *n as f64;
            let xn = half_space_height(kind, t, p)?;
            let bracket = t + (nf - 2.0) * t * t / 4.0;
            let iso = (1.0 - nf) * beta * bracket - xn.powf(2.0 - t) * xn.ln();
            let tangential = ((1.0 - nf / 2.0) * t * t - t) * alpha;
            let normal = (1.0 - nf) * alpha * t;
            let x2 = xn * xn;
            Ok(SymTensor2::from_fn(*n, |i, j| {
                if i != j {
                    0.0
                } else if i == n - 1 {
                    (iso + normal) / x2
                } else {
                    (iso + tangential) / x2
                }
            }))
        }
        FlowKind::GeneralizedCigar { f } => {
            let s = f.value(t) + p[0] * p[0] + p[1] * p[1];
            if !(s > 0.0) {
                return Err(out_of_domain(kind, t, p));
            }
            let c = (4.0 * sum * f.value(t) - f.derivative(t)) / (s * s);
            Ok(SymTensor2::diagonal(&[c, c]))
        }
        FlowKind::WarpedRotSym { f, k } => {
            let ft = f.value(t);
            let sn2 = SnK::new(*k).eval(p[0]).powi(2);
            if !(ft > 0.0 && sn2 > 0.0) {
                return Err(out_of_domain(kind, t, p));
            }
            let c = -2.0 * k * sum / ft.sqrt();
            Ok(SymTensor2::diagonal(&[c, f.derivative(t) * sn2 + c * ft * sn2]))
        }
        FlowKind::WarpedGeneral { f, g } => warped_general_ry(f, *g, t, p, sum)
            .ok_or_else(|| out_of_domain(kind, t, p)),
    }
}

fn warped_general_ry(f: &Potential, g: WarpProfile, t: f64, p: &[f64], sum: f64) -> Option<SymTensor2> {
    let ft = f.value(t);
    let gu = g.value(p[0]);
    if !(ft > 0.0 && gu > 0.0) {
        return None;
    }
    let c = -sum / (ft * gu).sqrt() * g.log_second_derivative(p[0]);
    Some(SymTensor2::diagonal(&[c, f.derivative(t) * gu + c * ft * gu]))
}

/// The printed volume variation: rate, and the accumulated volume where one is printed.
///
/// For the Poincaré flow only the accumulated form is printed; its rate is
/// the exact time derivative of that form.
pub fn closed_form_volume_variation(
    kind: &FlowKind,
    t: f64,
    p: &[f64],
    params: &RyParams,
) -> Result<VolumeVariation> {
    check_dim(kind, p)?;
    let sum = params.sum();
    match kind {
        FlowKind::Conformal { .. } | FlowKind::Cone { .. } => {
            let n = p.len();
            let (base, f, ft, df) = conformal_profile(kind, t, p)?;
            let mix = params.mix(n);
            let rb = base.scalar_curvature();
            let nf = n as f64;
            let accumulated = nf * ft.ln() + mix * rb * f.inverse_antiderivative(t)?;
            Ok(VolumeVariation { rate: (nf * df + mix * rb) / ft, accumulated: Some(accumulated) })
        }
        FlowKind::Poincare { n: 2 } => {
            let x = half_space_height(kind, t, p)?;
            let accumulated = -0.5 * sum * t * t + x.powf(2.0 - t);
            let rate = -sum * t - x.powf(2.0 - t) * x.ln();
            Ok(VolumeVariation { rate, accumulated: Some(accumulated) })
        }
        FlowKind::GeneralizedCigar { f } => {
            let s = f.value(t) + p[0] * p[0] + p[1] * p[1];
            if !(s > 0.0) {
                return Err(out_of_domain(kind, t, p));
            }
            Ok(VolumeVariation { rate: (4.0 * sum * f.value(t) - f.derivative(t)) / s, accumulated: None })
        }
        FlowKind::WarpedRotSym { f, k } => {
            let ft = f.positive_at(t)?;
            let rate = f.derivative(t) / ft - 4.0 * k * sum / ft.sqrt();
            let accumulated = ft.ln() - 4.0 * k * sum * f.inverse_sqrt_antiderivative(t)?;
            Ok(VolumeVariation { rate, accumulated: Some(accumulated) })
        }
        _ => Err(not_available(kind, "volume variation")),
    }
}

/// The potential `t ↦ e^{4(α+β)t}` that makes the generalized cigar flow steady.
pub fn cigar_steady_potential(params: &RyParams) -> Potential {
    Potential::Exponential { rate: 4.0 * params.sum() }
}
