//! Side-by-side evaluations of published formulas that disagree with what
//! the generic engine (or a direct derivation) produces.
//!
//! Each record keeps both numbers; nothing here decides which one is right.

use serde::{Deserialize, Serialize};

use crate::diff::DiffSpec;
use crate::error::Result;
use crate::flows::{closed_form_ry, closed_form_volume_variation, make_flow, FlowKind, Potential, WarpProfile};
use crate::pde::{residual_liouville, residual_parabolic, residual_polar, residual_polar_full};
use crate::ry::{accumulated_volume_change, ry_eval, volume_variation_rate, RyParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub id: String,
    pub description: String,
    /// The published expression being evaluated.
    pub printed_form: String,
    /// How the comparison value was obtained.
    pub engine_method: String,
    pub t: f64,
    pub point: Vec<f64>,
    pub params: RyParams,
    pub printed: f64,
    pub engine: f64,
    /// `|printed − engine| / max(|printed|, |engine|)`, zero when both vanish.
    pub relative_gap: f64,
    /// `printed / engine`, when the engine value is nonzero.
    pub ratio: Option<f64>,
}

impl DiscrepancyRecord {
    #[allow(clippy::too_many_arguments)]
    fn new(
        id: &str,
        description: &str,
        printed_form: &str,
        engine_method: &str,
        t: f64,
        point: &[f64],
        params: &RyParams,
        printed: f64,
        engine: f64,
    ) -> Self {
        let scale = printed.abs().max(engine.abs());
        Self {
            id: id.into(),
            description: description.into(),
            printed_form: printed_form.into(),
            engine_method: engine_method.into(),
            t,
            point: point.to_vec(),
            params: *params,
            printed,
            engine,
            relative_gap: if scale == 0.0 { 0.0 } else { (printed - engine).abs() / scale },
            ratio: (engine != 0.0).then(|| printed / engine),
        }
    }
}

pub const WARPED_ROTSYM_RY: &str = "warped-rotsym-ry";
pub const WARPED_GENERAL_RY: &str = "warped-general-ry";
pub const WARPED_VOLUME_RATE: &str = "warped-volume-rate";
pub const POINCARE_ACCUMULATED_VOLUME: &str = "poincare-accumulated-volume";
pub const CIGAR_VOLUME_RATE: &str = "cigar-volume-rate";
pub const POLAR_FLOW_EQUATION: &str = "polar-flow-equation";
pub const POLAR_ADDITIVE_SEPARATION: &str = "polar-additive-separation";
pub const PARABOLIC_FLOW_EQUATION: &str = "parabolic-flow-equation";

/// Every ledger id, in report order.
pub const LEDGER_IDS: [&str; 8] = [
    WARPED_ROTSYM_RY,
    WARPED_GENERAL_RY,
    WARPED_VOLUME_RATE,
    POINCARE_ACCUMULATED_VOLUME,
    CIGAR_VOLUME_RATE,
    POLAR_FLOW_EQUATION,
    POLAR_ADDITIVE_SEPARATION,
    PARABOLIC_FLOW_EQUATION,
];

/// `du²` coefficient of the warped RY map on `du² + e^t sn_k² dv²`.
pub fn warped_rotsym_record(params: &RyParams, k: f64, t: f64, p: &[f64], spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let kind = FlowKind::WarpedRotSym { f: Potential::Exponential { rate: 1.0 }, k };
    let printed = closed_form_ry(&kind, t, p, params)?.get(0, 0);
    let engine = ry_eval(&make_flow(kind)?, t, p, params, spec)?.get(0, 0);
    Ok(DiscrepancyRecord::new(
        WARPED_ROTSYM_RY,
        "du² coefficient of the RY map of the rotationally symmetric warped flow",
        "-2k(α+β)/√f",
        "generic engine: ∂_t g + 2α Ric + β R g with finite-difference curvature",
        t,
        p,
        params,
        printed,
        engine,
    ))
}

/// `du²` coefficient of the warped RY map on `du² + e^t u^q dv²`.
pub fn warped_general_record(params: &RyParams, q: f64, t: f64, p: &[f64], spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let kind = FlowKind::WarpedGeneral { f: Potential::Exponential { rate: 1.0 }, g: WarpProfile::Power(q) };
    let printed = closed_form_ry(&kind, t, p, params)?.get(0, 0);
    let engine = ry_eval(&make_flow(kind)?, t, p, params, spec)?.get(0, 0);
    Ok(DiscrepancyRecord::new(
        WARPED_GENERAL_RY,
        "du² coefficient of the RY map of the general warped flow",
        "-(α+β)/√(fG)·(ln G)''",
        "generic engine: ∂_t g + 2α Ric + β R g with finite-difference curvature",
        t,
        p,
        params,
        printed,
        engine,
    ))
}

/// Volume variation rate of the warped flow on `du² + e^t sn_k² dv²`.
pub fn warped_volume_record(params: &RyParams, k: f64, t: f64, p: &[f64], spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let kind = FlowKind::WarpedRotSym { f: Potential::Exponential { rate: 1.0 }, k };
    let printed = closed_form_volume_variation(&kind, t, p, params)?.rate;
    let engine = volume_variation_rate(&make_flow(kind)?, t, p, params, spec)?;
    Ok(DiscrepancyRecord::new(
        WARPED_VOLUME_RATE,
        "volume variation rate of the rotationally symmetric warped flow",
        "f'/f - 4k(α+β)/√f",
        "generic engine: Tr_g RY",
        t,
        p,
        params,
        printed,
        engine,
    ))
}

/// Change of the accumulated volume of the 2D Poincaré flow between 0 and `t`.
pub fn poincare_volume_record(params: &RyParams, t: f64, p: &[f64], spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let kind = FlowKind::Poincare { n: 2 };
    let at = |s: f64| -> Result<f64> {
        Ok(closed_form_volume_variation(&kind, s, p, params)?.accumulated.expect("printed for n = 2"))
    };
    let printed = at(t)? - at(0.0)?;
    let engine = accumulated_volume_change(&make_flow(kind)?, p, 0.0, t, params, spec, 1e-10)?;
    Ok(DiscrepancyRecord::new(
        POINCARE_ACCUMULATED_VOLUME,
        "accumulated volume change of the 2D Poincaré flow over [0, t]",
        "V(t) - V(0) with V = -(α+β)t²/2 + x^(2-t)",
        "generic engine: quadrature of Tr_g RY over [0, t]",
        t,
        p,
        params,
        printed,
        engine,
    ))
}

/// Volume variation rate of the cigar flow with `f = e^{ct}`.
pub fn cigar_volume_record(params: &RyParams, c: f64, t: f64, p: &[f64], spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let kind = FlowKind::GeneralizedCigar { f: Potential::Exponential { rate: c } };
    let printed = closed_form_volume_variation(&kind, t, p, params)?.rate;
    let engine = volume_variation_rate(&make_flow(kind)?, t, p, params, spec)?;
    Ok(DiscrepancyRecord::new(
        CIGAR_VOLUME_RATE,
        "volume variation rate of the generalized cigar flow",
        "(4(α+β)f - f')/(f + r²)",
        "generic engine: Tr_g RY",
        t,
        p,
        params,
        printed,
        engine,
    ))
}

/// Polar Laplacian of `h(x, y) = −ln(e^{4t} + x² + y²)` written through
/// `H(u, v) = h(√(u²+v²), atan2(v, u))`, frozen at time `t`.
pub fn polar_record(t: f64, x: f64, y: f64, spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let f = (4.0 * t).exp();
    let frozen = move |_: f64, u: f64, v: f64| -(f + u * u + v * v + v.atan2(u).powi(2)).ln();
    let printed = residual_polar(&frozen, x, y, 0.0, spec)?;
    let engine = residual_polar_full(&frozen, x, y, 0.0, spec)?;
    Ok(DiscrepancyRecord::new(
        POLAR_FLOW_EQUATION,
        "spatial side of the polar flow equation for a frozen cigar profile",
        "H_uu(cos²y + x²sin²y) + H_vv(sin²y + x²cos²y) + 2H_uv sin y cos y (1 - x²)",
        "full transformed Laplacian h_xx + h_yy, including -x(H_u cos y + H_v sin y)",
        t,
        &[x, y],
        &RyParams::ricci(),
        printed,
        engine,
    ))
}

/// Time side of the additive polar separation for `f = t u`, `g = v`.
pub fn polar_additive_record(t: f64, x: f64, y: f64) -> DiscrepancyRecord {
    let (u, v) = (x * y.cos(), x * y.sin());
    let (f, g, f_t) = (t * u, v, u);
    DiscrepancyRecord::new(
        POLAR_ADDITIVE_SEPARATION,
        "time side of the additive polar separation h = f(u) + g(v) with f = t u, g = v",
        "(f_t + g_t)·exp(f g)",
        "(f_t + g_t)·exp(f + g), the time derivative of e^h for h = f + g",
        t,
        &[x, y],
        &RyParams::ricci(),
        f_t * (f * g).exp(),
        f_t * (f + g).exp(),
    )
}

/// Spatial side of the parabolic flow equation for a frozen cigar profile
/// `h(ξ, η) = −ln(e^{4t} + ξ² + η²)`, at the point `(u, v)`.
pub fn parabolic_record(t: f64, u: f64, v: f64, spec: &DiffSpec) -> Result<DiscrepancyRecord> {
    let f = (4.0 * t).exp();
    let h = move |_: f64, xi: f64, eta: f64| -(f + xi * xi + eta * eta).ln();
    let pulled = move |_: f64, a: f64, b: f64| h(0.0, 0.5 * (a * a - b * b), a * b);
    let (xi, eta) = (0.5 * (u * u - v * v), u * v);
    let printed = residual_parabolic(&h, xi, eta, 0.0, spec)?;
    let engine = residual_liouville(&pulled, u, v, 0.0, spec)?;
    Ok(DiscrepancyRecord::new(
        PARABOLIC_FLOW_EQUATION,
        "spatial side of the parabolic flow equation for a frozen cigar profile",
        "2√(ξ²+η²)(h_ξξ + h_ηη)",
        "(h_uu + h_vv)/(u² + v²) in the parabolic (u, v) chart",
        t,
        &[u, v],
        &RyParams::ricci(),
        printed,
        engine,
    ))
}

/// The full ledger at fixed sample points, with `params` for the flow records.
pub fn standard_ledger(params: &RyParams, spec: &DiffSpec) -> Result<Vec<DiscrepancyRecord>> {
    Ok(vec![
        warped_rotsym_record(params, 1.0, 0.4, &[0.7, 0.3], spec)?,
        warped_general_record(params, 2.0, 0.4, &[0.8, 0.3], spec)?,
        warped_volume_record(params, 1.0, 0.4, &[0.7, 0.3], spec)?,
        poincare_volume_record(params, 0.8, &[0.3, 1.7], spec)?,
        cigar_volume_record(params, 2.0, 0.25, &[0.3, -0.4], spec)?,
        polar_record(0.05, 1.1, 0.6, spec)?,
        polar_additive_record(0.5, 1.2, 0.5),
        parabolic_record(0.05, 0.9, 0.7, spec)?,
    ])
}
