//! Pointwise residuals of the surface flow equation `(e^h)_t = Δh` written in
//! polar, parabolic and elliptic coordinates, and of its single-variable
//! (solitonic) and separated reductions.
//!
//! The coefficient formulas are the published ones, kept as printed even
//! where a direct change of variables gives something else; the full polar
//! Laplacian and the parabolic `(u, v)` form are provided alongside.
//!
//! Sign conventions: flow-equation and solitonic residuals are the spatial
//! side minus the time side. Separated residuals are the printed left side
//! minus the printed right side.
//!
//! Fields are plain closures: `h(t, a, b)` for a function of time and two
//! coordinates, `φ(t, w)` or `f(t, s)` for functions of time and one
//! variable. All derivatives are central differences driven by one
//! [`DiffSpec`], in time as well as space.

use serde::{Deserialize, Serialize};

use super::chart::to_cartesian;
use super::state::Chart;
use crate::diff::{self, DiffSpec};
use crate::error::{Error, Result};

fn d1<F: Fn(f64) -> f64>(f: F, x: f64, spec: &DiffSpec) -> Result<f64> {
    diff::derivative(|s| Ok(f(s)), x, spec)
}

fn d2<F: Fn(f64) -> f64>(f: F, x: f64, spec: &DiffSpec) -> Result<f64> {
    diff::second_derivative(|s| Ok(f(s)), x, spec)
}

/// First and second partials of `h(t, ·, ·)` at `(a, b)`.
struct Partials {
    ha: f64,
    hb: f64,
    haa: f64,
    hbb: f64,
    hab: f64,
}

fn partials<H: Fn(f64, f64, f64) -> f64>(h: &H, t: f64, a: f64, b: f64, spec: &DiffSpec) -> Result<Partials> {
    let f = |q: &[f64]| Ok(h(t, q[0], q[1]));
    let p = [a, b];
    Ok(Partials {
        ha: diff::partial(f, &p, 0, spec)?,
        hb: diff::partial(f, &p, 1, spec)?,
        haa: diff::second_partial(f, &p, 0, 0, spec)?,
        hbb: diff::second_partial(f, &p, 1, 1, spec)?,
        hab: diff::second_partial(f, &p, 0, 1, spec)?,
    })
}

fn exp_time_derivative<H: Fn(f64, f64, f64) -> f64>(h: &H, t: f64, a: f64, b: f64, spec: &DiffSpec) -> Result<f64> {
    d1(|s| h(s, a, b).exp(), t, spec)
}

/// Polar coefficients `(cos²y + x²sin²y, sin²y + x²cos²y, sin y cos y (1 − x²))`.
fn polar_coefficients(x: f64, y: f64) -> Result<(f64, f64, f64)> {
    if x == 0.0 {
        return Err(Error::ChartDegenerate("polar axis x = 0".into()));
    }
    let (s, c) = y.sin_cos();
    Ok((c * c + x * x * s * s, s * s + x * x * c * c, s * c * (1.0 - x * x)))
}

/// Printed polar flow equation at polar point `(x, y)`; `h` is a function of
/// `(t, u, v)` with `u = x cos y`, `v = x sin y`.
pub fn residual_polar<H: Fn(f64, f64, f64) -> f64>(h: &H, x: f64, y: f64, t: f64, spec: &DiffSpec) -> Result<f64> {
    let (a, b, m) = polar_coefficients(x, y)?;
    let (u, v) = (x * y.cos(), x * y.sin());
    let p = partials(h, t, u, v, spec)?;
    Ok(p.haa * a + p.hbb * b + 2.0 * p.hab * m - exp_time_derivative(h, t, u, v, spec)?)
}

/// The chain-rule term `−x (h_u cos y + h_v sin y)` absent from the printed polar form.
pub fn polar_first_order_term<H: Fn(f64, f64, f64) -> f64>(h: &H, x: f64, y: f64, t: f64, spec: &DiffSpec) -> Result<f64> {
    polar_coefficients(x, y)?;
    let (u, v) = (x * y.cos(), x * y.sin());
    let p = partials(h, t, u, v, spec)?;
    Ok(-x * (p.ha * y.cos() + p.hb * y.sin()))
}

/// Polar residual with the full transformed Laplacian `h_xx + h_yy`.
pub fn residual_polar_full<H: Fn(f64, f64, f64) -> f64>(h: &H, x: f64, y: f64, t: f64, spec: &DiffSpec) -> Result<f64> {
    Ok(residual_polar(h, x, y, t, spec)? + polar_first_order_term(h, x, y, t, spec)?)
}

/// Printed parabolic flow equation, `2√(ξ²+η²)(h_ξξ + h_ηη) − (e^h)_t`.
pub fn residual_parabolic<H: Fn(f64, f64, f64) -> f64>(h: &H, xi: f64, eta: f64, t: f64, spec: &DiffSpec) -> Result<f64> {
    if xi == 0.0 && eta == 0.0 {
        return Err(Error::ChartDegenerate("parabolic origin".into()));
    }
    let p = partials(h, t, xi, eta, spec)?;
    Ok(2.0 * xi.hypot(eta) * (p.haa + p.hbb) - exp_time_derivative(h, t, xi, eta, spec)?)
}

/// Flow equation in the parabolic `(u, v)` chart, where the flat metric is
/// `(u² + v²)(du² + dv²)`: `(h_uu + h_vv)/(u² + v²) − (e^h)_t`.
pub fn residual_liouville<H: Fn(f64, f64, f64) -> f64>(h: &H, u: f64, v: f64, t: f64, spec: &DiffSpec) -> Result<f64> {
    let w = u * u + v * v;
    if w == 0.0 {
        return Err(Error::ChartDegenerate("parabolic origin".into()));
    }
    let p = partials(h, t, u, v, spec)?;
    Ok((p.haa + p.hbb) / w - exp_time_derivative(h, t, u, v, spec)?)
}

/// Published `(Δ_{u,v} x, Δ_{u,v} y)` for the elliptic chart.
pub fn elliptic_laplacians(u: f64, v: f64, c: f64) -> Result<(f64, f64)> {
    check_elliptic(u, v)?;
    let dx = -c / 4.0 * (1.0 / (u - 1.0) * ((v - 1.0) / (u - 1.0)).sqrt() + 1.0 / (v - 1.0) * ((u - 1.0) / (v - 1.0)).sqrt());
    let dy = -c / 4.0 * (1.0 / u * (-v / u).sqrt() + 1.0 / v * (-u / v).sqrt());
    Ok((dx, dy))
}

fn check_elliptic(u: f64, v: f64) -> Result<()> {
    if u == 0.0 || v == 0.0 || u == 1.0 || v == 1.0 {
        return Err(Error::ChartDegenerate(format!("elliptic coordinate line through ({u}, {v})")));
    }
    if !((u - 1.0) * (v - 1.0) > 0.0 && u * v < 0.0) {
        return Err(Error::ChartDegenerate(format!("elliptic point ({u}, {v}) has no real image")));
    }
    Ok(())
}

/// Elliptic second-order coefficients `(v−u)/(u(u−1))`, the mixed one, `(u−v)/(v(v−1))`.
fn elliptic_coefficients(u: f64, v: f64) -> (f64, f64, f64) {
    (
        (v - u) / (u * (u - 1.0)),
        v * (1.0 - v) / (u * (u - 1.0)) + u * (1.0 - u) / (v * (v - 1.0)),
        (u - v) / (v * (v - 1.0)),
    )
}

/// Printed elliptic flow equation at chart point `(u, v)`; `h` is a function
/// of `(t, x, y)`.
pub fn residual_elliptic<H: Fn(f64, f64, f64) -> f64>(h: &H, u: f64, v: f64, c: f64, t: f64, spec: &DiffSpec) -> Result<f64> {
    let (lx, ly) = elliptic_laplacians(u, v, c)?;
    let (x, y) = to_cartesian(Chart::EllipticUV { c }, u, v)?;
    let p = partials(h, t, x, y, spec)?;
    let (e1, e2, e3) = elliptic_coefficients(u, v);
    let spatial = p.ha * lx + p.hb * ly + c * c / 4.0 * (p.haa * e1 + 2.0 * p.hab * e2 + p.hbb * e3);
    Ok(spatial - exp_time_derivative(h, t, x, y, spec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolitonKind {
    Polar,
    Parabolic,
    Elliptic { c: f64 },
}

/// Printed single-variable reduction `h = φ(t, w)` with `w` the first chart
/// variable plus `a` times the second (`u + a v`, `ξ + a η`, `x + a y`).
///
/// The point is polar `(x, y)`, parabolic `(ξ, η)` or elliptic `(u, v)`.
/// The elliptic first-order term carries `a·h_y·Δy` as printed, with
/// `h_y = a φ_w`.
pub fn solitonic_residual<P: Fn(f64, f64) -> f64>(
    kind: SolitonKind,
    phi: &P,
    a: f64,
    point: [f64; 2],
    t: f64,
    spec: &DiffSpec,
) -> Result<f64> {
    let [p1, p2] = point;
    let (w, spatial_coefficient, first_order) = match kind {
        SolitonKind::Polar => {
            let (ca, cb, m) = polar_coefficients(p1, p2)?;
            (p1 * p2.cos() + a * p1 * p2.sin(), ca + a * a * cb + 2.0 * a * m, None)
        }
        SolitonKind::Parabolic => {
            if p1 == 0.0 && p2 == 0.0 {
                return Err(Error::ChartDegenerate("parabolic origin".into()));
            }
            (p1 + a * p2, 2.0 * p1.hypot(p2) * (1.0 + a * a), None)
        }
        SolitonKind::Elliptic { c } => {
            let (lx, ly) = elliptic_laplacians(p1, p2, c)?;
            let (x, y) = to_cartesian(Chart::EllipticUV { c }, p1, p2)?;
            let (e1, e2, e3) = elliptic_coefficients(p1, p2);
            (x + a * y, e1 + 2.0 * a * e2 + a * a * e3, Some((lx, ly)))
        }
    };
    let phi_w = d1(|s| phi(t, s), w, spec)?;
    let phi_ww = d2(|s| phi(t, s), w, spec)?;
    let phi_t = d1(|s| phi(s, w), t, spec)?;
    let mut spatial = phi_ww * spatial_coefficient;
    if let Some((lx, ly)) = first_order {
        let h_y = a * phi_w;
        spatial += phi_w * (lx + a * h_y * ly);
    }
    Ok(spatial - phi_t * phi(t, w).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeparableKind {
    Cartesian,
    Polar,
    Parabolic,
    Elliptic { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationMode {
    /// `h = f g`.
    Product,
    /// `h = f + g`.
    Sum,
}

/// One-variable factor values at a point: value, first and second
/// derivative, and time derivative.
struct Factor {
    v: f64,
    d: f64,
    dd: f64,
    dt: f64,
}

fn factor<F: Fn(f64, f64) -> f64>(f: &F, s: f64, t: f64, spec: &DiffSpec) -> Result<Factor> {
    Ok(Factor {
        v: f(t, s),
        d: d1(|z| f(t, z), s, spec)?,
        dd: d2(|z| f(t, z), s, spec)?,
        dt: d1(|z| f(z, s), t, spec)?,
    })
}

/// Printed separated equations, `f` in the first variable and `g` in the
/// second: `(x, y)` Cartesian, `(u, v)` polar (at polar point `(x, y)`),
/// `(ξ, η)` parabolic, `(x, y)` elliptic (at chart point `(u, v)`).
///
/// The polar additive form multiplies by `exp(f g)`, as printed.
pub fn separable_residual<F, G>(
    kind: SeparableKind,
    mode: SeparationMode,
    f: &F,
    g: &G,
    point: [f64; 2],
    t: f64,
    spec: &DiffSpec,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> f64,
{
    let [p1, p2] = point;
    let (s1, s2) = match kind {
        SeparableKind::Cartesian | SeparableKind::Parabolic => (p1, p2),
        SeparableKind::Polar => {
            polar_coefficients(p1, p2)?;
            (p1 * p2.cos(), p1 * p2.sin())
        }
        SeparableKind::Elliptic { c } => {
            check_elliptic(p1, p2)?;
            to_cartesian(Chart::EllipticUV { c }, p1, p2)?
        }
    };
    let f = factor(f, s1, t, spec)?;
    let g = factor(g, s2, t, spec)?;
    let product_time = (f.dt * g.v + f.v * g.dt) * (f.v * g.v).exp();
    let sum_time = (f.dt + g.dt) * (f.v + g.v).exp();
    Ok(match (kind, mode) {
        (SeparableKind::Cartesian, SeparationMode::Product) => product_time - (f.dd * g.v + f.v * g.dd),
        (SeparableKind::Cartesian, SeparationMode::Sum) => sum_time - (f.dd + g.dd),
        (SeparableKind::Polar, mode) => {
            let (ca, cb, m) = polar_coefficients(p1, p2)?;
            match mode {
                SeparationMode::Product => f.dd * g.v * ca + f.v * g.dd * cb + 2.0 * f.d * g.d * m - product_time,
                SeparationMode::Sum => f.dd * ca + g.dd * cb - (f.dt + g.dt) * (f.v * g.v).exp(),
            }
        }
        (SeparableKind::Parabolic, mode) => {
            if p1 == 0.0 && p2 == 0.0 {
                return Err(Error::ChartDegenerate("parabolic origin".into()));
            }
            let rho2 = 2.0 * p1.hypot(p2);
            match mode {
                SeparationMode::Product => rho2 * (f.dd * g.v + f.v * g.dd) - product_time,
                SeparationMode::Sum => rho2 * (f.dd + g.dd) - sum_time,
            }
        }
        (SeparableKind::Elliptic { c }, mode) => {
            let (lx, ly) = elliptic_laplacians(p1, p2, c)?;
            let (e1, e2, e3) = elliptic_coefficients(p1, p2);
            match mode {
                SeparationMode::Product => {
                    product_time
                        - (f.d * g.v * lx + f.v * g.d * ly + f.dd * g.v * e1 + 2.0 * f.d * g.d * e2 + f.v * g.dd * e3)
                }
                SeparationMode::Sum => sum_time - (f.d * lx + g.d * ly + f.dd * e1 + g.dd * e3),
            }
        }
    })
}
