use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::state::{Boundary, Chart, ConformalGridState, DirichletData};
use crate::error::{Error, Result};
use crate::ry::RyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    Rk4,
    /// Diffusivity frozen at the old level, `(I − dt·a·Δ) hⁿ⁺¹ = hⁿ`,
    /// solved by Jacobi iteration.
    SemiImplicit,
}

impl Scheme {
    pub fn is_explicit(&self) -> bool {
        !matches!(self, Self::SemiImplicit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: RyParams,
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub cfl_guard: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        Ok(())
    }
}

/// `|h|` above this is treated as blow-up (`e^700` is near the `f64` limit).
pub const BLOW_UP: f64 = 700.0;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_ITER: usize = 20_000;

/// Largest explicit step, `0.25 · min(d)² · min(e^h w) / (α + β)`.
pub fn max_stable_dt(state: &ConformalGridState, params: &RyParams) -> Result<f64> {
    let s = params.sum();
    if s <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let w = state.weights()?;
    let min_scale = Zip::from(&state.h).and(&w).fold(f64::INFINITY, |m, &h, &w| m.min(h.exp() * w));
    let d = state.spacing[0].min(state.spacing[1]);
    Ok(0.25 * d * d * min_scale / s)
}

/// `∂_t h = (α+β) e^{−h} Δh / w`; zero on Dirichlet boundary nodes.
pub(crate) fn rate(state: &ConformalGridState, h: &Array2<f64>, w: &Array2<f64>, s: f64) -> Array2<f64> {
    let mut lap = state.laplacian_of(h, 2);
    Zip::from(&mut lap).and(h).and(w).par_for_each(|l, &h, &w| {
        *l = if l.is_nan() { 0.0 } else { s * (-h).exp() * *l / w };
    });
    lap
}

fn apply_boundary(state: &ConformalGridState, h: &mut Array2<f64>, t: f64) {
    if let Boundary::Dirichlet(DirichletData::Exact(b)) = &state.bc {
        let [n1, n2] = state.shape();
        for i in 0..n1 {
            for j in 0..n2 {
                if i == 0 || j == 0 || i + 1 == n1 || j + 1 == n2 {
                    let (c1, c2) = state.coords(i, j);
                    h[[i, j]] = b(t, c1, c2);
                }
            }
        }
    }
}

fn axpy(h: &Array2<f64>, a: f64, k: &Array2<f64>) -> Array2<f64> {
    let mut out = h.clone();
    Zip::from(&mut out).and(k).par_for_each(|o, &k| *o += a * k);
    out
}

fn semi_implicit(state: &ConformalGridState, w: &Array2<f64>, s: f64, dt: f64) -> Result<Array2<f64>> {
    // Jacobi on the increment δ = hⁿ⁺¹ − hⁿ: (I − dt·a·Δ) δ = dt·a·Δhⁿ, so
    // discrete-harmonic data gives δ = 0 exactly.
    let [n1, n2] = state.shape();
    let (i1, i2) = (1.0 / state.spacing[0].powi(2), 1.0 / state.spacing[1].powi(2));
    let coeff = Zip::from(&state.h).and(w).map_collect(|&h, &w| dt * s * (-h).exp() / w);
    let lap = state.laplacian_of(&state.h, 2);
    let periodic = state.bc.is_periodic();
    let mut cur = Array2::<f64>::zeros((n1, n2));
    let mut next = cur.clone();
    let scale = 1.0 + state.max_abs_h();
    for _ in 0..JACOBI_MAX_ITER {
        Zip::indexed(&mut next).par_for_each(|(i, j), slot| {
            if !periodic && (i == 0 || j == 0 || i + 1 == n1 || j + 1 == n2) {
                *slot = 0.0;
                return;
            }
            let at = |di: isize, dj: isize| {
                cur[[
                    (i as isize + di).rem_euclid(n1 as isize) as usize,
                    (j as isize + dj).rem_euclid(n2 as isize) as usize,
                ]]
            };
            let a = coeff[[i, j]];
            let off = i1 * (at(1, 0) + at(-1, 0)) + i2 * (at(0, 1) + at(0, -1));
            *slot = a * (lap[[i, j]] + off) / (1.0 + 2.0 * a * (i1 + i2));
        });
        let change = Zip::from(&next).and(&cur).fold(0.0f64, |m, a, b| m.max((a - b).abs()));
        std::mem::swap(&mut cur, &mut next);
        if change <= JACOBI_TOL * scale {
            cur += &state.h;
            return Ok(cur);
        }
    }
    Err(Error::InvalidParameter(format!(
        "semi-implicit iteration did not converge in {JACOBI_MAX_ITER} sweeps at t = {}; reduce dt",
        state.t
    )))
}

/// One step of the conformal flow in the Cartesian or parabolic `(u, v)` chart.
pub fn step(state: &ConformalGridState, config: &SolverConfig) -> Result<ConformalGridState> {
    config.validate()?;
    if !matches!(state.chart, Chart::Cartesian | Chart::ParabolicUV) {
        return Err(Error::InvalidGrid(format!(
            "time stepping supports the cartesian and parabolic charts, not {}",
            state.chart.name()
        )));
    }
    let s = config.params.sum();
    if s < 0.0 && config.scheme.is_explicit() {
        return Err(Error::InvalidParameter(format!("alpha + beta = {s} gives backward diffusion")));
    }
    let dt = config.dt;
    if config.cfl_guard && config.scheme.is_explicit() {
        let max_dt = max_stable_dt(state, &config.params)?;
        if dt > max_dt {
            return Err(Error::Cfl { dt, max_dt });
        }
    }
    let w = state.weights()?;
    let t = state.t;
    let mut h = match config.scheme {
        Scheme::ExplicitEuler => axpy(&state.h, dt, &rate(state, &state.h, &w, s)),
        Scheme::Rk4 => {
            let k1 = rate(state, &state.h, &w, s);
            let mut h2 = axpy(&state.h, 0.5 * dt, &k1);
            apply_boundary(state, &mut h2, t + 0.5 * dt);
            let k2 = rate(state, &h2, &w, s);
            let mut h3 = axpy(&state.h, 0.5 * dt, &k2);
            apply_boundary(state, &mut h3, t + 0.5 * dt);
            let k3 = rate(state, &h3, &w, s);
            let mut h4 = axpy(&state.h, dt, &k3);
            apply_boundary(state, &mut h4, t + dt);
            let k4 = rate(state, &h4, &w, s);
            let mut out = state.h.clone();
            Zip::from(&mut out).and(&k1).and(&k2).and(&k3).and(&k4).par_for_each(|o, &a, &b, &c, &d| {
                *o += dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
            });
            out
        }
        Scheme::SemiImplicit => semi_implicit(state, &w, s, dt)?,
    };
    apply_boundary(state, &mut h, t + dt);
    if h.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
        return Err(Error::BlowUp { last_valid_t: t });
    }
    Ok(ConformalGridState { h, t: t + dt, interpolation_error: None, ..state.clone() })
}

/// [`step`] restricted to the Cartesian chart.
pub fn step_cartesian(state: &ConformalGridState, config: &SolverConfig) -> Result<ConformalGridState> {
    if state.chart != Chart::Cartesian {
        return Err(Error::InvalidGrid(format!("expected the cartesian chart, got {}", state.chart.name())));
    }
    step(state, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn config(scheme: Scheme, dt: f64, alpha: f64, beta: f64) -> SolverConfig {
        SolverConfig { params: RyParams::new(alpha, beta).unwrap(), dt, steps: 1, scheme, cfl_guard: true }
    }

    fn bump(periodic: bool) -> ConformalGridState {
        let bc = if periodic { Boundary::Periodic } else { Boundary::Dirichlet(DirichletData::Frozen) };
        ConformalGridState::from_fn(Chart::Cartesian, [16, 16], [0.0, 0.0], [6.0, 6.0], 0.0, bc, |x, y| {
            0.5 * x.sin() * y.cos()
        })
        .unwrap()
    }

    #[test]
    fn constant_and_harmonic_data_are_fixed_points() {
        for scheme in [Scheme::ExplicitEuler, Scheme::Rk4, Scheme::SemiImplicit] {
            let s = ConformalGridState::from_fn(Chart::Cartesian, [9, 9], [0.0, 0.0], [1.0, 1.0], 0.0, Boundary::Periodic, |_, _| 0.3)
                .unwrap();
            let next = step_cartesian(&s, &config(scheme, 1e-3, 1.0, 0.0)).unwrap();
            assert_eq!(next.h, s.h);
            assert_eq!(next.t, 1e-3);
            let s = ConformalGridState::from_fn(
                Chart::Cartesian,
                [9, 9],
                [0.0, 0.0],
                [1.0, 1.0],
                0.0,
                Boundary::Dirichlet(DirichletData::Frozen),
                |x, y| x * x - y * y + 2.0 * x,
            )
            .unwrap();
            let next = step_cartesian(&s, &config(scheme, 1e-3, 1.0, 0.0)).unwrap();
            let gap = Zip::from(&next.h).and(&s.h).fold(0.0f64, |m, a, b| m.max((a - b).abs()));
            assert!(gap < 1e-12, "{scheme:?}: {gap}");
        }
    }

    #[test]
    fn zero_diffusivity_freezes_data() {
        let s = bump(true);
        let next = step_cartesian(&s, &config(Scheme::Rk4, 0.1, 0.5, -0.5)).unwrap();
        assert_eq!(next.h, s.h);
    }

    #[test]
    fn cfl_guard_refuses_large_steps() {
        let s = bump(true);
        let max = max_stable_dt(&s, &RyParams::ricci()).unwrap();
        let r = step_cartesian(&s, &config(Scheme::ExplicitEuler, 2.0 * max, 1.0, 0.0));
        assert!(matches!(r, Err(Error::Cfl { .. })));
        assert!(step_cartesian(&s, &config(Scheme::SemiImplicit, 2.0 * max, 1.0, 0.0)).is_ok());
    }

    #[test]
    fn explicit_step_obeys_discrete_maximum_principle() {
        let mut s = bump(true);
        let (lo, hi) = (s.h.fold(f64::INFINITY, |m, v| m.min(*v)), s.h.fold(f64::NEG_INFINITY, |m, v| m.max(*v)));
        let cfg = config(Scheme::ExplicitEuler, 0.9 * max_stable_dt(&s, &RyParams::ricci()).unwrap(), 1.0, 0.0);
        for _ in 0..50 {
            s = step_cartesian(&s, &cfg).unwrap();
            assert!(s.h.iter().all(|&v| v >= lo - 1e-14 && v <= hi + 1e-14));
        }
    }

    #[test]
    fn exact_dirichlet_values_are_imposed() {
        let exact = |t: f64, x: f64, y: f64| -((4.0 * t).exp() + x * x + y * y).ln();
        let bc = Boundary::Dirichlet(DirichletData::Exact(Arc::new(exact)));
        let s = ConformalGridState::from_fn(Chart::Cartesian, [9, 9], [-1.0, -1.0], [1.0, 1.0], 0.0, bc, |x, y| exact(0.0, x, y))
            .unwrap();
        let next = step_cartesian(&s, &config(Scheme::Rk4, 1e-3, 1.0, 0.0)).unwrap();
        assert_eq!(next.h[[0, 3]], exact(1e-3, -1.0, -0.25));
        assert!((next.h[[4, 4]] - exact(1e-3, 0.0, 0.0)).abs() < 1e-3);
    }

    #[test]
    fn polar_grids_are_not_stepped() {
        let s = ConformalGridState::from_fn(Chart::Polar, [9, 9], [0.5, 0.0], [1.5, 1.0], 0.0, Boundary::Periodic, |_, _| 0.0).unwrap();
        assert!(step(&s, &config(Scheme::Rk4, 1e-3, 1.0, 0.0)).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        let s = ConformalGridState::from_fn(Chart::Cartesian, [9, 9], [0.0, 0.0], [1.0, 1.0], 0.0, Boundary::Periodic, |x, _| {
            -699.5 + 0.4 * (std::f64::consts::TAU * x).cos()
        })
        .unwrap();
        let cfg = SolverConfig { cfl_guard: false, ..config(Scheme::ExplicitEuler, 1.0, 1.0, 0.0) };
        assert!(matches!(step_cartesian(&s, &cfg), Err(Error::BlowUp { last_valid_t }) if last_valid_t == 0.0));
    }
}
