use std::fmt;
use std::sync::Arc;

use crate::diff::{self, DiffSpec};
use crate::error::{Error, Result};
use crate::quad;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Time profile `f(t) > 0` multiplying or shifting a base metric.
#[derive(Clone)]
pub enum Potential {
    Constant(f64),
    /// `f(t) = e^{rate·t}`.
    Exponential { rate: f64 },
    /// `f(t) = intercept + slope·t`.
    Linear { intercept: f64, slope: f64 },
    Custom {
        label: String,
        value: ScalarFn,
        derivative: Option<ScalarFn>,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Exponential { rate } => write!(f, "Exponential {{ rate: {rate} }}"),
            Self::Linear { intercept, slope } => {
                write!(f, "Linear {{ intercept: {intercept}, slope: {slope} }}")
            }
            Self::Custom { label, derivative, .. } => {
                write!(f, "Custom {{ label: {label:?}, exact_derivative: {} }}", derivative.is_some())
            }
        }
    }
}

const QUAD_TOL: f64 = 1e-10;
const TIME_STEP: f64 = 1e-4;

impl Potential {
    pub fn custom(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    ) -> Self {
        Self::Custom { label: label.into(), value: Arc::new(value), derivative }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Exponential { rate } => (rate * t).exp(),
            Self::Linear { intercept, slope } => intercept + slope * t,
            Self::Custom { value, .. } => value(t),
        }
    }

    /// `f'(t)`; analytic where available, otherwise a fourth-order central difference.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::Exponential { rate } => rate * (rate * t).exp(),
            Self::Linear { slope, .. } => *slope,
            Self::Custom { derivative: Some(d), .. } => d(t),
            Self::Custom { value, .. } => {
                let spec = DiffSpec { step: TIME_STEP, order: 4, richardson: false };
                diff::derivative(|s| Ok(value(s)), t, &spec).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn has_exact_derivative(&self) -> bool {
        !matches!(self, Self::Custom { derivative: None, .. })
    }

    pub fn positive_at(&self, t: f64) -> Result<f64> {
        let v = self.value(t);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Positivity(format!("time profile f({t}) = {v}")))
        }
    }

    /// Lower limit used for antiderivatives: 0 when `f(0) > 0`, else 1
    /// (the cone profile `f(t) = t` is singular at 0).
    pub fn reference_time(&self) -> f64 {
        let f0 = self.value(0.0);
        if f0 > 0.0 && f0.is_finite() {
            0.0
        } else {
            1.0
        }
    }

    /// `∫_{t₀}^t ds / f(s)` with `t₀ = reference_time()`.
    pub fn inverse_antiderivative(&self, t: f64) -> Result<f64> {
        let t0 = self.reference_time();
        self.positive_at(t)?;
        Ok(match self {
            Self::Constant(c) => (t - t0) / c,
            Self::Exponential { rate } if *rate != 0.0 => ((-rate * t0).exp() - (-rate * t).exp()) / rate,
            Self::Exponential { .. } => t - t0,
            Self::Linear { intercept, slope } if *slope != 0.0 => {
                ((intercept + slope * t) / (intercept + slope * t0)).ln() / slope
            }
            Self::Linear { intercept, .. } => (t - t0) / intercept,
            Self::Custom { value, .. } => quad::integrate(|s| 1.0 / value(s), t0, t, QUAD_TOL)?,
        })
    }

    /// `∫_{t₀}^t ds / √f(s)` with `t₀ = reference_time()`.
    pub fn inverse_sqrt_antiderivative(&self, t: f64) -> Result<f64> {
        let t0 = self.reference_time();
        self.positive_at(t)?;
        Ok(match self {
            Self::Constant(c) => (t - t0) / c.sqrt(),
            Self::Exponential { rate } if *rate != 0.0 => {
                2.0 * ((-0.5 * rate * t0).exp() - (-0.5 * rate * t).exp()) / rate
            }
            Self::Exponential { .. } => t - t0,
            Self::Linear { intercept, slope } if *slope != 0.0 => {
                2.0 * ((intercept + slope * t).sqrt() - (intercept + slope * t0).sqrt()) / slope
            }
            Self::Linear { intercept, .. } => (t - t0) / intercept.sqrt(),
            Self::Custom { value, .. } => quad::integrate(|s| value(s).sqrt().recip(), t0, t, QUAD_TOL)?,
        })
    }
}
