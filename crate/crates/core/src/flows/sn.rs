/// Generalized sine `sn_k`: the solution of `y'' + k y = 0`, `y(0) = 0`, `y'(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnK {
    pub k: f64,
}

// below this |k·u²| the Taylor series is used; keeps the k → 0 limit continuous
const SERIES_CUTOFF: f64 = 1e-4;

impl SnK {
    pub fn new(k: f64) -> Self {
        Self { k }
    }

    pub fn eval(&self, u: f64) -> f64 {
        let k = self.k;
        let x = k * u * u;
        if x.abs() < SERIES_CUTOFF {
            u * (1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0)
        } else if k > 0.0 {
            let s = k.sqrt();
            (s * u).sin() / s
        } else {
            let s = (-k).sqrt();
            (s * u).sinh() / s
        }
    }

    /// `sn_k'`, the matching generalized cosine.
    pub fn derivative(&self, u: f64) -> f64 {
        let k = self.k;
        let x = k * u * u;
        if x.abs() < SERIES_CUTOFF {
            1.0 - x / 2.0 + x * x / 24.0 - x * x * x / 720.0
        } else if k > 0.0 {
            (k.sqrt() * u).cos()
        } else {
            ((-k).sqrt() * u).cosh()
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        -self.k * self.eval(u)
    }
}
