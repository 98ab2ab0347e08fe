//! Small dense tensors used throughout the crate.
//!
//! [`SymTensor2`] stores a symmetric (0,2)-tensor at a point: metric samples,
//! Ricci tensors and Ricci-Yamabe values all live here. [`Tensor3`] stores
//! three-index arrays such as `∂_k g_ij`, `Γ^k_ij` or `∇_l T_ij`.

use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chart coordinates of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("a point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coordinate in {coords:?}")));
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A symmetric n×n matrix. Entries `(i, j)` and `(j, i)` are always bitwise equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2 {
    m: DMatrix<f64>,
}

impl SymTensor2 {
    /// Builds the tensor from the upper triangle produced by `f(i, j)` with `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    /// Symmetrizes an arbitrary square matrix by averaging it with its transpose.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
        }
        Ok(Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.m[(i, j)]).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * s }
    }

    /// Inverse via LU; the result is re-symmetrized.
    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateMetric(format!("singular matrix {:?}", self.to_rows())))?;
        if inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateMetric("inverse is not finite".into()));
        }
        Self::from_matrix(&inv)
    }

    /// `Σ_ij a^{ij} T_ij` for a contravariant tensor `a` (usually an inverse metric).
    pub fn contract(&self, upper: &SymTensor2) -> f64 {
        self.m.component_mul(&upper.m).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.m.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m.clone().cholesky().is_some()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.m.norm()
    }

    pub fn entries(&self) -> impl Iterator<Item = &f64> {
        self.m.iter()
    }

    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        Self { m }
    }
}

impl Add for &SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: &SymTensor2) -> SymTensor2 {
        SymTensor2 { m: &self.m + &rhs.m }
    }
}

impl Sub for &SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: &SymTensor2) -> SymTensor2 {
        SymTensor2 { m: &self.m - &rhs.m }
    }
}

impl Mul<f64> for &SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, rhs: f64) -> SymTensor2 {
        self.scale(rhs)
    }
}

/// Dense n×n×n array indexed `(a, b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        Tensor3 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}
