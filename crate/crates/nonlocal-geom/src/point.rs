//! Coordinate vectors and small slice-based vector helpers.
//!
//! Hot paths (membership queries, samplers) work on `&[f64]` slices to avoid
//! per-sample allocation; [`Point`] is the owned form used in reports and IO.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Owned coordinate vector with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

#[derive(Debug, Error)]
pub enum PointError {
    #[error("non-finite coordinate {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, PointError> {
        for (index, &value) in coords.iter().enumerate() {
            if !value.is_finite() {
                return Err(PointError::NonFinite { index, value });
            }
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl From<&[f64]> for Point {
    fn from(xs: &[f64]) -> Self {
        Point(xs.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out = a + t * u`
pub fn axpy(a: &[f64], t: f64, u: &[f64], out: &mut [f64]) {
    for i in 0..a.len() {
        out[i] = a[i] + t * u[i];
    }
}

/// Reflection of `y` through the point `x`: `2x - y`.
pub fn reflect_through(x: &[f64], y: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        out[i] = 2.0 * x[i] - y[i];
    }
}
