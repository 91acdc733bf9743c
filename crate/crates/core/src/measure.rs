//! Weighted discrete measures on `R^d`.

use crate::error::{Error, Result};
use crate::numerics::pairwise_sum_by;
use std::sync::OnceLock;

/// Tolerance on the total mass of a probability vector.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finitely supported probability measure: `points` is row-major `n x d`,
/// `weights` are nonnegative and sum to one within [`WEIGHT_SUM_TOL`].
#[derive(Debug)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    mean: OnceLock<Vec<f64>>,
}

impl Clone for DiscreteMeasure {
    fn clone(&self) -> Self {
        DiscreteMeasure {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.clone(),
            mean: OnceLock::new(),
        }
    }
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if points.len() != weights.len() * dim {
            return Err(Error::InvalidMeasure(format!(
                "points ({}) and weights ({}) disagree for dim {}",
                points.len(),
                weights.len(),
                dim
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and >= 0".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("points must be finite".into()));
        }
        let total: f64 = pairwise_sum_by(0..weights.len(), |i| weights[i]);
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1 within {WEIGHT_SUM_TOL}"
            )));
        }
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
            mean: OnceLock::new(),
        })
    }

    /// Equal-weight measure on the given points.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = points.len() / dim;
        let w = 1.0 / n as f64;
        let mut weights = vec![w; n];
        // distribute the rounding residual onto the last atom so the sum is exact
        let sum: f64 = pairwise_sum_by(0..n, |i| weights[i]);
        weights[n - 1] += 1.0 - sum;
        DiscreteMeasure::new(dim, points, weights)
    }

    /// Rescale arbitrary nonnegative masses to a probability vector.
    pub fn normalized(dim: usize, points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = pairwise_sum_by(0..masses.len(), |i| masses[i]);
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        let mut weights: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let sum: f64 = pairwise_sum_by(0..weights.len(), |i| weights[i]);
        let last = weights.len() - 1;
        weights[last] += 1.0 - sum;
        if weights[last] < 0.0 {
            weights[last] = 0.0;
        }
        DiscreteMeasure::new(dim, points, weights)
    }

    /// A single unit mass at `point`.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        let d = point.len();
        DiscreteMeasure::new(d, point, vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Barycenter, computed once with a fixed summation tree and cached.
    pub fn mean(&self) -> &[f64] {
        self.mean.get_or_init(|| {
            (0..self.dim)
                .map(|k| {
                    pairwise_sum_by(0..self.len(), |i| self.weights[i] * self.points[i * self.dim + k])
                })
                .collect()
        })
    }

    /// Coordinatewise clip of the barycenter to `[lo, hi]`.
    pub fn mean_clipped(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.mean().iter().map(|m| m.clamp(lo, hi)).collect()
    }

    /// p-th absolute moment.
    pub fn moment(&self, p: f64) -> f64 {
        pairwise_sum_by(0..self.len(), |i| {
            let norm = crate::numerics::euclid_norm(self.point(i));
            self.weights[i] * norm.powf(p)
        })
    }

    /// Expectation of `f` over the measure (fixed summation order).
    pub fn integrate<F: Fn(&[f64]) -> f64 + Copy>(&self, f: F) -> f64 {
        pairwise_sum_by(0..self.len(), |i| self.weights[i] * f(self.point(i)))
    }
}
