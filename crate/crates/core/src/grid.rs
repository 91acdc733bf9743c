//! Densities sampled on uniform rectangular grids.
//!
//! Values live at cell centers and represent a piecewise-constant density,
//! so the natural quadrature is the midpoint rule. Construction validates
//! nonnegativity and that the trapezoidal integral stays in `[0, 1 + 1e-6]`.

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numerics::pairwise_sum_by;

/// Upper slack allowed on the integral of a density.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    origin: Vec<f64>,
    cell_width: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(
        origin: Vec<f64>,
        cell_width: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let d = origin.len();
        if d == 0 || cell_width.len() != d || shape.len() != d {
            return Err(Error::InvalidGrid("inconsistent grid description".into()));
        }
        if cell_width.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidGrid("cell widths must be positive".into()));
        }
        let n: usize = shape.iter().product();
        if n == 0 || values.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidGrid("values must be finite and >= 0".into()));
        }
        let g = GridDensity {
            origin,
            cell_width,
            shape,
            values,
        };
        let trap = g.trapezoid_integral();
        if !(0.0..=1.0 + MASS_TOL).contains(&trap) {
            return Err(Error::InvalidGrid(format!(
                "trapezoidal integral {trap} outside [0, 1+{MASS_TOL}]"
            )));
        }
        Ok(g)
    }

    /// 1-D helper: `cells` cells covering `[lo, hi]`.
    pub fn new_1d(lo: f64, hi: f64, cells: usize, values: Vec<f64>) -> Result<Self> {
        if !(hi > lo) || cells == 0 {
            return Err(Error::InvalidGrid("need hi > lo and cells > 0".into()));
        }
        let width = (hi - lo) / cells as f64;
        GridDensity::new(vec![lo], vec![width], vec![cells], values)
    }

    /// Sample `f` at cell centers over `[lo, hi]` and normalize to unit mass.
    pub fn from_fn_1d<F: Fn(f64) -> f64>(lo: f64, hi: f64, cells: usize, f: F) -> Result<Self> {
        let width = (hi - lo) / cells as f64;
        let mut values: Vec<f64> = (0..cells)
            .map(|i| f(lo + (i as f64 + 0.5) * width).max(0.0))
            .collect();
        let mass = pairwise_sum_by(0..cells, |i| values[i]) * width;
        if !(mass > 0.0) {
            return Err(Error::ZeroMassDensity);
        }
        for v in &mut values {
            *v /= mass;
        }
        GridDensity::new(vec![lo], vec![width], vec![cells], values)
    }

    /// Normalized Gaussian truncated onto `[lo, hi]`.
    pub fn gaussian_1d(lo: f64, hi: f64, cells: usize, mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0) {
            return Err(Error::InvalidGrid("std must be positive".into()));
        }
        let norm = 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt());
        GridDensity::from_fn_1d(lo, hi, cells, |x| {
            let z = (x - mean) / std;
            norm * (-0.5 * z * z).exp()
        })
    }

    /// Uniform density on `[a, b]`, represented on the grid over `[lo, hi]`.
    pub fn uniform_1d(lo: f64, hi: f64, cells: usize, a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidGrid("need b > a".into()));
        }
        GridDensity::from_fn_1d(lo, hi, cells, |x| if x >= a && x < b { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cell_width(&self) -> &[f64] {
        &self.cell_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width.iter().product()
    }

    /// Whether two densities live on the same grid (bitwise geometry match).
    pub fn same_grid(&self, other: &GridDensity) -> bool {
        self.origin == other.origin
            && self.cell_width == other.cell_width
            && self.shape == other.shape
    }

    /// Multi-index of a flat cell index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        for ax in (0..d).rev() {
            idx[ax] = flat % self.shape[ax];
            flat /= self.shape[ax];
        }
        idx
    }

    /// Center coordinates of a flat cell index, written into `out`.
    pub fn center_into(&self, flat: usize, out: &mut [f64]) {
        let d = self.dim();
        let mut rem = flat;
        for ax in (0..d).rev() {
            let i = rem % self.shape[ax];
            rem /= self.shape[ax];
            out[ax] = self.origin[ax] + (i as f64 + 0.5) * self.cell_width[ax];
        }
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.center_into(flat, &mut out);
        out
    }

    /// 1-D cell centers.
    pub fn centers_1d(&self) -> Vec<f64> {
        assert_eq!(self.dim(), 1);
        (0..self.shape[0])
            .map(|i| self.origin[0] + (i as f64 + 0.5) * self.cell_width[0])
            .collect()
    }

    /// Midpoint-rule integral of the density (its mass).
    pub fn mass(&self) -> f64 {
        pairwise_sum_by(0..self.values.len(), |i| self.values[i]) * self.cell_volume()
    }

    /// Midpoint-rule integral of `f(x) * density(x)`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let d = self.dim();
        let mut x = vec![0.0; d];
        let vol = self.cell_volume();
        let mut acc = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            self.center_into(flat, &mut x);
            acc += f(&x) * v;
        }
        acc * vol
    }

    /// Trapezoidal integral over the cell-center lattice (used for the
    /// construction invariant; boundary nodes carry half weight per axis).
    pub fn trapezoid_integral(&self) -> f64 {
        let d = self.dim();
        let vol = self.cell_volume();
        let mut acc = 0.0;
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.multi_index(flat);
            let mut w = 1.0;
            for ax in 0..d {
                if self.shape[ax] > 1 && (idx[ax] == 0 || idx[ax] == self.shape[ax] - 1) {
                    w *= 0.5;
                }
            }
            acc += w * v;
        }
        acc * vol
    }

    /// Sup norm of the density.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// p-th absolute moment under midpoint quadrature.
    pub fn moment(&self, p: f64) -> f64 {
        self.integrate(|x| crate::numerics::euclid_norm(x).powf(p))
    }

    /// Value of the piecewise-constant density at an arbitrary point
    /// (zero outside the grid box).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut flat = 0usize;
        for ax in 0..d {
            let rel = (x[ax] - self.origin[ax]) / self.cell_width[ax];
            if rel < 0.0 {
                return 0.0;
            }
            let i = rel as usize;
            if i >= self.shape[ax] {
                return 0.0;
            }
            flat = flat * self.shape[ax] + i;
        }
        self.values[flat]
    }

    /// Convert to a discrete measure with atoms at cell centers, weights
    /// proportional to cell masses (normalized to total one).
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        let d = self.dim();
        let n = self.values.len();
        let mut pts = Vec::with_capacity(n * d);
        let mut x = vec![0.0; d];
        for flat in 0..n {
            self.center_into(flat, &mut x);
            pts.extend_from_slice(&x);
        }
        let vol = self.cell_volume();
        let masses: Vec<f64> = self.values.iter().map(|v| v * vol).collect();
        DiscreteMeasure::normalized(d, pts, masses)
    }

    /// Replace the values (same grid), revalidating the invariants.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        GridDensity::new(
            self.origin.clone(),
            self.cell_width.clone(),
            self.shape.clone(),
            values,
        )
    }

    /// Subdivide each 1-D cell into `factor` equal cells carrying the same
    /// value. Exact for the piecewise-constant representation: mass, sup
    /// norm, and pointwise values are unchanged.
    pub fn refine_1d(&self, factor: usize) -> Result<Self> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("refine_1d needs a 1-D grid".into()));
        }
        if factor == 0 {
            return Err(Error::InvalidArgument("factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let mut values = Vec::with_capacity(self.values.len() * factor);
        for v in &self.values {
            for _ in 0..factor {
                values.push(*v);
            }
        }
        GridDensity::new(
            self.origin.clone(),
            vec![self.cell_width[0] / factor as f64],
            vec![self.shape[0] * factor],
            values,
        )
    }
}
