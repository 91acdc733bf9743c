//! The mollifier family and kernel-density evaluation.
//!
//! The base kernel is the standard smooth bump `exp(-1/(1-|x|^2))` on the
//! open unit ball, numerically normalized to unit mass at construction. The
//! family member of index `n` rescales it to support radius `1/n`:
//! `rho_n(x) = n^d rho(n x)`.

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::numerics::{adaptive_simpson, unit_sphere_area};
use crate::particle::ParticleCloud;

/// Quadrature tolerance used for the cached normalization constant.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Unnormalized radial bump profile at radius `u >= 0`.
#[inline]
pub fn bump_profile(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// The smooth compactly supported base kernel in a fixed dimension.
#[derive(Debug, Clone)]
pub struct BaseKernel {
    dim: usize,
    /// multiplies the profile so the kernel integrates to one
    normalization: f64,
}

impl BaseKernel {
    /// The standard bump kernel in dimension `d`.
    pub fn bump(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        // total mass of the unnormalized profile, via the radial integral
        let radial = adaptive_simpson(
            |r| r.powi(dim as i32 - 1) * bump_profile(r),
            0.0,
            1.0,
            NORMALIZATION_TOL,
        );
        let mass = unit_sphere_area(dim) * radial;
        Ok(BaseKernel {
            dim,
            normalization: 1.0 / mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Normalized kernel value at radius `u` (in base scale).
    #[inline]
    pub fn density_radial(&self, u: f64) -> f64 {
        self.normalization * bump_profile(u)
    }
}

/// `rho_n(x) = n^d rho(n x)`, supported in the ball of radius `1/n`.
#[derive(Debug, Clone)]
pub struct MollifierFamily {
    base: BaseKernel,
    index: u32,
    /// cached `n^d * normalization`
    scale: f64,
}

impl MollifierFamily {
    pub fn new(base: BaseKernel, index: u32) -> Result<Self> {
        if index == 0 {
            return Err(Error::InvalidArgument("mollifier index must be >= 1".into()));
        }
        let n = index as f64;
        let scale = n.powi(base.dim() as i32) * base.normalization();
        Ok(MollifierFamily { base, index, scale })
    }

    /// Standard bump family in dimension `d` with index `n`.
    pub fn bump(dim: usize, index: u32) -> Result<Self> {
        MollifierFamily::new(BaseKernel::bump(dim)?, index)
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn base(&self) -> &BaseKernel {
        &self.base
    }

    /// Support radius `1/n`.
    pub fn radius(&self) -> f64 {
        1.0 / self.index as f64
    }

    /// Peak value `n^d rho(0)`.
    pub fn peak(&self) -> f64 {
        self.scale * bump_profile(0.0)
    }

    /// Kernel value at signed offset `u = n * (x - y)` in base scale,
    /// premultiplied by `n^d`. Callers on hot paths use this directly.
    #[inline]
    pub fn scaled_profile(&self, u2: f64) -> f64 {
        if u2 >= 1.0 {
            0.0
        } else {
            self.scale * (-1.0 / (1.0 - u2)).exp()
        }
    }

    /// `rho_n` at a point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let n = self.index as f64;
        let mut u2 = 0.0;
        for &c in x {
            let s = n * c;
            u2 += s * s;
        }
        self.scaled_profile(u2)
    }
}

/// `rho_n(x)` as a free function (matches the family method).
pub fn mollifier_eval(fam: &MollifierFamily, x: &[f64]) -> f64 {
    fam.eval(x)
}

/// Sorted-cloud KDE evaluator for 1-D particle clouds.
///
/// Only particles within the kernel radius of the query contribute; the
/// window sum runs left-to-right over the sorted positions, which is
/// bit-identical to the naive left-to-right sum over the whole sorted cloud
/// because every skipped term is exactly zero.
pub struct Kde1d {
    sorted: Vec<f64>,
    fam: MollifierFamily,
    inv_count: f64,
}

impl Kde1d {
    pub fn new(cloud: &ParticleCloud, fam: &MollifierFamily) -> Result<Self> {
        if cloud.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: cloud.dim(),
            });
        }
        if cloud.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut sorted = cloud.positions().to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Kde1d {
            sorted,
            fam: fam.clone(),
            inv_count: 1.0 / cloud.len() as f64,
        })
    }

    /// Build directly from positions already sorted ascending.
    pub fn from_sorted(sorted: Vec<f64>, fam: &MollifierFamily) -> Result<Self> {
        if sorted.is_empty() {
            return Err(Error::EmptyCloud);
        }
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        Ok(Kde1d {
            inv_count: 1.0 / sorted.len() as f64,
            sorted,
            fam: fam.clone(),
        })
    }

    pub fn sorted_positions(&self) -> &[f64] {
        &self.sorted
    }

    /// Mollified density at `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let r = self.fam.radius();
        let lo = self.sorted.partition_point(|&y| y < x - r);
        let hi = self.sorted.partition_point(|&y| y <= x + r);
        let n = self.fam.index() as f64;
        let mut sum = 0.0;
        for &y in &self.sorted[lo..hi] {
            let u = n * (x - y);
            sum += self.fam.scaled_profile(u * u);
        }
        sum * self.inv_count
    }

    /// Reference sum over the whole sorted cloud without pruning.
    pub fn eval_naive(&self, x: f64) -> f64 {
        let n = self.fam.index() as f64;
        let mut sum = 0.0;
        for &y in &self.sorted {
            let u = n * (x - y);
            sum += self.fam.scaled_profile(u * u);
        }
        sum * self.inv_count
    }
}

/// Mollified empirical density `(rho_n * mu_N)(x)` of a particle cloud.
///
/// Sums in sorted-cloud order in every dimension, so the value does not
/// depend on how the particles are stored.
pub fn kde_at(cloud: &ParticleCloud, fam: &MollifierFamily, x: &[f64]) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.dim() != fam.dim() || x.len() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: cloud.dim(),
        });
    }
    if cloud.dim() == 1 {
        return Ok(Kde1d::new(cloud, fam)?.eval(x[0]));
    }
    let d = cloud.dim();
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let pa = cloud.position(a);
        let pb = cloud.position(b);
        pa.iter()
            .zip(pb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = fam.index() as f64;
    let mut sum = 0.0;
    for &i in &order {
        let y = cloud.position(i);
        let mut u2 = 0.0;
        for k in 0..d {
            let s = n * (x[k] - y[k]);
            u2 += s * s;
        }
        sum += fam.scaled_profile(u2);
    }
    Ok(sum / cloud.len() as f64)
}

/// Discrete mollification of a grid density: convolution with the sampled
/// kernel, whose taps are renormalized to unit discrete mass so constants
/// and total mass are preserved exactly at interior nodes.
pub fn mollify_grid(l: &GridDensity, fam: &MollifierFamily) -> Result<GridDensity> {
    let d = l.dim();
    if d != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            got: d,
        });
    }
    let radius = fam.radius();
    let max_width = l.cell_width().iter().cloned().fold(0.0, f64::max);
    if !(max_width < 0.5 * radius) {
        return Err(Error::UnderResolvedKernel {
            cell_width: max_width,
            limit: 0.5 * radius,
        });
    }

    // kernel taps on the grid lattice, renormalized to sum to one
    let reach: Vec<isize> = l
        .cell_width()
        .iter()
        .map(|w| (radius / w).ceil() as isize)
        .collect();
    let mut taps: Vec<(Vec<isize>, f64)> = Vec::new();
    let mut offset = vec![-reach[0]; d];
    offset[d - 1] -= 1; // pre-decrement for the odometer loop below
    'outer: loop {
        // odometer increment over the offset box
        let mut ax = d - 1;
        loop {
            offset[ax] += 1;
            if offset[ax] <= reach[ax] {
                break;
            }
            offset[ax] = -reach[ax];
            if ax == 0 {
                break 'outer;
            }
            ax -= 1;
        }
        let x: Vec<f64> = offset
            .iter()
            .zip(l.cell_width())
            .map(|(o, w)| *o as f64 * w)
            .collect();
        let v = fam.eval(&x);
        if v > 0.0 {
            taps.push((offset.clone(), v));
        }
    }
    let tap_sum: f64 = taps.iter().map(|(_, v)| v).sum();
    if !(tap_sum > 0.0) {
        return Err(Error::UnderResolvedKernel {
            cell_width: max_width,
            limit: 0.5 * radius,
        });
    }
    for (_, v) in &mut taps {
        *v /= tap_sum;
    }

    let shape = l.shape().to_vec();
    let values = l.values();
    let mut out = vec![0.0; values.len()];
    let strides = {
        let mut s = vec![1usize; d];
        for ax in (0..d - 1).rev() {
            s[ax] = s[ax + 1] * shape[ax + 1];
        }
        s
    };
    for (flat, dst) in out.iter_mut().enumerate() {
        let idx = l.multi_index(flat);
        let mut acc = 0.0;
        'taps: for (off, k) in &taps {
            let mut src = 0usize;
            for ax in 0..d {
                let j = idx[ax] as isize - off[ax];
                if j < 0 || j >= shape[ax] as isize {
                    continue 'taps;
                }
                src += j as usize * strides[ax];
            }
            acc += k * values[src];
        }
        *dst = acc;
    }
    l.with_values(out)
}
