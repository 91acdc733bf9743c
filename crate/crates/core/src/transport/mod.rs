//! Wasserstein distances, transport plans, dual certificates, and weighted
//! total-variation functionals on discrete measures and grid densities.
//!
//! Two routes compute the same distance: the 1-D quantile coupling
//! ([`wasserstein_1d`]), which is exact and fast, and the transportation-LP
//! realization ([`wasserstein_lp`]), which works in any dimension at oracle
//! scale. The pair is kept independent so either can check the other.

mod simplex;

pub use simplex::PIVOT_TOL;

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::measure::DiscreteMeasure;
use crate::numerics::pairwise_sum_by;
use crate::rng::{tag, Stream};

/// Largest support accepted by the exact LP route.
pub const MAX_LP_SUPPORT: usize = 512;

/// Values of `W_p^p` below this are clamped to zero before the p-th root.
pub const ROOT_CLAMP: f64 = 1e-15;

/// Tolerance on transport-plan marginals.
pub const PLAN_MARGINAL_TOL: f64 = 1e-9;

/// A coupling between two discrete measures; `plan` is row-major
/// `source support x target support`.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub plan: Vec<f64>,
}

impl TransportPlan {
    /// Check the marginal constraints against the given measures.
    pub fn validate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
        if self.rows != mu.len() || self.cols != nu.len() {
            return Err(Error::InvalidArgument("plan shape mismatch".into()));
        }
        for i in 0..self.rows {
            let row_sum: f64 = pairwise_sum_by(0..self.cols, |j| self.plan[i * self.cols + j]);
            if (row_sum - mu.weight(i)).abs() > PLAN_MARGINAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "row {i} sums to {row_sum}, expected {}",
                    mu.weight(i)
                )));
            }
        }
        for j in 0..self.cols {
            let col_sum: f64 = pairwise_sum_by(0..self.rows, |i| self.plan[i * self.cols + j]);
            if (col_sum - nu.weight(j)).abs() > PLAN_MARGINAL_TOL {
                return Err(Error::InvalidArgument(format!(
                    "column {j} sums to {col_sum}, expected {}",
                    nu.weight(j)
                )));
            }
        }
        if self.plan.iter().any(|f| *f < -PLAN_MARGINAL_TOL) {
            return Err(Error::InvalidArgument("negative plan entry".into()));
        }
        Ok(())
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("order p = {p} must be >= 1")));
    }
    Ok(())
}

fn finish_root(value_p: f64, p: f64) -> f64 {
    let v = if value_p < ROOT_CLAMP { 0.0 } else { value_p };
    if p == 1.0 {
        v
    } else {
        v.powf(1.0 / p)
    }
}

/// Exact `W_p` between 1-D discrete measures via the monotone (quantile)
/// coupling: sort both supports, couple CDF level sets, integrate
/// `|x - y|^p`, take the p-th root.
pub fn wasserstein_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_order(p)?;
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: mu.dim().max(nu.dim()),
        });
    }
    let mut a: Vec<(f64, f64)> = (0..mu.len())
        .map(|i| (mu.point(i)[0], mu.weight(i)))
        .collect();
    let mut b: Vec<(f64, f64)> = (0..nu.len())
        .map(|i| (nu.point(i)[0], nu.weight(i)))
        .collect();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(finish_root(quantile_coupling_cost(&a, &b, p), p))
}

/// `W_p` between two already-sorted 1-D clouds with equal atom counts and
/// uniform weights: the monotone coupling pairs equal ranks.
pub fn wasserstein_1d_sorted_uniform(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    check_order(p)?;
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::InvalidArgument(
            "sorted uniform route needs equal nonempty sizes".into(),
        ));
    }
    let n = xs.len() as f64;
    let total = pairwise_sum_by(0..xs.len(), |i| {
        let d = (xs[i] - ys[i]).abs();
        if p == 1.0 {
            d
        } else if p == 2.0 {
            d * d
        } else {
            d.powf(p)
        }
    }) / n;
    Ok(finish_root(total, p))
}

fn quantile_coupling_cost(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let mut total = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut ra = a[0].1;
    let mut rb = b[0].1;
    loop {
        let delta = ra.min(rb);
        if delta > 0.0 {
            let d = (a[i].0 - b[j].0).abs();
            let c = if p == 1.0 {
                d
            } else if p == 2.0 {
                d * d
            } else {
                d.powf(p)
            };
            total += delta * c;
        }
        ra -= delta;
        rb -= delta;
        if ra <= rb {
            i += 1;
            if i >= a.len() {
                break;
            }
            ra = a[i].1;
        } else {
            j += 1;
            if j >= b.len() {
                break;
            }
            rb = b[j].1;
        }
    }
    total
}

fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Vec<f64> {
    let (m, n, d) = (mu.len(), nu.len(), mu.dim());
    let mut cost = vec![0.0; m * n];
    for i in 0..m {
        let x = mu.point(i);
        for j in 0..n {
            let y = nu.point(j);
            let mut s = 0.0;
            for k in 0..d {
                let t = x[k] - y[k];
                s += t * t;
            }
            cost[i * n + j] = if p == 2.0 {
                s
            } else if p == 1.0 {
                s.sqrt()
            } else {
                s.sqrt().powf(p)
            };
        }
    }
    cost
}

/// `W_p` in any dimension by solving the discrete transport LP exactly.
///
/// Oracle-scale only: supports above [`MAX_LP_SUPPORT`] are rejected.
/// The returned distance satisfies `distance^p = <plan, cost>`.
pub fn wasserstein_lp(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    check_order(p)?;
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    for size in [mu.len(), nu.len()] {
        if size > MAX_LP_SUPPORT {
            return Err(Error::SupportTooLarge {
                size,
                max: MAX_LP_SUPPORT,
            });
        }
    }
    let cost = cost_matrix(mu, nu, p);
    let (objective, plan) = simplex::solve_transport(mu.weights(), nu.weights(), &cost)?;
    let plan = TransportPlan {
        rows: mu.len(),
        cols: nu.len(),
        plan,
    };
    Ok((finish_root(objective, p), plan))
}

/// Subsample-based `W_p` estimate with its provenance.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SubsampledEstimate {
    pub value: f64,
    /// true when at least one side was actually subsampled; the value then
    /// carries an O(subsample^{-1/2}) sampling bias and must be reported as
    /// an estimate, never as an oracle
    pub subsampled: bool,
    pub support_used: (usize, usize),
}

/// Seeded-subsample `W_p` estimate for clouds too large for the exact LP.
///
/// Draws up to [`MAX_LP_SUPPORT`] atoms i.i.d. from each measure and runs
/// the LP on the equal-weight subsamples.
pub fn wasserstein_subsampled(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    seed: u64,
) -> Result<SubsampledEstimate> {
    check_order(p)?;
    let sub_mu = subsample(mu, MAX_LP_SUPPORT, seed, 0)?;
    let sub_nu = subsample(nu, MAX_LP_SUPPORT, seed, 1)?;
    let value = wasserstein_lp(&sub_mu, &sub_nu, p)?.0;
    Ok(SubsampledEstimate {
        value,
        subsampled: sub_mu.len() < mu.len() || sub_nu.len() < nu.len(),
        support_used: (sub_mu.len(), sub_nu.len()),
    })
}

fn subsample(m: &DiscreteMeasure, size: usize, seed: u64, which: u64) -> Result<DiscreteMeasure> {
    if m.len() <= size {
        return Ok(m.clone());
    }
    // inverse-CDF sampling over atom weights
    let mut cdf = Vec::with_capacity(m.len());
    let mut acc = 0.0;
    for i in 0..m.len() {
        acc += m.weight(i);
        cdf.push(acc);
    }
    let mut stream = Stream::new(seed, tag::SELFTEST, 100 + which);
    let d = m.dim();
    let mut pts = Vec::with_capacity(size * d);
    for _ in 0..size {
        let u = stream.next_uniform() * acc;
        let k = cdf.partition_point(|c| *c <= u).min(m.len() - 1);
        pts.extend_from_slice(m.point(k));
    }
    DiscreteMeasure::uniform(d, pts)
}

/// Kantorovich dual value `∫ f d(mu - nu)` for a declared 1-Lipschitz `f`.
///
/// The Lipschitz constant is verified on every pair drawn from the union of
/// both supports; violations are rejected. The returned value is a certified
/// lower bound for `W_1(mu, nu)`.
pub fn kantorovich_dual_value<F: Fn(&[f64]) -> f64>(
    f: F,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let d = mu.dim();
    let mut support: Vec<f64> = Vec::with_capacity((mu.len() + nu.len()) * d);
    support.extend_from_slice(mu.points());
    support.extend_from_slice(nu.points());
    let count = mu.len() + nu.len();
    let values: Vec<f64> = (0..count)
        .map(|i| f(&support[i * d..(i + 1) * d]))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("test function not finite on support".into()));
    }
    for i in 0..count {
        for j in i + 1..count {
            let dist = crate::numerics::euclid_norm(
                &support[i * d..(i + 1) * d]
                    .iter()
                    .zip(&support[j * d..(j + 1) * d])
                    .map(|(a, b)| a - b)
                    .collect::<Vec<f64>>(),
            );
            let diff = (values[i] - values[j]).abs();
            if diff > dist * (1.0 + 1e-9) + 1e-15 {
                return Err(Error::LipschitzViolation {
                    observed: diff,
                    allowed: dist,
                });
            }
        }
    }
    let mu_part = pairwise_sum_by(0..mu.len(), |i| mu.weight(i) * values[i]);
    let nu_part = pairwise_sum_by(0..nu.len(), |j| nu.weight(j) * values[mu.len() + j]);
    Ok(mu_part - nu_part)
}

/// The pieces of the weighted total-variation functional
/// `∫ (1 + |x|^p) |l1 - l2| dx` under midpoint quadrature.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WeightedTv {
    /// `∫ |l1 - l2|`
    pub unweighted: f64,
    /// `∫ |x|^p |l1 - l2|`
    pub weighted: f64,
    /// `unweighted + weighted`
    pub total: f64,
}

/// Weighted total variation between two densities on the same grid.
pub fn weighted_tv(l1: &GridDensity, l2: &GridDensity, p: f64) -> Result<WeightedTv> {
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument(format!("weight order p = {p} must be >= 0")));
    }
    if !l1.same_grid(l2) {
        return Err(Error::GridMismatch(
            "weighted_tv requires identical grids".into(),
        ));
    }
    let vol = l1.cell_volume();
    let d = l1.dim();
    let mut x = vec![0.0; d];
    let n = l1.len();
    let (v1, v2) = (l1.values(), l2.values());
    let mut unweighted = 0.0;
    let mut weighted = 0.0;
    for flat in 0..n {
        let diff = (v1[flat] - v2[flat]).abs();
        if diff == 0.0 {
            continue;
        }
        l1.center_into(flat, &mut x);
        let norm = crate::numerics::euclid_norm(&x);
        unweighted += diff;
        weighted += norm.powf(p) * diff;
    }
    unweighted *= vol;
    weighted *= vol;
    Ok(WeightedTv {
        unweighted,
        weighted,
        total: unweighted + weighted,
    })
}

/// Aggregated results of the internal consistency suite.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SelftestReport {
    pub pairs: usize,
    /// worst `|quantile route - LP route|` over random 1-D pairs
    pub max_quantile_lp_gap: f64,
    /// worst `|best dual value - W_1|` over translated/monotone pairs
    pub max_duality_gap: f64,
    /// worst `W_p - W_q` excess for `p <= q` (should be <= 0 up to rounding)
    pub max_order_violation: f64,
    /// worst triangle-inequality defect of the 1-D route
    pub max_triangle_defect: f64,
    pub pass: bool,
}

/// Random 1-D measure with at most `max_atoms` atoms.
pub fn random_1d_measure(stream: &mut Stream, max_atoms: usize) -> DiscreteMeasure {
    let n = 1 + (stream.next_u64() as usize % max_atoms);
    let pts: Vec<f64> = (0..n).map(|_| 8.0 * stream.next_uniform() - 4.0).collect();
    let masses: Vec<f64> = (0..n).map(|_| stream.next_uniform() + 0.01).collect();
    DiscreteMeasure::normalized(1, pts, masses).expect("valid random measure")
}

/// Cross-check the two distance routes, duality attainment, order
/// monotonicity, and the metric axioms on seeded random inputs.
pub fn oracle_selftest(seed: u64, pairs: usize) -> Result<SelftestReport> {
    let mut stream = Stream::new(seed, tag::SELFTEST, 0);
    let mut max_gap = 0.0f64;
    for _ in 0..pairs {
        let mu = random_1d_measure(&mut stream, 64);
        let nu = random_1d_measure(&mut stream, 64);
        let p = 1.0 + 2.0 * stream.next_uniform();
        let w_quantile = wasserstein_1d(&mu, &nu, p)?;
        let (w_lp, plan) = wasserstein_lp(&mu, &nu, p)?;
        plan.validate(&mu, &nu)?;
        max_gap = max_gap.max((w_quantile - w_lp).abs());
    }

    // duality attainment: translated point masses and monotone 2-point pairs
    let mut max_dual = 0.0f64;
    for k in 0..50 {
        let (mu, nu) = if k % 2 == 0 {
            let a = 4.0 * stream.next_uniform() - 2.0;
            let shift = 0.1 + 2.0 * stream.next_uniform();
            (
                DiscreteMeasure::dirac(vec![a])?,
                DiscreteMeasure::dirac(vec![a + shift])?,
            )
        } else {
            let w = 0.1 + 0.8 * stream.next_uniform();
            let y1 = 2.0 * stream.next_uniform() - 2.0;
            let y2 = y1 + 0.5 + stream.next_uniform();
            let s1 = 0.1 + stream.next_uniform();
            let s2 = 0.1 + stream.next_uniform();
            (
                DiscreteMeasure::new(1, vec![y1 + s1, y2 + s2], vec![w, 1.0 - w])?,
                DiscreteMeasure::new(1, vec![y1, y2], vec![w, 1.0 - w])?,
            )
        };
        let w1 = wasserstein_1d(&mu, &nu, 1.0)?;
        let up = kantorovich_dual_value(|x| x[0], &mu, &nu)?;
        let down = kantorovich_dual_value(|x| -x[0], &mu, &nu)?;
        let best = up.max(down);
        max_dual = max_dual.max((best - w1).abs());
    }

    // order monotonicity and triangle inequality
    let mut max_order = f64::NEG_INFINITY;
    let mut max_triangle = f64::NEG_INFINITY;
    for _ in 0..50 {
        let a = random_1d_measure(&mut stream, 24);
        let b = random_1d_measure(&mut stream, 24);
        let c = random_1d_measure(&mut stream, 24);
        let p = 1.0 + stream.next_uniform();
        let q = p + stream.next_uniform();
        let wp = wasserstein_1d(&a, &b, p)?;
        let wq = wasserstein_1d(&a, &b, q)?;
        max_order = max_order.max(wp - wq);
        let ab = wasserstein_1d(&a, &b, 1.0)?;
        let bc = wasserstein_1d(&b, &c, 1.0)?;
        let ac = wasserstein_1d(&a, &c, 1.0)?;
        max_triangle = max_triangle.max(ac - ab - bc);
        // symmetry is exact
        if wasserstein_1d(&b, &a, p)? != wp {
            return Err(Error::InvalidArgument("symmetry violation".into()));
        }
    }

    let pass = max_gap <= 1e-9 && max_dual <= 1e-9 && max_order <= 1e-9 && max_triangle <= 1e-9;
    Ok(SelftestReport {
        pairs,
        max_quantile_lp_gap: max_gap,
        max_duality_gap: max_dual,
        max_order_violation: max_order,
        max_triangle_defect: max_triangle,
        pass,
    })
}
