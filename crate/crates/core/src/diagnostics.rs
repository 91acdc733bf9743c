//! Empirical diagnostics on simulation output: mollified density snapshots,
//! Hölder-in-time Wasserstein fits, tail/moment monitors, and Krylov-type
//! path functionals.

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::mollify::{kde_at, Kde1d, MollifierFamily};
use crate::numerics::{linear_fit, pairwise_sum_by};
use crate::particle::{ParticleCloud, TrajectoryStore};
use crate::transport::wasserstein_1d_sorted_uniform;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cells per kernel support half-width required of snapshot grids. At this
/// resolution the midpoint quadrature of the bump kernel is accurate to
/// better than 1e-7 in mass for any particle placement, which keeps the
/// density invariants satisfied without renormalizing.
pub const SNAPSHOT_RESOLUTION: f64 = 64.0;

/// A rectangular evaluation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn new_1d(lo: f64, hi: f64, cells: usize) -> Self {
        GridSpec {
            lo: vec![lo],
            hi: vec![hi],
            cells: vec![cells],
        }
    }

    /// The coarsest 1-D grid on `[lo, hi]` that resolves mollifier index `n`.
    pub fn resolving_1d(lo: f64, hi: f64, n: u32) -> Self {
        let max_width = 1.0 / (SNAPSHOT_RESOLUTION * n as f64);
        let cells = ((hi - lo) / max_width).ceil() as usize;
        GridSpec::new_1d(lo, hi, cells)
    }

    fn widths(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(&self.cells)
            .map(|((lo, hi), c)| (hi - lo) / *c as f64)
            .collect()
    }
}

/// A density snapshot plus its mass bookkeeping; `off_grid_mass` is defined
/// as `1 - on_grid_mass`, so the two always sum to one exactly.
#[derive(Debug, Clone)]
pub struct DensitySnapshot {
    pub density: GridDensity,
    pub on_grid_mass: f64,
    pub off_grid_mass: f64,
}

/// Evaluate the mollified empirical density of a cloud on a grid.
pub fn density_snapshot(
    cloud: &ParticleCloud,
    fam: &MollifierFamily,
    spec: &GridSpec,
) -> Result<DensitySnapshot> {
    let d = cloud.dim();
    if spec.lo.len() != d || spec.hi.len() != d || spec.cells.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.lo.len(),
        });
    }
    let widths = spec.widths();
    let max_width = widths.iter().cloned().fold(0.0, f64::max);
    let limit = fam.radius() / SNAPSHOT_RESOLUTION;
    if max_width > limit * (1.0 + 1e-12) {
        return Err(Error::UnderResolvedKernel {
            cell_width: max_width,
            limit,
        });
    }
    let values: Vec<f64> = if d == 1 {
        let kde = Kde1d::new(cloud, fam)?;
        let lo = spec.lo[0];
        let w = widths[0];
        (0..spec.cells[0])
            .into_par_iter()
            .map(|i| kde.eval(lo + (i as f64 + 0.5) * w))
            .collect()
    } else {
        let n: usize = spec.cells.iter().product();
        let mut out = vec![0.0; n];
        let mut x = vec![0.0; d];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            for ax in (0..d).rev() {
                let i = rem % spec.cells[ax];
                rem /= spec.cells[ax];
                x[ax] = spec.lo[ax] + (i as f64 + 0.5) * widths[ax];
            }
            *slot = kde_at(cloud, fam, &x)?;
        }
        out
    };
    let density = GridDensity::new(spec.lo.clone(), widths, spec.cells.clone(), values)?;
    let on_grid_mass = density.mass();
    Ok(DensitySnapshot {
        off_grid_mass: 1.0 - on_grid_mass,
        on_grid_mass,
        density,
    })
}

/// A fitted empirical estimate with its acceptance verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub fitted_constant: f64,
    pub exponent_fit: Option<f64>,
    pub pass: bool,
    pub degenerate: bool,
    /// provenance of the inputs (config hash, snapshot times, sample sizes)
    pub samples: String,
    /// per-estimate series for plot emission
    pub series: Vec<(f64, f64)>,
}

/// Earliest fraction of the horizon admitted into time fits; marginals at
/// earlier times sit outside the strip where uniform continuity is expected.
pub const FIT_TIME_CUTOFF: f64 = 0.05;

/// Fit `log W_p(mu_s, mu_t)` against `log |t - s|` over dyadic snapshot
/// pairs `t = 2 s` with both times past the cutoff.
///
/// Returns the slope as `exponent_fit` and `exp(intercept)` as the fitted
/// constant. Zero distances flag the fit degenerate.
pub fn holder_time_fit(store: &TrajectoryStore, p: f64) -> Result<EstimateReport> {
    holder_fit_from_snapshots(
        store.snapshots(),
        store.metadata().config.t_horizon,
        p,
        &format!(
            "store {}; N = {}",
            store.content_hash(),
            store.metadata().config.n_particles
        ),
    )
}

/// The fit itself, on bare snapshots (used when rebuilding from CSV).
pub fn holder_fit_from_snapshots(
    snaps: &[(f64, ParticleCloud)],
    horizon: f64,
    p: f64,
    provenance: &str,
) -> Result<EstimateReport> {
    if snaps.len() < 8 {
        return Err(Error::DegenerateFit(format!(
            "need at least 8 snapshots, have {}",
            snaps.len()
        )));
    }
    let cutoff = FIT_TIME_CUTOFF * horizon;
    let admissible: Vec<&(f64, ParticleCloud)> =
        snaps.iter().filter(|(t, _)| *t >= cutoff).collect();

    let mut gaps = Vec::new();
    let mut dists = Vec::new();
    for (i, (s, cs)) in admissible.iter().enumerate() {
        for (t, ct) in admissible.iter().skip(i + 1) {
            if (t - 2.0 * s).abs() > 1e-9 * t.abs().max(1.0) {
                continue;
            }
            let mut xs = cs.positions().to_vec();
            let mut ys = ct.positions().to_vec();
            xs.sort_unstable_by(f64::total_cmp);
            ys.sort_unstable_by(f64::total_cmp);
            let w = wasserstein_1d_sorted_uniform(&xs, &ys, p)?;
            gaps.push(t - s);
            dists.push(w);
        }
    }
    let mut distinct = gaps.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 distinct dyadic gaps, have {}",
            distinct.len()
        )));
    }
    let provenance = format!("{provenance}; {} dyadic pairs", gaps.len());
    let degenerate = dists.iter().any(|w| *w <= 0.0);
    if degenerate {
        return Ok(EstimateReport {
            name: "holder-time".into(),
            fitted_constant: 0.0,
            exponent_fit: None,
            pass: false,
            degenerate: true,
            samples: provenance,
            series: gaps.into_iter().zip(dists).collect(),
        });
    }
    let log_g: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let log_w: Vec<f64> = dists.iter().map(|w| w.ln()).collect();
    let (slope, intercept) = linear_fit(&log_g, &log_w)
        .ok_or_else(|| Error::DegenerateFit("log-log fit underdetermined".into()))?;
    Ok(EstimateReport {
        name: "holder-time".into(),
        fitted_constant: intercept.exp(),
        exponent_fit: Some(slope),
        pass: slope >= 0.4,
        degenerate: false,
        samples: provenance,
        series: log_g.into_iter().zip(log_w).collect(),
    })
}

/// Empirical p-th moment and the tail functional
/// `mean(|X|^p ; |X| > R)` for each radius.
pub fn tail_and_moments(cloud: &ParticleCloud, p: f64, radii: &[f64]) -> EstimateReport {
    let n = cloud.len();
    let norms: Vec<f64> = (0..n)
        .map(|i| crate::numerics::euclid_norm(cloud.position(i)))
        .collect();
    let moment = pairwise_sum_by(0..n, |i| norms[i].powf(p)) / n as f64;
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let series: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let tail = pairwise_sum_by(0..n, |i| {
                if norms[i] > r {
                    norms[i].powf(p)
                } else {
                    0.0
                }
            }) / n as f64;
            (r, tail)
        })
        .collect();
    let last_tail = series.last().map(|(_, t)| *t).unwrap_or(0.0);
    EstimateReport {
        name: "tail-moments".into(),
        fitted_constant: moment,
        exponent_fit: None,
        pass: last_tail <= 1e-2 * moment.max(1.0),
        degenerate: false,
        samples: format!("N = {n}, p = {p}"),
        series,
    }
}

/// Monte Carlo estimate of a path functional with its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrylovEstimate {
    pub value: f64,
    pub std_error: f64,
    pub particles: usize,
}

/// Estimate `E[( int_0^T g(s, X_s) ds )^j]` from densely stored paths by
/// per-particle left-endpoint Riemann sums.
pub fn krylov_functional<G>(store: &TrajectoryStore, g: G, j: u32) -> Result<KrylovEstimate>
where
    G: Fn(f64, &[f64]) -> f64 + Sync,
{
    if j == 0 {
        return Err(Error::InvalidArgument("power j must be >= 1".into()));
    }
    let dense = store.dense().ok_or(Error::DensePathsMissing)?;
    let n = dense.n_particles;
    let steps = dense.times.len() - 1;
    let powers: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut integral = 0.0;
            for k in 0..steps {
                let dt = dense.times[k + 1] - dense.times[k];
                integral += g(dense.times[k], dense.at(k, i)) * dt;
            }
            integral.powi(j as i32)
        })
        .collect();
    let value = pairwise_sum_by(0..n, |i| powers[i]) / n as f64;
    let var = pairwise_sum_by(0..n, |i| {
        let d = powers[i] - value;
        d * d
    }) / n as f64;
    Ok(KrylovEstimate {
        value,
        std_error: (var / n as f64).sqrt(),
        particles: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::scenario;
    use crate::particle::{sample_initial, simulate, SimConfig};

    fn sim_config(n: usize, horizon: f64, dt: f64, snaps: Vec<f64>) -> SimConfig {
        SimConfig {
            n_particles: n,
            dim: 1,
            t_horizon: horizon,
            dt,
            n_mollifier: 8,
            seed: 77,
            snapshot_times: snaps,
            p: 1.0,
            dense_paths: false,
            wall_budget_ms: None,
        }
    }

    #[test]
    fn snapshot_of_point_cloud_is_the_kernel_profile() {
        let fam = MollifierFamily::bump(1, 8).unwrap();
        let cloud = ParticleCloud::new(1, vec![0.0], 0.0).unwrap();
        let spec = GridSpec::resolving_1d(-0.5, 0.5, 8);
        let snap = density_snapshot(&cloud, &fam, &spec).unwrap();
        let centers = snap.density.centers_1d();
        for (i, v) in snap.density.values().iter().enumerate() {
            let expected = fam.eval(&[centers[i]]);
            assert_eq!(v.to_bits(), expected.to_bits());
        }
        // a single bump integrates to 1; at this resolution the quadrature
        // defect stays below 1e-6
        assert!((snap.on_grid_mass - 1.0).abs() < 1e-6);
        assert!((snap.on_grid_mass + snap.off_grid_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn snapshot_rejects_coarse_grid() {
        let fam = MollifierFamily::bump(1, 8).unwrap();
        let cloud = ParticleCloud::new(1, vec![0.0], 0.0).unwrap();
        let spec = GridSpec::new_1d(-1.0, 1.0, 100);
        assert!(matches!(
            density_snapshot(&cloud, &fam, &spec),
            Err(Error::UnderResolvedKernel { .. })
        ));
    }

    #[test]
    fn snapshot_of_uniform_cloud_is_near_one_inside() {
        let l_nu = GridDensity::uniform_1d(-0.5, 1.5, 512, 0.0, 1.0).unwrap();
        let cloud = sample_initial(&l_nu, 100_000, 5).unwrap();
        let fam = MollifierFamily::bump(1, 16).unwrap();
        let spec = GridSpec::resolving_1d(-0.5, 1.5, 16);
        let snap = density_snapshot(&cloud, &fam, &spec).unwrap();
        let centers = snap.density.centers_1d();
        for (i, v) in snap.density.values().iter().enumerate() {
            let x = centers[i];
            if (0.2..=0.8).contains(&x) {
                assert!((v - 1.0).abs() < 0.08, "x = {x}: density {v}");
            }
        }
    }

    #[test]
    fn holder_fit_flags_frozen_cloud() {
        use crate::coefficients::{scenario_with, ScenarioSpec};
        let spec = ScenarioSpec {
            name: "translation".into(),
            dim: 1,
            c: Some(vec![0.0]),
            eps: Some(0.0),
        };
        let cs = scenario_with(&spec).unwrap();
        let l_nu = GridDensity::uniform_1d(-0.5, 1.5, 256, 0.0, 1.0).unwrap();
        let cfg = sim_config(
            200,
            1.0,
            0.0625 / 4.0,
            vec![0.0625, 0.125, 0.1875, 0.25, 0.375, 0.5, 0.75, 1.0],
        );
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        let report = holder_time_fit(&store, 1.0).unwrap();
        assert!(report.degenerate);
        assert!(!report.pass);
    }

    #[test]
    fn holder_fit_recovers_linear_translation_exponent() {
        use crate::coefficients::{scenario_with, ScenarioSpec};
        let spec = ScenarioSpec {
            name: "translation".into(),
            dim: 1,
            c: Some(vec![1.0]),
            eps: Some(0.0),
        };
        let cs = scenario_with(&spec).unwrap();
        let l_nu = GridDensity::uniform_1d(-0.5, 1.5, 256, 0.0, 1.0).unwrap();
        let cfg = sim_config(
            500,
            1.0,
            0.015625,
            vec![0.0625, 0.09375, 0.125, 0.1875, 0.25, 0.375, 0.5, 0.75, 1.0],
        );
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        let report = holder_time_fit(&store, 1.0).unwrap();
        // W_1(mu_s, mu_t) = |c| |t - s| exactly: exponent 1
        let slope = report.exponent_fit.unwrap();
        assert!((slope - 1.0).abs() < 1e-6, "slope = {slope}");
        assert!(report.pass);
    }

    #[test]
    fn holder_fit_requires_enough_snapshots() {
        let cs = scenario("pure-diffusion").unwrap();
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 640, 0.0, 1.0).unwrap();
        let cfg = sim_config(100, 1.0, 0.25, vec![0.25, 0.5, 1.0]);
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        assert!(matches!(
            holder_time_fit(&store, 1.0),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn tail_vanishes_for_bounded_cloud() {
        let cloud = ParticleCloud::new(1, vec![0.5, -0.25, 0.75], 0.0).unwrap();
        let report = tail_and_moments(&cloud, 1.0, &[2.0]);
        assert_eq!(report.series[0].1, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn tail_is_monotone_in_radius() {
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 1600, 0.0, 1.0).unwrap();
        let cloud = sample_initial(&l_nu, 50_000, 3).unwrap();
        let report = tail_and_moments(&cloud, 2.0, &[0.0, 0.5, 1.0, 2.0, 3.0, 5.0]);
        for w in report.series.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
        // E[Z^2] = 1
        assert!((report.fitted_constant - 1.0).abs() < 0.02);
    }

    #[test]
    fn gaussian_partial_moment_matches_closed_form() {
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 3200, 0.0, 1.0).unwrap();
        let cloud = sample_initial(&l_nu, 1_000_000, 11).unwrap();
        let report = tail_and_moments(&cloud, 1.0, &[3.0]);
        // E[|Z| ; |Z| > 3] = 2 phi(3)
        let expected = 2.0 * (-4.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let got = report.series[0].1;
        assert!(
            (got - expected).abs() < 0.3 * expected,
            "tail {got} vs {expected}"
        );
    }

    #[test]
    fn moment_monotone_in_p_outside_unit_ball() {
        let cloud = ParticleCloud::new(1, vec![1.5, -2.0, 3.0], 0.0).unwrap();
        let m1 = tail_and_moments(&cloud, 1.0, &[]).fitted_constant;
        let m2 = tail_and_moments(&cloud, 2.0, &[]).fitted_constant;
        let m3 = tail_and_moments(&cloud, 3.0, &[]).fitted_constant;
        assert!(m1 <= m2 && m2 <= m3);
    }

    #[test]
    fn krylov_constant_integrand_is_exact() {
        let cs = scenario("pure-diffusion").unwrap();
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 640, 0.0, 1.0).unwrap();
        let mut cfg = sim_config(200, 1.0, 0.01, vec![1.0]);
        cfg.dense_paths = true;
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        for j in [1u32, 2, 3] {
            let est = krylov_functional(&store, |_t, _x| 1.0, j).unwrap();
            assert!(
                (est.value - 1.0f64).abs() < 1e-12,
                "j = {j}: value {}",
                est.value
            );
            assert!(est.std_error < 1e-12);
        }
    }

    #[test]
    fn krylov_half_interval_indicator() {
        let cs = scenario("pure-diffusion").unwrap();
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 640, 0.0, 1.0).unwrap();
        let mut cfg = sim_config(100, 1.0, 0.01, vec![1.0]);
        cfg.dense_paths = true;
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        let est = krylov_functional(&store, |t, _x| if t < 0.5 { 1.0 } else { 0.0 }, 2).unwrap();
        assert!((est.value - 0.25).abs() < 1e-12, "value {}", est.value);
    }

    #[test]
    fn krylov_matches_gaussian_occupation_oracle() {
        // pure diffusion from N(0,1): X_s ~ N(0, 1+s), so
        // E int_0^1 1{|X_s| <= 1} ds = int_0^1 (2 Phi(1/sqrt(1+s)) - 1) ds
        use statrs::distribution::{ContinuousCDF, Normal};
        let cs = scenario("pure-diffusion").unwrap();
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 1600, 0.0, 1.0).unwrap();
        let mut cfg = sim_config(20_000, 1.0, 0.01, vec![1.0]);
        cfg.dense_paths = true;
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        let est =
            krylov_functional(&store, |_t, x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 }, 1)
                .unwrap();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let oracle = crate::numerics::adaptive_simpson(
            |s| 2.0 * normal.cdf(1.0 / (1.0 + s).sqrt()) - 1.0,
            0.0,
            1.0,
            1e-10,
        );
        // left-endpoint Riemann bias is O(dt) and well inside 3 standard errors
        assert!(
            (est.value - oracle).abs() <= 3.0 * est.std_error + 2e-3,
            "estimate {} vs oracle {oracle} (stderr {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn krylov_requires_dense_paths() {
        let cs = scenario("pure-diffusion").unwrap();
        let l_nu = GridDensity::gaussian_1d(-8.0, 8.0, 640, 0.0, 1.0).unwrap();
        let cfg = sim_config(50, 0.5, 0.05, vec![0.5]);
        let store = simulate(&cfg, &cs, &l_nu).unwrap();
        assert!(matches!(
            krylov_functional(&store, |_t, _x| 1.0, 1),
            Err(Error::DensePathsMissing)
        ));
    }
}
