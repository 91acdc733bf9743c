//! Stability and convergence experiments: weighted-TV sensitivity of the
//! marginal densities to the initial law (order-1, bounded-drift,
//! distribution-free-diffusion regime), and the Cauchy-in-`n` study of the
//! mollified particle system.

use crate::coefficients::{check_assumptions, CoefficientSet, TupleSampler};
use crate::diagnostics::{density_snapshot, GridSpec, SNAPSHOT_RESOLUTION};
use crate::error::{Error, Result};
use crate::fokker_planck::{solve_nonlinear_fp_with, FpOptions};
use crate::grid::GridDensity;
use crate::mollify::MollifierFamily;
use crate::particle::{simulate, SimConfig};
use crate::transport::{wasserstein_1d_sorted_uniform, weighted_tv};
use serde::{Deserialize, Serialize};

/// Explicit exponential factor `exp(2 sqrt(T) (1 + sup l_nu1 + M_1(nu1)))`
/// used as the reference bound in the stability experiment. Sup norm and
/// first moment are grid quadratures of the reference initial density.
pub fn lambda_bound(l_nu1: &GridDensity, t_horizon: f64) -> f64 {
    let sup = l_nu1.sup_norm();
    let m1 = l_nu1.moment(1.0);
    (2.0 * t_horizon.sqrt() * (1.0 + sup + m1)).exp()
}

/// One time point of the stability series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub t: f64,
    pub wtv_fp: f64,
    pub wtv_particle: f64,
}

/// Weighted-TV stability of the marginal densities under an initial-law
/// perturbation, along both the deterministic and the particle route.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub initial_wtv: f64,
    pub lambda_bound: f64,
    /// sup over recorded times, deterministic solver route
    pub sup_wtv_fp: f64,
    /// sup over recorded times, particle + snapshot route
    pub sup_wtv_particle: f64,
    /// `sup_wtv_fp / (lambda_bound * initial_wtv)`, absent when the initial
    /// laws coincide
    pub ratio_fp: Option<f64>,
    pub ratio_particle: Option<f64>,
    pub series: Vec<StabilityPoint>,
}

/// Run the stability experiment from two initial densities.
///
/// Requires the order-1 regime: `p = 1`, bounded drift, distribution-free
/// diffusion, verified by a sampled assumption check. Both routes use
/// common seeds so the density difference is not polluted by independent
/// noise. The weighted TV uses the `1 + |x|` weight.
pub fn stability_experiment(
    cs: &CoefficientSet,
    l_nu1: &GridDensity,
    l_nu2: &GridDensity,
    config: &SimConfig,
    fp_dt: f64,
) -> Result<StabilityReport> {
    if !l_nu1.same_grid(l_nu2) {
        return Err(Error::GridMismatch(
            "both initial densities must share a grid".into(),
        ));
    }
    if cs.constants.moment_order != 1.0 || !cs.drift_bounded || !cs.sigma_distribution_free {
        return Err(Error::InvalidArgument(
            "stability experiment requires order p = 1, bounded drift, and \
             distribution-free diffusion"
                .into(),
        ));
    }
    let report = check_assumptions(cs, &TupleSampler::seeded(config.seed), 200)?;
    if !report.all_pass {
        return Err(Error::InvalidArgument(format!(
            "coefficient set fails its declared conditions: {:?}",
            report
                .conditions
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.clone())
                .collect::<Vec<_>>()
        )));
    }

    let horizon = config.t_horizon;
    let bound = lambda_bound(l_nu1, horizon);
    let initial = weighted_tv(l_nu1, l_nu2, 1.0)?.total;

    // deterministic route, states stored at the snapshot times
    let mut times = config.snapshot_times.clone();
    times.push(0.0);
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let fp_opts = FpOptions {
        store_times: Some(times.clone()),
        ..Default::default()
    };
    let fp1 = solve_nonlinear_fp_with(cs, l_nu1, horizon, fp_dt, &fp_opts)?;
    let fp2 = solve_nonlinear_fp_with(cs, l_nu2, horizon, fp_dt, &fp_opts)?;

    // particle route with common random numbers
    let store1 = simulate(config, cs, l_nu1)?;
    let store2 = simulate(config, cs, l_nu2)?;
    let fam = MollifierFamily::bump(1, config.n_mollifier)?;
    // snapshot grid: the shared initial grid refined enough for the kernel
    let refine = (SNAPSHOT_RESOLUTION * config.n_mollifier as f64 * l_nu1.cell_width()[0])
        .ceil()
        .max(1.0) as usize;
    let lo = l_nu1.origin()[0];
    let hi = lo + l_nu1.cell_width()[0] * l_nu1.len() as f64;
    let spec = GridSpec::new_1d(lo, hi, l_nu1.len() * refine);

    let mut series = Vec::new();
    for &t in &times {
        let s1 = fp1.state_at(t).ok_or_else(|| {
            Error::InvalidConfig(format!("solver did not store t = {t}"))
        })?;
        let s2 = fp2
            .state_at(t)
            .ok_or_else(|| Error::InvalidConfig(format!("solver did not store t = {t}")))?;
        let wtv_fp = weighted_tv(&s1.density, &s2.density, 1.0)?.total;

        let (c1, c2) = match (store1.snapshot_at(t), store2.snapshot_at(t)) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        let d1 = density_snapshot(c1, &fam, &spec)?.density;
        let d2 = density_snapshot(c2, &fam, &spec)?.density;
        let wtv_particle = weighted_tv(&d1, &d2, 1.0)?.total;
        series.push(StabilityPoint {
            t,
            wtv_fp,
            wtv_particle,
        });
    }
    let sup_fp = series.iter().map(|p| p.wtv_fp).fold(0.0, f64::max);
    let sup_particle = series.iter().map(|p| p.wtv_particle).fold(0.0, f64::max);
    let denom = bound * initial;
    let ratio = |sup: f64| {
        if initial > 0.0 {
            Some(sup / denom)
        } else {
            None
        }
    };
    Ok(StabilityReport {
        initial_wtv: initial,
        lambda_bound: bound,
        sup_wtv_fp: sup_fp,
        sup_wtv_particle: sup_particle,
        ratio_fp: ratio(sup_fp),
        ratio_particle: ratio(sup_particle),
        series,
    })
}

/// Study verdicts.
pub const VERDICT_CAUCHY_DECREASING: &str = "cauchy-decreasing";
pub const VERDICT_WITHIN_NOISE: &str = "within-noise";
pub const VERDICT_INCONCLUSIVE: &str = "inconclusive";

/// Cauchy-in-`n` convergence data for the mollified system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_values: Vec<u32>,
    /// sup over admitted snapshot times of `W_p` between consecutive-`n`
    /// runs; length `n_values.len() - 1`
    pub cauchy_distances: Vec<f64>,
    /// Monte Carlo noise floor: the same study repeated with a different
    /// seed at the largest index
    pub mc_noise_floor: f64,
    pub n_particles: usize,
    pub dt: f64,
    /// non-increasing within twice the noise floor
    pub monotone_within_band: bool,
    /// no distance exceeds the coarsest pair by more than the band
    pub bounded_by_first: bool,
    pub verdict: String,
}

/// Run the particle system for each mollifier index over common
/// `(seed, N, dt)` and measure sup-in-time `W_p` between consecutive runs.
pub fn mollifier_convergence_study(
    cs: &CoefficientSet,
    l_nu: &GridDensity,
    base_config: &SimConfig,
    n_list: &[u32],
) -> Result<ConvergenceReport> {
    if n_list.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least three mollifier indices".into(),
        ));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "mollifier indices must be strictly increasing".into(),
        ));
    }
    let cutoff = crate::diagnostics::FIT_TIME_CUTOFF * base_config.t_horizon;
    let admitted: Vec<f64> = {
        let mut ts: Vec<f64> = base_config
            .snapshot_times
            .iter()
            .cloned()
            .filter(|t| *t >= cutoff)
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ts
    };
    if admitted.is_empty() {
        return Err(Error::InvalidConfig(
            "no snapshot times past the fit cutoff".into(),
        ));
    }

    let run = |n: u32, seed: u64| -> Result<Vec<Vec<f64>>> {
        let mut cfg = base_config.clone();
        cfg.n_mollifier = n;
        cfg.seed = seed;
        let store = simulate(&cfg, cs, l_nu)?;
        let mut sorted_snaps = Vec::with_capacity(admitted.len());
        for &t in &admitted {
            let cloud = store.snapshot_at(t).ok_or_else(|| {
                Error::InvalidConfig(format!("snapshot at t = {t} missing"))
            })?;
            let mut xs = cloud.positions().to_vec();
            xs.sort_unstable_by(f64::total_cmp);
            sorted_snaps.push(xs);
        }
        Ok(sorted_snaps)
    };
    let sup_distance = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Result<f64> {
        let mut sup = 0.0f64;
        for (xs, ys) in a.iter().zip(b) {
            sup = sup.max(wasserstein_1d_sorted_uniform(xs, ys, base_config.p)?);
        }
        Ok(sup)
    };

    let runs: Vec<Vec<Vec<f64>>> = n_list
        .iter()
        .map(|&n| run(n, base_config.seed))
        .collect::<Result<_>>()?;
    let mut distances = Vec::with_capacity(n_list.len() - 1);
    for pair in runs.windows(2) {
        distances.push(sup_distance(&pair[0], &pair[1])?);
    }

    // noise floor: rerun the finest index with an independent seed
    let last = n_list.len() - 1;
    let alt = run(n_list[last], base_config.seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let noise = sup_distance(&runs[last], &alt)?;

    let band = 2.0 * noise;
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] + band);
    let bounded = distances.iter().all(|d| *d <= distances[0] + band);
    let all_small = distances.iter().all(|d| *d <= band);
    let verdict = if all_small {
        VERDICT_WITHIN_NOISE
    } else if monotone {
        VERDICT_CAUCHY_DECREASING
    } else {
        VERDICT_INCONCLUSIVE
    };
    Ok(ConvergenceReport {
        n_values: n_list.to_vec(),
        cauchy_distances: distances,
        mc_noise_floor: noise,
        n_particles: base_config.n_particles,
        dt: base_config.dt,
        monotone_within_band: monotone,
        bounded_by_first: bounded,
        verdict: verdict.to_string(),
    })
}

/// Split-half noise floor for the marginal of one cloud: `W_p` between the
/// two half-clouds, scaled down by `sqrt(2)` to the full-`N` two-sample
/// scale.
pub fn split_half_noise_floor(positions: &[f64], p: f64) -> Result<f64> {
    if positions.len() < 4 {
        return Err(Error::InvalidArgument("need at least 4 particles".into()));
    }
    let half = positions.len() / 2;
    let mut a = positions[..half].to_vec();
    let mut b = positions[half..2 * half].to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    Ok(wasserstein_1d_sorted_uniform(&a, &b, p)? / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::scenario;

    #[test]
    fn lambda_bound_uniform_closed_form() {
        // uniform on [0,1]: sup = 1, M1 = 1/2, T = 1: exp(2 * 2.5) = e^5
        let g = GridDensity::uniform_1d(0.0, 1.0, 1000, 0.0, 1.0).unwrap();
        let v = lambda_bound(&g, 1.0);
        assert!((v - 5.0f64.exp()).abs() < 1e-6 * 5.0f64.exp(), "v = {v}");
    }

    #[test]
    fn lambda_bound_at_time_zero_is_one() {
        let g = GridDensity::uniform_1d(0.0, 1.0, 100, 0.0, 1.0).unwrap();
        assert_eq!(lambda_bound(&g, 0.0), 1.0);
    }

    #[test]
    fn lambda_bound_scales_with_sqrt_horizon() {
        let g = GridDensity::uniform_1d(0.0, 1.0, 100, 0.0, 1.0).unwrap();
        let a = lambda_bound(&g, 1.0).ln();
        let b = lambda_bound(&g, 2.0).ln();
        assert!((b / a - 2.0f64.sqrt()).abs() < 1e-12);
    }

    fn stability_config() -> SimConfig {
        SimConfig {
            n_particles: 4000,
            dim: 1,
            t_horizon: 0.5,
            dt: 0.0125,
            n_mollifier: 8,
            seed: 31,
            snapshot_times: vec![0.25, 0.5],
            p: 1.0,
            dense_paths: false,
            wall_budget_ms: None,
        }
    }

    #[test]
    fn identical_initials_give_zero_difference() {
        let cs = scenario("pure-diffusion").unwrap();
        let g = GridDensity::gaussian_1d(-6.0, 6.0, 600, 0.0, 1.0).unwrap();
        let report = stability_experiment(&cs, &g, &g, &stability_config(), 2.5e-3).unwrap();
        assert_eq!(report.initial_wtv, 0.0);
        assert!(report.ratio_fp.is_none());
        assert!(report.sup_wtv_fp < 1e-12, "fp sup {}", report.sup_wtv_fp);
        // common seeds: the particle clouds coincide exactly
        assert!(
            report.sup_wtv_particle < 1e-12,
            "particle sup {}",
            report.sup_wtv_particle
        );
    }

    #[test]
    fn translate_perturbation_stays_below_the_bound() {
        let cs = scenario("pure-diffusion").unwrap();
        let g1 = GridDensity::gaussian_1d(-6.0, 6.0, 600, 0.0, 1.0).unwrap();
        let g2 = GridDensity::gaussian_1d(-6.0, 6.0, 600, 0.1, 1.0).unwrap();
        let report = stability_experiment(&cs, &g1, &g2, &stability_config(), 2.5e-3).unwrap();
        assert!(report.initial_wtv > 0.0);
        // the heat semigroup contracts the difference, so the ratio against
        // the exponential bound is far below one
        let ratio = report.ratio_fp.unwrap();
        assert!(ratio < 1.0, "ratio = {ratio}");
        for p in &report.series {
            assert!(p.wtv_fp <= report.initial_wtv * 1.05);
        }
    }

    #[test]
    fn stability_rejects_wrong_regime() {
        let mut cs = scenario("pure-diffusion").unwrap();
        cs.constants.moment_order = 2.0;
        let g = GridDensity::gaussian_1d(-6.0, 6.0, 300, 0.0, 1.0).unwrap();
        assert!(stability_experiment(&cs, &g, &g, &stability_config(), 2.5e-3).is_err());
    }

    #[test]
    fn convergence_study_control_scenario_is_exactly_zero() {
        // drift independent of the density value: the mollifier index enters
        // nowhere, so all runs coincide bit for bit
        let cs = scenario("pure-diffusion").unwrap();
        let g = GridDensity::gaussian_1d(-6.0, 6.0, 600, 0.0, 1.0).unwrap();
        let cfg = SimConfig {
            n_particles: 2000,
            dim: 1,
            t_horizon: 0.5,
            dt: 0.025,
            n_mollifier: 4,
            seed: 5,
            snapshot_times: vec![0.125, 0.25, 0.5],
            p: 1.0,
            dense_paths: false,
            wall_budget_ms: None,
        };
        let report = mollifier_convergence_study(&cs, &g, &cfg, &[4, 8, 16]).unwrap();
        for d in &report.cauchy_distances {
            assert_eq!(*d, 0.0);
        }
        assert_eq!(report.verdict, VERDICT_WITHIN_NOISE);
        assert!(report.mc_noise_floor > 0.0);
    }

    #[test]
    fn convergence_study_requires_three_indices() {
        let cs = scenario("pure-diffusion").unwrap();
        let g = GridDensity::gaussian_1d(-6.0, 6.0, 300, 0.0, 1.0).unwrap();
        let cfg = stability_config();
        assert!(mollifier_convergence_study(&cs, &g, &cfg, &[4, 8]).is_err());
        assert!(mollifier_convergence_study(&cs, &g, &cfg, &[4, 8, 8]).is_err());
    }

    #[test]
    fn split_half_floor_shrinks_with_n() {
        use crate::particle::sample_initial;
        let g = GridDensity::gaussian_1d(-6.0, 6.0, 600, 0.0, 1.0).unwrap();
        // average over a few seeds: the floor scales like 1/sqrt(N)
        let floor_at = |n: usize| -> f64 {
            let mut acc = 0.0;
            for seed in 0..8u64 {
                let cloud = sample_initial(&g, n, 900 + seed).unwrap();
                acc += split_half_noise_floor(cloud.positions(), 1.0).unwrap();
            }
            acc / 8.0
        };
        let coarse = floor_at(500);
        let fine = floor_at(2000);
        let ratio = coarse / fine;
        assert!((1.3..=3.0).contains(&ratio), "ratio = {ratio}");
    }
}
