//! Deterministic oracles: the scaling heat-kernel family, a 1-D
//! finite-volume solver for the nonlinear Fokker-Planck equation
//! `d l/dt = -d/dx [ b(t, x, l(x), mu) l ] + 1/2 d^2/dx^2 [ a(t, x) l ]`,
//! and the Duhamel-representation residual check for constant diffusion.
//!
//! Scheme: explicit first-order upwind advection plus implicit (backward
//! Euler) diffusion, both in conservative flux form with zero-flux walls, so
//! total mass is conserved to solver rounding. The density argument of the
//! drift and the grid measure are lagged within the step (one fixed-point
//! sweep by default).

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::measure::DiscreteMeasure;
use crate::numerics::{pairwise_sum_by, solve_tridiagonal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Parameters of the scaling kernel `p_t(x) = t^{-(gamma+d)/2} exp(-lambda |x|^2 / t)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeatKernelParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl HeatKernelParams {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("lambda must be positive".into()));
        }
        Ok(HeatKernelParams { gamma, lambda })
    }
}

/// Evaluate the scaling kernel at time `t > 0` and point `x`.
pub fn heat_kernel_eval(hk: &HeatKernelParams, t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(t.powf(-(hk.gamma + d) / 2.0) * (-hk.lambda * r2 / t).exp())
}

/// One stored solver state.
#[derive(Debug, Clone)]
pub struct FpState {
    pub time: f64,
    pub density: GridDensity,
}

/// Solver options beyond the spec-level `(T, dt)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpOptions {
    /// store every `store_stride`-th step (plus t = 0 and t = T)
    pub store_stride: usize,
    /// when set, store exactly these times instead of the stride
    #[serde(default)]
    pub store_times: Option<Vec<f64>>,
    /// fixed-point sweeps on the lagged density argument per step
    pub max_sweeps: usize,
    /// stop sweeping once the sup change falls below this
    pub sweep_tol: f64,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions {
            store_stride: 1,
            store_times: None,
            max_sweeps: 1,
            sweep_tol: 1e-10,
        }
    }
}

/// Outcome of a solve: stored states plus the mass bookkeeping.
#[derive(Debug, Clone)]
pub struct FpSolution {
    pub states: Vec<FpState>,
    /// largest observed |1 - mass(t)|
    pub max_mass_error: f64,
}

impl FpSolution {
    pub fn state_at(&self, t: f64) -> Option<&FpState> {
        self.states
            .iter()
            .find(|s| (s.time - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn last(&self) -> &FpState {
        self.states.last().expect("solver stores at least t = 0")
    }
}

/// Solve the nonlinear Fokker-Planck equation on the grid of `l_nu`,
/// storing every state (default options).
pub fn solve_nonlinear_fp(
    cs: &CoefficientSet,
    l_nu: &GridDensity,
    t_horizon: f64,
    dt: f64,
) -> Result<FpSolution> {
    solve_nonlinear_fp_with(cs, l_nu, t_horizon, dt, &FpOptions::default())
}

/// Solve with explicit options.
pub fn solve_nonlinear_fp_with(
    cs: &CoefficientSet,
    l_nu: &GridDensity,
    t_horizon: f64,
    dt: f64,
    opts: &FpOptions,
) -> Result<FpSolution> {
    if l_nu.dim() != 1 || cs.dim != 1 {
        return Err(Error::Unsupported(
            "the Fokker-Planck solver is one-dimensional".into(),
        ));
    }
    if !cs.sigma_distribution_free {
        return Err(Error::Unsupported(
            "the solver requires a distribution-free diffusion".into(),
        ));
    }
    if !(dt > 0.0) || !(t_horizon > 0.0) {
        return Err(Error::InvalidConfig("dt and T must be positive".into()));
    }
    let steps = (t_horizon / dt).round() as usize;
    if steps == 0 || (t_horizon - steps as f64 * dt).abs() > 1e-9 * t_horizon.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "dt {dt} does not divide the horizon {t_horizon}"
        )));
    }
    let stride = opts.store_stride.max(1);
    let store_steps: Option<Vec<usize>> = opts.store_times.as_ref().map(|times| {
        let mut idx: Vec<usize> = times
            .iter()
            .map(|t| (t / dt).round() as usize)
            .filter(|k| *k <= steps)
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    });
    let should_store = |step_done: usize| -> bool {
        match &store_steps {
            Some(idx) => idx.binary_search(&step_done).is_ok(),
            None => step_done % stride == 0 || step_done == steps,
        }
    };

    let m = l_nu.len();
    let dx = l_nu.cell_width()[0];
    let lo = l_nu.origin()[0];
    let centers: Vec<f64> = (0..m).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    let mut density = l_nu.values().to_vec();
    let initial_mass = pairwise_sum_by(0..m, |i| density[i]) * dx;

    // the dummy measure handed to a distribution-free sigma
    let dummy = DiscreteMeasure::dirac(vec![0.0])?;

    let mut states = Vec::with_capacity(steps / stride + 2);
    states.push(FpState {
        time: 0.0,
        density: l_nu.clone(),
    });
    let mut max_mass_error: f64 = (initial_mass - 1.0).abs();

    let mut velocity = vec![0.0; m + 1]; // interface velocities, walls at 0 and m
    let mut advected = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut a_coef = vec![0.0; m];

    for step in 0..steps {
        let t = step as f64 * dt;

        // diffusion coefficient a(t, x) = sigma^2 on cell centers
        for i in 0..m {
            let s = cs.diffusion_mat(t, &centers[i..=i], &dummy)[0];
            a_coef[i] = s * s;
        }

        let mut current = density.clone();
        for sweep in 0..opts.max_sweeps.max(1) {
            // grid measure induced by the lagged density (midpoint atoms)
            let masses: Vec<f64> = current.iter().map(|v| v * dx).collect();
            let grid_measure = DiscreteMeasure::normalized(1, centers.clone(), masses)?;

            // interface velocities from the lagged density
            velocity[0] = 0.0;
            velocity[m] = 0.0;
            for i in 1..m {
                let xf = lo + i as f64 * dx;
                let r = 0.5 * (current[i - 1] + current[i]);
                let b = cs.drift_vec(t, &[xf], r, &grid_measure)[0];
                velocity[i] = b;
            }
            let vmax = velocity.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if vmax * dt / dx > 1.0 {
                return Err(Error::CflViolation {
                    value: vmax * dt / dx,
                    t,
                });
            }

            // explicit conservative upwind advection on the step-start density
            for i in 0..m {
                let flux_right = upwind_flux(velocity[i + 1], &density, i, m);
                let flux_left = upwind_flux(velocity[i], &density, i.wrapping_sub(1), m);
                advected[i] = density[i] - dt / dx * (flux_right - flux_left);
            }

            // implicit diffusion: (I - dt * D) next = advected, where
            // (D u)_i = ((a u)_{i+1} - 2 (a u)_i + (a u)_{i-1}) / (2 dx^2)
            // with zero-flux walls
            let k = dt / (2.0 * dx * dx);
            for i in 0..m {
                let left = if i > 0 { 1.0 } else { 0.0 };
                let right = if i + 1 < m { 1.0 } else { 0.0 };
                lower[i] = -k * if i > 0 { a_coef[i - 1] } else { 0.0 };
                upper[i] = -k * if i + 1 < m { a_coef[i + 1] } else { 0.0 };
                diag[i] = 1.0 + k * a_coef[i] * (left + right);
            }
            let mut next = advected.clone();
            solve_tridiagonal(&lower, &diag, &upper, &mut next);

            let change = next
                .iter()
                .zip(&current)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            current = next;
            if change <= opts.sweep_tol && sweep > 0 {
                break;
            }
            if opts.max_sweeps == 1 {
                break;
            }
        }
        density = current;

        // positivity and mass bookkeeping
        let mut min_val = 0.0f64;
        for v in &mut density {
            if *v < min_val {
                min_val = *v;
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if min_val < -1e-12 {
            return Err(Error::NegativeDensity {
                min: min_val,
                t: t + dt,
            });
        }
        let mass = pairwise_sum_by(0..m, |i| density[i]) * dx;
        max_mass_error = max_mass_error.max((mass - initial_mass).abs());

        if should_store(step + 1) {
            states.push(FpState {
                time: (step + 1) as f64 * dt,
                density: l_nu.with_values(density.clone())?,
            });
        }
    }

    Ok(FpSolution {
        states,
        max_mass_error,
    })
}

#[inline]
fn upwind_flux(v: f64, density: &[f64], left_cell: usize, m: usize) -> f64 {
    // flux through the interface with `left_cell` on its left; the walls
    // (left_cell == usize::MAX or left_cell == m - 1 with v at index m)
    // are handled by the caller passing velocity 0 there
    if v >= 0.0 {
        if left_cell < m {
            v * density[left_cell]
        } else {
            0.0
        }
    } else {
        let right = left_cell.wrapping_add(1);
        if right < m {
            v * density[right]
        } else {
            0.0
        }
    }
}

/// Gaussian transition density of `dX = sigma0 dB`: variance `sigma0^2 (t - s)`.
#[inline]
fn gaussian(x: f64, var: f64) -> f64 {
    (-(x * x) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Sup-norm residual of the Duhamel representation
/// `l_t = p_{0,t} * l_0 + int_0^t int l_s(y) b_s(y) d/dy p_{s,t}(y, x) dy ds`
/// evaluated on the grid, for constant scalar diffusion `sigma0`.
///
/// Time integration is the trapezoid rule over the stored states; the
/// singular endpoint `s = t` uses the integration-by-parts limit
/// `-d/dx (b_t l_t)(x)` (central differences on the grid).
pub fn duhamel_residual(states: &[FpState], cs: &CoefficientSet, sigma0: f64) -> Result<f64> {
    if states.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least three stored states".into(),
        ));
    }
    if !cs.sigma_distribution_free {
        return Err(Error::NonConstantSigma);
    }
    if !(sigma0 > 0.0) {
        return Err(Error::InvalidArgument("sigma0 must be positive".into()));
    }
    let grid = &states[0].density;
    let m = grid.len();
    let dx = grid.cell_width()[0];
    let centers = grid.centers_1d();
    let dummy = DiscreteMeasure::dirac(vec![0.0])?;
    // spot-check that sigma really is the constant sigma0
    for probe in [-3.0, 0.0, 2.5] {
        let s = cs.diffusion_mat(0.37, &[probe], &dummy)[0];
        if (s - sigma0).abs() > 1e-12 {
            return Err(Error::NonConstantSigma);
        }
    }

    let t_final = states.last().unwrap().time;
    let l_final = states.last().unwrap().density.values();

    // weighted drift fields w_s(y) = l_s(y) b_s(y) dx per stored state
    let mut fields: Vec<Vec<f64>> = Vec::with_capacity(states.len());
    for st in states {
        let vals = st.density.values();
        let masses: Vec<f64> = vals.iter().map(|v| v * dx).collect();
        let grid_measure = DiscreteMeasure::normalized(1, centers.clone(), masses)?;
        let mut w = vec![0.0; m];
        for i in 0..m {
            let b = cs.drift_vec(st.time, &[centers[i]], vals[i], &grid_measure)[0];
            w[i] = vals[i] * b * dx;
        }
        fields.push(w);
    }

    // trapezoid weights over the stored (possibly non-uniform) time grid
    let times: Vec<f64> = states.iter().map(|s| s.time).collect();
    let mut tw = vec![0.0; times.len()];
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        tw[k] += 0.5 * h;
        tw[k + 1] += 0.5 * h;
    }

    // endpoint integrand: -d/dx (b_t l_t) by central differences
    let endpoint: Vec<f64> = {
        let w = &fields[fields.len() - 1];
        (0..m)
            .map(|i| {
                let right = if i + 1 < m { w[i + 1] } else { 0.0 };
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                -(right - left) / (2.0 * dx * dx) // fields carry dx already
            })
            .collect()
    };

    let initial = states[0].density.values();
    let reach_sigmas = 8.0;
    let residual = (0..m)
        .into_par_iter()
        .map(|ix| {
            let x = centers[ix];
            // initial-layer term
            let var0 = sigma0 * sigma0 * t_final;
            let mut rhs = 0.0;
            let reach = (reach_sigmas * var0.sqrt() / dx).ceil() as usize;
            let lo = ix.saturating_sub(reach);
            let hi = (ix + reach + 1).min(m);
            for j in lo..hi {
                rhs += gaussian(x - centers[j], var0) * initial[j] * dx;
            }
            // drift correction, trapezoid in time
            for (k, w) in fields.iter().enumerate() {
                if tw[k] == 0.0 {
                    continue;
                }
                let tau = t_final - times[k];
                let inner = if tau <= 0.0 {
                    endpoint[ix]
                } else {
                    let var = sigma0 * sigma0 * tau;
                    let reach = (reach_sigmas * var.sqrt() / dx).ceil() as usize;
                    let lo = ix.saturating_sub(reach);
                    let hi = (ix + reach + 1).min(m);
                    let mut acc = 0.0;
                    for j in lo..hi {
                        let diff = x - centers[j];
                        acc += w[j] * gaussian(diff, var) * diff / var;
                    }
                    acc
                };
                rhs += tw[k] * inner;
            }
            (l_final[ix] - rhs).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(residual)
}
