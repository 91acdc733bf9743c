//! The mollified interacting particle system: seeded initial sampling,
//! Euler-Maruyama stepping with per-particle density feedback, and the
//! trajectory store.
//!
//! Determinism contract: every draw comes from a counter-based stream keyed
//! by `(seed, purpose, particle index, step)`, per-particle updates are
//! independent, and all shared reductions run over the sorted cloud with a
//! fixed summation tree. Reruns are bit-identical regardless of thread
//! count, and permuting particles together with their noise rows permutes
//! the output cloud exactly.

use crate::coefficients::{CoefficientDescriptor, CoefficientSet};
use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::measure::DiscreteMeasure;
use crate::mollify::{Kde1d, MollifierFamily};
use crate::rng::{tag, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

/// Positions of `N` particles in dimension `d` at a common time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    dim: usize,
    positions: Vec<f64>,
    time: f64,
}

impl ParticleCloud {
    pub fn new(dim: usize, positions: Vec<f64>, time: f64) -> Result<Self> {
        if dim == 0 || positions.is_empty() || positions.len() % dim != 0 {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = positions.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteState {
                index: i / dim,
                t: time,
                state: positions[(i / dim) * dim..(i / dim + 1) * dim].to_vec(),
            });
        }
        Ok(ParticleCloud {
            dim,
            positions,
            time,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Pin the clock to an exact grid time (avoids `+= dt` drift).
    fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Positions sorted ascending (lexicographically for d > 1); the
    /// canonical order used for all shared reductions.
    pub fn sorted_positions(&self) -> Vec<f64> {
        let d = self.dim;
        if d == 1 {
            let mut xs = self.positions.clone();
            xs.sort_unstable_by(f64::total_cmp);
            return xs;
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_unstable_by(|&a, &b| {
            self.position(a)
                .iter()
                .zip(self.position(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out = Vec::with_capacity(self.positions.len());
        for i in order {
            out.extend_from_slice(self.position(i));
        }
        out
    }

    /// Equal-weight empirical measure over the canonically sorted cloud.
    pub fn empirical_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::uniform(self.dim, self.sorted_positions())
    }

    /// Empirical mean (over the sorted cloud, fixed summation tree).
    pub fn mean(&self) -> Vec<f64> {
        let sorted = self.sorted_positions();
        let n = self.len();
        let d = self.dim;
        (0..d)
            .map(|k| crate::numerics::pairwise_sum_by(0..n, |i| sorted[i * d + k]) / n as f64)
            .collect()
    }

    /// Empirical variance of coordinate `k`.
    pub fn variance(&self, k: usize) -> f64 {
        let sorted = self.sorted_positions();
        let n = self.len();
        let d = self.dim;
        let mean = crate::numerics::pairwise_sum_by(0..n, |i| sorted[i * d + k]) / n as f64;
        crate::numerics::pairwise_sum_by(0..n, |i| {
            let z = sorted[i * d + k] - mean;
            z * z
        }) / n as f64
    }
}

/// Simulation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_particles: usize,
    pub dim: usize,
    /// time horizon
    pub t_horizon: f64,
    /// step size; must divide the horizon and every snapshot time
    pub dt: f64,
    /// mollifier index n
    pub n_mollifier: u32,
    pub seed: u64,
    /// times at which marginals are recorded (t = 0 is always recorded)
    pub snapshot_times: Vec<f64>,
    /// Wasserstein order used by downstream diagnostics
    pub p: f64,
    /// retain per-particle paths at every step (memory: N x steps x d)
    #[serde(default)]
    pub dense_paths: bool,
    /// optional wall-clock budget in milliseconds; on expiry the store is
    /// returned truncated and flagged incomplete
    #[serde(default)]
    pub wall_budget_ms: Option<u64>,
}

impl SimConfig {
    fn divides(t: f64, dt: f64) -> bool {
        let k = (t / dt).round();
        (t - k * dt).abs() <= 1e-12 * t.abs().max(1.0)
    }

    pub fn validate(&self, cs: &CoefficientSet) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidConfig("n_particles must be >= 1".into()));
        }
        if self.dim == 0 || self.dim != cs.dim {
            return Err(Error::InvalidConfig(format!(
                "dim {} does not match coefficients ({})",
                self.dim, cs.dim
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if !(self.t_horizon > 0.0) || self.t_horizon > cs.time_horizon {
            return Err(Error::InvalidConfig(format!(
                "horizon {} outside coefficient validity (<= {})",
                self.t_horizon, cs.time_horizon
            )));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidConfig("p must be >= 1".into()));
        }
        if self.n_mollifier == 0 {
            return Err(Error::InvalidConfig("n_mollifier must be >= 1".into()));
        }
        if !Self::divides(self.t_horizon, self.dt) {
            return Err(Error::InvalidConfig(format!(
                "dt {} does not divide the horizon {}",
                self.dt, self.t_horizon
            )));
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_horizon).contains(&t) {
                return Err(Error::InvalidConfig(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.t_horizon
                )));
            }
            if !Self::divides(t, self.dt) {
                return Err(Error::InvalidConfig(format!(
                    "dt {} does not divide snapshot time {t}",
                    self.dt
                )));
            }
        }
        Ok(())
    }

    fn snapshot_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = self
            .snapshot_times
            .iter()
            .map(|t| (t / self.dt).round() as usize)
            .collect();
        steps.push(0);
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// Densely stored per-particle paths (opt-in).
#[derive(Debug, Clone)]
pub struct DensePaths {
    /// step times, `0..=steps`
    pub times: Vec<f64>,
    /// row-major `(steps + 1) x N x d`
    pub positions: Vec<f64>,
    pub n_particles: usize,
    pub dim: usize,
}

impl DensePaths {
    /// Position of particle `i` at step `k`.
    pub fn at(&self, k: usize, i: usize) -> &[f64] {
        let stride = self.n_particles * self.dim;
        let base = k * stride + i * self.dim;
        &self.positions[base..base + self.dim]
    }
}

/// Run metadata persisted alongside snapshots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreMetadata {
    pub config: SimConfig,
    pub coefficients: CoefficientDescriptor,
    pub kernel: String,
    pub complete: bool,
    pub content_hash: String,
}

/// Recorded marginals of one simulation run.
#[derive(Debug, Clone)]
pub struct TrajectoryStore {
    snapshots: Vec<(f64, ParticleCloud)>,
    dense: Option<DensePaths>,
    metadata: StoreMetadata,
}

impl TrajectoryStore {
    pub fn snapshots(&self) -> &[(f64, ParticleCloud)] {
        &self.snapshots
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&ParticleCloud> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|(_, c)| c)
    }

    pub fn dense(&self) -> Option<&DensePaths> {
        self.dense.as_ref()
    }

    pub fn metadata(&self) -> &StoreMetadata {
        &self.metadata
    }

    pub fn dim(&self) -> usize {
        self.metadata.config.dim
    }

    pub fn is_complete(&self) -> bool {
        self.metadata.complete
    }

    pub fn content_hash(&self) -> &str {
        &self.metadata.content_hash
    }
}

/// Draw `n` initial particles from a grid density.
///
/// In one dimension this is inverse-CDF sampling from the piecewise-constant
/// density; in higher dimensions, rejection sampling against the grid
/// envelope. Each particle has its own counter-based stream, so the draw for
/// particle `i` does not depend on `n`.
pub fn sample_initial(l_nu: &GridDensity, n: usize, seed: u64) -> Result<ParticleCloud> {
    let mass = l_nu.mass();
    if mass <= 0.0 {
        return Err(Error::ZeroMassDensity);
    }
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "initial density has mass {mass}, expected 1 within 1e-6"
        )));
    }
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    let d = l_nu.dim();
    let mut positions = vec![0.0; n * d];
    if d == 1 {
        let values = l_nu.values();
        let width = l_nu.cell_width()[0];
        let lo = l_nu.origin()[0];
        // cell-mass CDF, normalized
        let mut cdf = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for v in values {
            acc += v * width / mass;
            cdf.push(acc);
        }
        positions
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, out)| {
                let mut stream = Stream::new(seed, tag::INITIAL_SAMPLE, i as u64);
                let u = stream.next_uniform();
                let k = cdf.partition_point(|c| *c <= u).min(values.len() - 1);
                let prev = if k == 0 { 0.0 } else { cdf[k - 1] };
                let cell_mass = (cdf[k] - prev).max(f64::MIN_POSITIVE);
                let frac = ((u - prev) / cell_mass).clamp(0.0, 1.0);
                *out = lo + (k as f64 + frac) * width;
            });
    } else {
        let envelope = l_nu.sup_norm();
        if !(envelope > 0.0) {
            return Err(Error::ZeroMassDensity);
        }
        let origin = l_nu.origin().to_vec();
        let extent: Vec<f64> = l_nu
            .cell_width()
            .iter()
            .zip(l_nu.shape())
            .map(|(w, s)| w * *s as f64)
            .collect();
        positions
            .par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(i, out)| -> Result<()> {
                let mut stream = Stream::new(seed, tag::INITIAL_SAMPLE, i as u64);
                for _ in 0..1_000_000u64 {
                    for (k, o) in out.iter_mut().enumerate() {
                        *o = origin[k] + stream.next_uniform() * extent[k];
                    }
                    if stream.next_uniform() * envelope <= l_nu.value_at(out) {
                        return Ok(());
                    }
                }
                Err(Error::InvalidArgument(
                    "rejection sampling failed to accept".into(),
                ))
            })?;
    }
    ParticleCloud::new(d, positions, 0.0)
}

/// Frozen per-step view of the cloud: the sorted KDE index (1-D) and the
/// canonical empirical measure. Every particle in the step reads this same
/// snapshot, so the update is independent of evaluation order.
pub struct StepContext {
    kde: Option<Kde1d>,
    pub measure: DiscreteMeasure,
}

impl StepContext {
    pub fn new(cloud: &ParticleCloud, cs: &CoefficientSet, fam: &MollifierFamily) -> Result<Self> {
        let sorted = cloud.sorted_positions();
        let measure = DiscreteMeasure::uniform(cloud.dim(), sorted.clone())?;
        let kde = if cs.density_dependent && cloud.dim() == 1 {
            Some(Kde1d::from_sorted(sorted, fam)?)
        } else {
            None
        };
        Ok(StepContext { kde, measure })
    }

    /// Mollified density seen by a particle at `x`.
    #[inline]
    pub fn density_at(&self, x: &[f64], cloud: &ParticleCloud, fam: &MollifierFamily) -> Result<f64> {
        match &self.kde {
            Some(kde) => Ok(kde.eval(x[0])),
            None => crate::mollify::kde_at(cloud, fam, x),
        }
    }
}

/// One Euler-Maruyama step.
///
/// For each particle, the density feedback `r_i` and the empirical measure
/// are read from the pre-step cloud; the position update is
/// `x += b(t, x, r_i, m) dt + sigma(t, x, m) sqrt(dt) xi_i`.
/// `noise` is row-major `N x noise_dim` standard normal draws.
pub fn em_step(
    cloud: &ParticleCloud,
    cs: &CoefficientSet,
    fam: &MollifierFamily,
    dt: f64,
    noise: &[f64],
) -> Result<ParticleCloud> {
    let n = cloud.len();
    let d = cloud.dim();
    let m = cs.noise_dim;
    if noise.len() != n * m {
        return Err(Error::InvalidArgument(format!(
            "noise has {} entries, expected {}",
            noise.len(),
            n * m
        )));
    }
    if d != cs.dim {
        return Err(Error::DimensionMismatch {
            expected: cs.dim,
            got: d,
        });
    }
    let ctx = StepContext::new(cloud, cs, fam)?;
    let mut out = vec![0.0; n * d];
    let t = cloud.time();
    let sqrt_dt = dt.sqrt();
    let density_dependent = cs.density_dependent;

    out.par_chunks_mut(d).enumerate().try_for_each_init(
        || (vec![0.0; d], vec![0.0; d * m]),
        |(bvec, smat), (i, dst)| -> Result<()> {
            let x = cloud.position(i);
            let r = if density_dependent {
                ctx.density_at(x, cloud, fam)?
            } else {
                0.0
            };
            cs.drift(t, x, r, &ctx.measure, bvec);
            cs.diffusion(t, x, &ctx.measure, smat);
            let xi = &noise[i * m..(i + 1) * m];
            for k in 0..d {
                let mut dw = 0.0;
                for (j, &z) in xi.iter().enumerate() {
                    dw += smat[k * m + j] * z;
                }
                dst[k] = x[k] + bvec[k] * dt + sqrt_dt * dw;
            }
            Ok(())
        },
    )?;

    // abort on the first non-finite update, in deterministic index order
    if let Some(flat) = out.iter().position(|v| !v.is_finite()) {
        let i = flat / d;
        return Err(Error::NonFiniteState {
            index: i,
            t,
            state: out[i * d..(i + 1) * d].to_vec(),
        });
    }
    ParticleCloud::new(d, out, t + dt)
}

/// Fill the per-particle standard normal draws for one step.
pub fn step_noise(seed: u64, step: usize, n: usize, m: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), n * m);
    out.par_chunks_mut(m).enumerate().for_each(|(i, chunk)| {
        let mut stream = Stream::new(seed, tag::STEP_NOISE, i as u64).at_counter(step as u64);
        stream.fill_normals(chunk);
    });
}

/// Run the particle system from `l_nu` over the configured horizon.
///
/// Fully deterministic given `(config, cs, l_nu)`: reruns produce
/// bit-identical stores, independent of thread count.
pub fn simulate(
    config: &SimConfig,
    cs: &CoefficientSet,
    l_nu: &GridDensity,
) -> Result<TrajectoryStore> {
    config.validate(cs)?;
    let fam = MollifierFamily::bump(config.dim, config.n_mollifier)?;
    let steps = (config.t_horizon / config.dt).round() as usize;
    let snapshot_steps = config.snapshot_steps();
    let start = Instant::now();
    let budget = config.wall_budget_ms.map(Duration::from_millis);

    let mut cloud = sample_initial(l_nu, config.n_particles, config.seed)?;
    let mut snapshots: Vec<(f64, ParticleCloud)> = Vec::with_capacity(snapshot_steps.len());
    let mut dense = config.dense_paths.then(|| DensePaths {
        times: Vec::with_capacity(steps + 1),
        positions: Vec::with_capacity((steps + 1) * config.n_particles * config.dim),
        n_particles: config.n_particles,
        dim: config.dim,
    });

    let mut record = |k: usize, cloud: &ParticleCloud, dense: &mut Option<DensePaths>| {
        if snapshot_steps.binary_search(&k).is_ok() {
            snapshots.push((cloud.time(), cloud.clone()));
        }
        if let Some(dp) = dense {
            dp.times.push(cloud.time());
            dp.positions.extend_from_slice(cloud.positions());
        }
    };
    record(0, &cloud, &mut dense);

    let mut noise = vec![0.0; config.n_particles * cs.noise_dim];
    let mut complete = true;
    for k in 0..steps {
        if let Some(b) = budget {
            if start.elapsed() > b {
                complete = false;
                break;
            }
        }
        step_noise(config.seed, k, config.n_particles, cs.noise_dim, &mut noise);
        cloud = em_step(&cloud, cs, &fam, config.dt, &noise)?;
        cloud.set_time((k + 1) as f64 * config.dt);
        record(k + 1, &cloud, &mut dense);
    }

    let metadata = StoreMetadata {
        config: config.clone(),
        coefficients: cs.descriptor(),
        kernel: "bump".into(),
        complete,
        content_hash: String::new(),
    };
    let mut store = TrajectoryStore {
        snapshots,
        dense,
        metadata,
    };
    let csv = crate::csv_io::snapshots_to_csv(&store);
    let meta_json = serde_json::to_string(&store.metadata).expect("metadata serializes");
    let mut hasher = crate::hash::ContentHasher::new();
    hasher.update(csv.as_bytes());
    hasher.update(meta_json.as_bytes());
    store.metadata.content_hash = hasher.finish_hex();
    Ok(store)
}
