//! Drift/diffusion coefficient sets, a scenario library, and an empirical
//! checker for the regularity conditions a scenario declares.
//!
//! A `CoefficientSet` bundles the drift `b(t, x, r, m)` (with `r` the local
//! density value and `m` the current distribution), the diffusion
//! `sigma(t, x, m)`, and the declared constants: the joint Lipschitz/bound
//! constant `C`, the spatial Hölder exponent `beta`, the Wasserstein order
//! `p`, and the constant drift envelope. The checker evaluates every
//! declared inequality on seeded random tuples; a pass is sampled evidence,
//! not a proof, and reports say how many tuples were tried.

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numerics::{euclid_norm, frobenius_norm, solve_dense};
use crate::rng::{tag, Stream};
use crate::transport::wasserstein_lp;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type DriftFn = dyn Fn(f64, &[f64], f64, &DiscreteMeasure, &mut [f64]) + Send + Sync;
pub type DiffusionFn = dyn Fn(f64, &[f64], &DiscreteMeasure, &mut [f64]) + Send + Sync;

/// Declared constants for a coefficient set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientConstants {
    /// joint Lipschitz / boundedness constant
    pub lipschitz: f64,
    /// spatial Hölder exponent of the diffusion, in (0, 1)
    pub beta: f64,
    /// Wasserstein order the continuity is declared in
    pub moment_order: f64,
    /// constant envelope for the drift (bounded-drift regime)
    pub f0_bound: f64,
    /// integrability exponents of the envelope; bounded drifts use infinity
    pub f0_exponents: (f64, f64),
}

/// Whether `(p, q)` lies in the admissible exponent region
/// `p, q in (2, inf], d/p + 2/q < 1` (infinite exponents contribute zero).
pub fn exponents_admissible(dim: usize, p: f64, q: f64) -> bool {
    if !(p > 2.0) || !(q > 2.0) {
        return false;
    }
    let a = if p.is_infinite() { 0.0 } else { dim as f64 / p };
    let b = if q.is_infinite() { 0.0 } else { 2.0 / q };
    a + b < 1.0
}

/// A drift/diffusion pair with its declared constants.
#[derive(Clone)]
pub struct CoefficientSet {
    pub name: String,
    pub dim: usize,
    pub noise_dim: usize,
    pub constants: CoefficientConstants,
    /// drift actually reads the density argument `r`
    pub density_dependent: bool,
    /// diffusion ignores the measure argument
    pub sigma_distribution_free: bool,
    /// drift is bounded by `constants.f0_bound`
    pub drift_bounded: bool,
    /// coefficients are valid for t in [0, time_horizon]
    pub time_horizon: f64,
    drift: Arc<DriftFn>,
    diffusion: Arc<DiffusionFn>,
}

impl std::fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constants", &self.constants)
            .finish()
    }
}

/// Summary embedded into run metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientDescriptor {
    pub name: String,
    pub dim: usize,
    pub noise_dim: usize,
    pub constants: CoefficientConstants,
    pub density_dependent: bool,
    pub sigma_distribution_free: bool,
    pub drift_bounded: bool,
}

impl CoefficientSet {
    /// Evaluate the drift into `out` (a `dim`-vector).
    #[inline]
    pub fn drift(&self, t: f64, x: &[f64], r: f64, m: &DiscreteMeasure, out: &mut [f64]) {
        (self.drift)(t, x, r, m, out)
    }

    /// Evaluate the diffusion into `out` (row-major `dim x noise_dim`).
    #[inline]
    pub fn diffusion(&self, t: f64, x: &[f64], m: &DiscreteMeasure, out: &mut [f64]) {
        (self.diffusion)(t, x, m, out)
    }

    pub fn drift_vec(&self, t: f64, x: &[f64], r: f64, m: &DiscreteMeasure) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift(t, x, r, m, &mut out);
        out
    }

    pub fn diffusion_mat(&self, t: f64, x: &[f64], m: &DiscreteMeasure) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.noise_dim];
        self.diffusion(t, x, m, &mut out);
        out
    }

    /// Replace the drift (keeps everything else), for custom coefficient
    /// sets built on top of a scenario.
    pub fn with_drift(mut self, drift: Arc<DriftFn>, density_dependent: bool) -> Self {
        self.drift = drift;
        self.density_dependent = density_dependent;
        self
    }

    /// Replace the diffusion.
    pub fn with_diffusion(mut self, diffusion: Arc<DiffusionFn>, distribution_free: bool) -> Self {
        self.diffusion = diffusion;
        self.sigma_distribution_free = distribution_free;
        self
    }

    pub fn descriptor(&self) -> CoefficientDescriptor {
        CoefficientDescriptor {
            name: self.name.clone(),
            dim: self.dim,
            noise_dim: self.noise_dim,
            constants: self.constants.clone(),
            density_dependent: self.density_dependent,
            sigma_distribution_free: self.sigma_distribution_free,
            drift_bounded: self.drift_bounded,
        }
    }
}

/// Parameters for the scenario library.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// dimension (default 1)
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// translation velocity (translation scenario)
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    /// diffusion level (translation scenario; 0 gives a deterministic flow)
    #[serde(default)]
    pub eps: Option<f64>,
}

fn default_dim() -> usize {
    1
}

impl ScenarioSpec {
    pub fn named(name: &str) -> Self {
        ScenarioSpec {
            name: name.to_string(),
            dim: 1,
            c: None,
            eps: None,
        }
    }
}

/// Built-in scenario by name, in dimension one with default parameters.
///
/// Names: `tanh-mean`, `pure-diffusion`, `density-repulsion`, `translation`.
pub fn scenario(name: &str) -> Result<CoefficientSet> {
    scenario_with(&ScenarioSpec::named(name))
}

/// Built-in scenario with explicit parameters.
pub fn scenario_with(spec: &ScenarioSpec) -> Result<CoefficientSet> {
    let d = spec.dim;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let sqrt_d = (d as f64).sqrt();
    match spec.name.as_str() {
        "tanh-mean" => Ok(CoefficientSet {
            name: "tanh-mean".into(),
            dim: d,
            noise_dim: d,
            constants: CoefficientConstants {
                lipschitz: 2.0 * sqrt_d,
                beta: 0.5,
                moment_order: 1.0,
                f0_bound: 3.5 * sqrt_d,
                f0_exponents: (f64::INFINITY, f64::INFINITY),
            },
            density_dependent: true,
            sigma_distribution_free: true,
            drift_bounded: true,
            time_horizon: f64::INFINITY,
            drift: Arc::new(move |_t, _x, r, m, out| {
                let th = r.tanh();
                let mean = m.mean_clipped(-5.0, 5.0);
                for (o, mk) in out.iter_mut().zip(mean) {
                    *o = th + 0.5 * mk;
                }
            }),
            diffusion: Arc::new(identity_diffusion(d)),
        }),
        "pure-diffusion" => Ok(CoefficientSet {
            name: "pure-diffusion".into(),
            dim: d,
            noise_dim: d,
            constants: CoefficientConstants {
                lipschitz: sqrt_d,
                beta: 0.5,
                moment_order: 1.0,
                f0_bound: 1.0,
                f0_exponents: (f64::INFINITY, f64::INFINITY),
            },
            density_dependent: false,
            sigma_distribution_free: true,
            drift_bounded: true,
            time_horizon: f64::INFINITY,
            drift: Arc::new(|_t, _x, _r, _m, out| out.fill(0.0)),
            diffusion: Arc::new(identity_diffusion(d)),
        }),
        "density-repulsion" => Ok(CoefficientSet {
            name: "density-repulsion".into(),
            dim: d,
            noise_dim: d,
            constants: CoefficientConstants {
                lipschitz: 2.0 * sqrt_d,
                beta: 0.5,
                moment_order: 1.0,
                f0_bound: std::f64::consts::FRAC_PI_2 * sqrt_d,
                f0_exponents: (f64::INFINITY, f64::INFINITY),
            },
            density_dependent: true,
            sigma_distribution_free: true,
            drift_bounded: true,
            time_horizon: f64::INFINITY,
            drift: Arc::new(|_t, x, r, _m, out| {
                let norm = euclid_norm(x);
                let factor = -r.atan() / (1.0 + norm);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = factor * xi;
                }
            }),
            diffusion: Arc::new(identity_diffusion(d)),
        }),
        "translation" => {
            let c = spec.c.clone().unwrap_or_else(|| vec![1.0; d]);
            if c.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "translation velocity has {} entries, dim is {d}",
                    c.len()
                )));
            }
            let eps = spec.eps.unwrap_or(1.0);
            if !(eps >= 0.0) {
                return Err(Error::InvalidArgument("eps must be >= 0".into()));
            }
            let c_norm = euclid_norm(&c);
            let lip = if eps > 0.0 {
                sqrt_d * eps.max(1.0 / (eps * eps))
            } else {
                sqrt_d
            };
            Ok(CoefficientSet {
                name: "translation".into(),
                dim: d,
                noise_dim: d,
                constants: CoefficientConstants {
                    lipschitz: lip,
                    beta: 0.5,
                    moment_order: 1.0,
                    f0_bound: c_norm.max(1.0),
                    f0_exponents: (f64::INFINITY, f64::INFINITY),
                },
                density_dependent: false,
                sigma_distribution_free: true,
                drift_bounded: true,
                time_horizon: f64::INFINITY,
                drift: Arc::new(move |_t, _x, _r, _m, out| out.copy_from_slice(&c)),
                diffusion: Arc::new(scaled_identity_diffusion(d, eps)),
            })
        }
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn identity_diffusion(d: usize) -> impl Fn(f64, &[f64], &DiscreteMeasure, &mut [f64]) {
    scaled_identity_diffusion(d, 1.0)
}

fn scaled_identity_diffusion(
    d: usize,
    scale: f64,
) -> impl Fn(f64, &[f64], &DiscreteMeasure, &mut [f64]) {
    move |_t, _x, _m, out| {
        out.fill(0.0);
        for k in 0..d {
            out[k * d + k] = scale;
        }
    }
}

/// One checked inequality: worst sampled quantity vs the declared bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub worst: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Sampled verdicts for every declared condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub scenario: String,
    pub sample_count: usize,
    pub seed: u64,
    pub conditions: Vec<ConditionReport>,
    pub all_pass: bool,
    /// whether the declared envelope exponents lie in the admissible region
    pub envelope_exponents_admissible: bool,
}

impl AssumptionReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Where the checker samples tuples from.
#[derive(Debug, Clone)]
pub struct SampleDomain {
    pub t_max: f64,
    pub x_radius: f64,
    pub r_max: f64,
    pub measure_support: usize,
    pub measure_radius: f64,
}

impl Default for SampleDomain {
    fn default() -> Self {
        SampleDomain {
            t_max: 1.0,
            x_radius: 5.0,
            r_max: 2.0,
            measure_support: 4,
            measure_radius: 3.0,
        }
    }
}

/// Seeded tuple sampler handed to [`check_assumptions`].
#[derive(Debug, Clone)]
pub struct TupleSampler {
    pub seed: u64,
    pub domain: SampleDomain,
}

impl TupleSampler {
    pub fn seeded(seed: u64) -> Self {
        TupleSampler {
            seed,
            domain: SampleDomain::default(),
        }
    }
}

#[derive(Clone, Copy, Default)]
struct WorstRatios {
    ellipticity: f64,
    diffusion_bound: f64,
    holder_x: f64,
    lipschitz_r: f64,
    lipschitz_w: f64,
    envelope: f64,
}

impl WorstRatios {
    fn merge(self, other: WorstRatios) -> WorstRatios {
        WorstRatios {
            ellipticity: self.ellipticity.max(other.ellipticity),
            diffusion_bound: self.diffusion_bound.max(other.diffusion_bound),
            holder_x: self.holder_x.max(other.holder_x),
            lipschitz_r: self.lipschitz_r.max(other.lipschitz_r),
            lipschitz_w: self.lipschitz_w.max(other.lipschitz_w),
            envelope: self.envelope.max(other.envelope),
        }
    }
}

/// Evaluate every declared inequality on `n_samples` random tuples.
///
/// Deterministic given the sampler seed; sampling is partitioned into fixed
/// blocks so the result does not depend on the parallel schedule. A
/// non-finite coefficient value aborts with the offending tuple.
pub fn check_assumptions(
    cs: &CoefficientSet,
    sampler: &TupleSampler,
    n_samples: usize,
) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    const BLOCK: usize = 512;
    let blocks: Vec<usize> = (0..n_samples.div_ceil(BLOCK)).collect();
    let partials: Vec<Result<WorstRatios>> = blocks
        .par_iter()
        .map(|&b| {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(n_samples);
            let mut worst = WorstRatios::default();
            for k in lo..hi {
                worst = worst.merge(sample_ratios(cs, sampler, k)?);
            }
            Ok(worst)
        })
        .collect();
    let mut worst = WorstRatios::default();
    for p in partials {
        worst = worst.merge(p?);
    }

    let c = cs.constants.lipschitz;
    let slack = 1.0 + 1e-6;
    let make = |name: &str, value: f64, bound: f64| ConditionReport {
        name: name.to_string(),
        worst: value,
        bound,
        pass: value <= bound * slack,
    };
    let conditions = vec![
        make("ellipticity", worst.ellipticity, c),
        make("diffusion_bound", worst.diffusion_bound, c),
        make("holder_x", worst.holder_x, c),
        make("lipschitz_r", worst.lipschitz_r, c),
        make("lipschitz_wasserstein", worst.lipschitz_w, c),
        make("drift_envelope", worst.envelope, cs.constants.f0_bound),
    ];
    let all_pass = conditions.iter().all(|c| c.pass);
    Ok(AssumptionReport {
        scenario: cs.name.clone(),
        sample_count: n_samples,
        seed: sampler.seed,
        conditions,
        all_pass,
        envelope_exponents_admissible: exponents_admissible(
            cs.dim,
            cs.constants.f0_exponents.0,
            cs.constants.f0_exponents.1,
        ),
    })
}

fn sample_ratios(cs: &CoefficientSet, sampler: &TupleSampler, k: usize) -> Result<WorstRatios> {
    let d = cs.dim;
    let dom = &sampler.domain;
    let mut stream = Stream::new(sampler.seed, tag::ASSUMPTION_SAMPLER, k as u64);
    let t = stream.next_uniform() * dom.t_max.min(cs.time_horizon);
    let draw_point = |s: &mut Stream| -> Vec<f64> {
        (0..d)
            .map(|_| (2.0 * s.next_uniform() - 1.0) * dom.x_radius)
            .collect()
    };
    let x = draw_point(&mut stream);
    let y = draw_point(&mut stream);
    let r = stream.next_uniform() * dom.r_max;
    let r2 = stream.next_uniform() * dom.r_max;
    let rho = random_measure(&mut stream, d, dom)?;
    let rho2 = random_measure(&mut stream, d, dom)?;
    let wp = wasserstein_lp(&rho, &rho2, cs.constants.moment_order)?.0;

    let fail = |vals: &[f64]| vals.iter().any(|v| !v.is_finite());
    let nonfinite = |t: f64, x: &[f64], r: f64| Error::NonFiniteCoefficient {
        sample: k,
        t,
        x: x.to_vec(),
        r,
    };

    let b1 = cs.drift_vec(t, &x, r, &rho);
    if fail(&b1) {
        return Err(nonfinite(t, &x, r));
    }
    let b_r2 = cs.drift_vec(t, &x, r2, &rho);
    if fail(&b_r2) {
        return Err(nonfinite(t, &x, r2));
    }
    let b_rho2 = cs.drift_vec(t, &x, r, &rho2);
    if fail(&b_rho2) {
        return Err(nonfinite(t, &x, r));
    }
    let s1 = cs.diffusion_mat(t, &x, &rho);
    let s_y = cs.diffusion_mat(t, &y, &rho);
    let s_rho2 = cs.diffusion_mat(t, &x, &rho2);
    if fail(&s1) || fail(&s_y) || fail(&s_rho2) {
        return Err(nonfinite(t, &x, r));
    }

    let mut worst = WorstRatios::default();

    // |sigma| and |a^{-1}| in Frobenius norm
    worst.diffusion_bound = frobenius_norm(&s1);
    worst.ellipticity = inverse_frobenius(&s1, d, cs.noise_dim);

    // Hölder continuity of sigma in space
    let dx = euclid_norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<f64>>());
    if dx > 1e-12 {
        let num = diff_norm(&s1, &s_y);
        worst.holder_x = num / dx.powf(cs.constants.beta);
    }

    // Lipschitz continuity of b in the density value
    if (r - r2).abs() > 1e-12 {
        worst.lipschitz_r = diff_norm(&b1, &b_r2) / (r - r2).abs();
    }

    // Lipschitz continuity of b and sigma in the measure
    if wp > 1e-9 {
        let rb = diff_norm(&b1, &b_rho2) / wp;
        let rs = diff_norm(&s1, &s_rho2) / wp;
        worst.lipschitz_w = rb.max(rs);
    }

    worst.envelope = euclid_norm(&b1);
    Ok(worst)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Frobenius norm of `(sigma sigma^T)^{-1}`; infinite when singular.
fn inverse_frobenius(sigma: &[f64], d: usize, m: usize) -> f64 {
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..m {
                s += sigma[i * m + k] * sigma[j * m + k];
            }
            a[i * d + j] = s;
        }
    }
    let mut inv = vec![0.0; d * d];
    for col in 0..d {
        let mut mat = a.clone();
        let mut rhs = vec![0.0; d];
        rhs[col] = 1.0;
        if solve_dense(&mut mat, &mut rhs, d).is_none() {
            return f64::INFINITY;
        }
        for row in 0..d {
            inv[row * d + col] = rhs[row];
        }
    }
    frobenius_norm(&inv)
}

fn random_measure(stream: &mut Stream, d: usize, dom: &SampleDomain) -> Result<DiscreteMeasure> {
    let n = dom.measure_support.max(1);
    let pts: Vec<f64> = (0..n * d)
        .map(|_| (2.0 * stream.next_uniform() - 1.0) * dom.measure_radius)
        .collect();
    let masses: Vec<f64> = (0..n).map(|_| stream.next_uniform() + 0.05).collect();
    DiscreteMeasure::normalized(d, pts, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::wasserstein_lp;

    #[test]
    fn unknown_scenario_is_rejected() {
        assert!(matches!(scenario("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn pure_diffusion_drift_is_zero() {
        let cs = scenario("pure-diffusion").unwrap();
        let m = DiscreteMeasure::dirac(vec![0.7]).unwrap();
        let b = cs.drift_vec(0.3, &[1.4], 0.9, &m);
        assert_eq!(b, vec![0.0]);
    }

    #[test]
    fn tanh_mean_zero_at_symmetric_state() {
        // r = 0 and a centered measure: tanh(0) + 0.5 * 0 = 0
        let cs = scenario("tanh-mean").unwrap();
        let m = DiscreteMeasure::new(1, vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = cs.drift_vec(0.0, &[2.0], 0.0, &m);
        assert!(b[0].abs() < 1e-15);
    }

    #[test]
    fn tanh_mean_clips_the_mean() {
        let cs = scenario("tanh-mean").unwrap();
        let m = DiscreteMeasure::dirac(vec![100.0]).unwrap();
        let b = cs.drift_vec(0.0, &[0.0], 0.0, &m);
        assert!((b[0] - 2.5).abs() < 1e-12); // 0.5 * clip(100) = 2.5
    }

    #[test]
    fn translation_drift_is_constant() {
        let spec = ScenarioSpec {
            name: "translation".into(),
            dim: 1,
            c: Some(vec![1.0]),
            eps: Some(0.0),
        };
        let cs = scenario_with(&spec).unwrap();
        let m = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        assert_eq!(cs.drift_vec(0.5, &[3.0], 1.0, &m), vec![1.0]);
        let s = cs.diffusion_mat(0.5, &[3.0], &m);
        assert_eq!(s, vec![0.0]);
    }

    #[test]
    fn identity_diffusion_ratios() {
        let cs = scenario("pure-diffusion").unwrap();
        let report = check_assumptions(&cs, &TupleSampler::seeded(11), 200).unwrap();
        let diff = report.condition("diffusion_bound").unwrap();
        assert!((diff.worst - 1.0).abs() < 1e-12);
        assert_eq!(report.condition("holder_x").unwrap().worst, 0.0);
        assert_eq!(report.condition("drift_envelope").unwrap().worst, 0.0);
        assert!(report.all_pass);
        assert!(report.envelope_exponents_admissible);
    }

    #[test]
    fn all_default_scenarios_pass_their_declared_constants() {
        for name in ["tanh-mean", "pure-diffusion", "density-repulsion", "translation"] {
            let cs = scenario(name).unwrap();
            let report = check_assumptions(&cs, &TupleSampler::seeded(7), 10_000).unwrap();
            assert!(report.all_pass, "{name}: {:#?}", report.conditions);
        }
    }

    #[test]
    fn degenerate_translation_fails_ellipticity() {
        let spec = ScenarioSpec {
            name: "translation".into(),
            dim: 1,
            c: Some(vec![1.0]),
            eps: Some(0.0),
        };
        let cs = scenario_with(&spec).unwrap();
        let report = check_assumptions(&cs, &TupleSampler::seeded(1), 64).unwrap();
        let ell = report.condition("ellipticity").unwrap();
        assert!(!ell.pass);
        assert!(ell.worst.is_infinite());
    }

    #[test]
    fn checker_is_deterministic() {
        let cs = scenario("tanh-mean").unwrap();
        let a = check_assumptions(&cs, &TupleSampler::seeded(5), 2000).unwrap();
        let b = check_assumptions(&cs, &TupleSampler::seeded(5), 2000).unwrap();
        for (ca, cb) in a.conditions.iter().zip(&b.conditions) {
            assert_eq!(ca.worst.to_bits(), cb.worst.to_bits());
        }
    }

    #[test]
    fn non_finite_drift_names_the_tuple() {
        let mut cs = scenario("pure-diffusion").unwrap();
        cs.drift = Arc::new(|_t, _x, _r, _m, out| out.fill(f64::NAN));
        match check_assumptions(&cs, &TupleSampler::seeded(3), 16) {
            Err(Error::NonFiniteCoefficient { sample, .. }) => assert!(sample < 16),
            other => panic!("expected NonFiniteCoefficient, got {other:?}"),
        }
    }

    #[test]
    fn mean_functional_is_one_lipschitz_in_w1() {
        // |mean(m) - mean(m')| <= W_1(m, m'): the dual bound with f(x) = x
        let mut stream = Stream::new(21, tag::SELFTEST, 6);
        let dom = SampleDomain::default();
        for _ in 0..100 {
            let a = random_measure(&mut stream, 1, &dom).unwrap();
            let b = random_measure(&mut stream, 1, &dom).unwrap();
            let w1 = wasserstein_lp(&a, &b, 1.0).unwrap().0;
            let gap = (a.mean()[0] - b.mean()[0]).abs();
            assert!(gap <= w1 + 1e-9, "gap {gap} > W1 {w1}");
        }
    }

    #[test]
    fn exponent_class_boundary() {
        assert!(exponents_admissible(1, f64::INFINITY, f64::INFINITY));
        assert!(exponents_admissible(1, 4.0, 8.0)); // 1/4 + 2/8 = 0.5 < 1
        assert!(!exponents_admissible(1, 3.0, 3.0)); // 1/3 + 2/3 = 1
        assert!(!exponents_admissible(1, 2.0, 10.0)); // p must exceed 2
        assert!(!exponents_admissible(3, 4.0, 8.0)); // 3/4 + 1/4 = 1
    }
}
