//! Counter-based random streams.
//!
//! Every random draw in the toolkit is a pure function of
//! `(experiment seed, purpose tag, stream index, counter)`, realized with
//! splitmix64 state derivation. Streams never share state, so the particle
//! count, the thread schedule, and the order of evaluation cannot perturb
//! each other's draws.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose tags keep independent uses of the same experiment seed apart.
pub mod tag {
    pub const INITIAL_SAMPLE: u64 = 1;
    pub const STEP_NOISE: u64 = 2;
    pub const ASSUMPTION_SAMPLER: u64 = 3;
    pub const SELFTEST: u64 = 4;
}

/// Derive a stream state from a seed, a purpose tag, and a stream index.
pub fn derive_stream(seed: u64, purpose: u64, index: u64) -> u64 {
    let mut s = seed;
    s = mix(s.wrapping_add(GOLDEN).wrapping_add(purpose.wrapping_mul(GOLDEN)));
    s = mix(s ^ index.wrapping_mul(0xD605_0B1A_7C2E_9B43));
    s
}

/// A splitmix64 stream. Cheap to create; eight bytes of state.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64, purpose: u64, index: u64) -> Self {
        Stream {
            state: derive_stream(seed, purpose, index),
        }
    }

    /// Jump to a fresh substream at `counter`, e.g. one time step.
    pub fn at_counter(&self, counter: u64) -> Self {
        Stream {
            state: mix(self.state ^ counter.wrapping_mul(GOLDEN)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in the open interval (0, 1].
    #[inline]
    pub fn next_uniform_oc(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform draw in the half-open interval [0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// A pair of independent standard normal draws (Box-Muller).
    #[inline]
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_uniform_oc();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// Fill `out` with standard normal draws.
    pub fn fill_normals(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i + 1 < out.len() {
            let (a, b) = self.next_normal_pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.next_normal_pair().0;
        }
    }
}
