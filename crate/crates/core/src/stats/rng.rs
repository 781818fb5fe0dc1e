use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifier of the generator recorded in run summaries.
///
/// Streams are `ChaCha8Rng::seed_from_u64(master_seed)` (rand_core's PCG32
/// seed expansion) with the ChaCha stream word set to the stream index, so
/// every `(master_seed, index)` pair addresses a disjoint keystream. Uniforms
/// use the top 53 bits of each `u64` as `(k + 0.5) / 2^53`, which lies in the
/// open interval (0, 1). Gaussians are `mean + sd * Phi^-1(u)`, one uniform
/// per draw.
pub const PRNG_ID: &str = "chacha8-stream/u53-open/inverse-normal-cdf";

/// A single-consumer deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    master_seed: u64,
    index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(index);
        RngStream {
            inner,
            master_seed,
            index,
        }
    }

    pub fn origin(&self) -> (u64, u64) {
        (self.master_seed, self.index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// `true` with probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        standard_normal_quantile(self.uniform())
    }

    pub fn gaussian(&mut self, mean: f64, sd: f64) -> f64 {
        gaussian(self, mean, sd)
    }
}

/// `Phi^-1(u)` for `u` in (0, 1).
pub fn standard_normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u)
}

/// Derives an independent master seed for a sub-experiment (one grid point,
/// one protocol arm) with the SplitMix64 finalizer applied to
/// `master ^ (tag * golden_gamma)`.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One Gaussian draw by inverse-CDF transform of a single uniform.
pub fn gaussian(rng: &mut RngStream, mean: f64, sd: f64) -> f64 {
    debug_assert!(sd >= 0.0);
    let z = rng.standard_normal();
    if sd == 0.0 {
        mean
    } else {
        mean + sd * z
    }
}
