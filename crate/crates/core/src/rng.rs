//! Seeded, splittable random streams.
//!
//! A stream is identified by `(seed, stream_id)`. The seed keys a ChaCha8
//! generator and the stream id selects one of its 2^64 independent counter
//! streams, so replicate `k` draws the same numbers no matter which worker
//! evaluates it. All samplers here are written against raw `u64` output and
//! `libm`, which keeps draws identical across platforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream-id domains keep design, noise and assignment draws disjoint.
pub mod domain {
    pub const ASSIGNMENT: u64 = 0;
    pub const DESIGN_COLUMN: u64 = 1 << 62;
    pub const NOISE: u64 = 2 << 62;
    pub const AUX: u64 = 3 << 62;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn sampler(&self) -> Sampler {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        Sampler { rng, spare_normal: None }
    }
}

/// Random source with the handful of distributions the crate needs.
pub struct Sampler {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Sampler {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's nearly-divisionless method).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let mut m = (self.next_u64() as u128) * (bound as u128);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = (self.next_u64() as u128) * (bound as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// Chi-square with integer degrees of freedom, as a sum of squared normals.
    pub fn chi_square(&mut self, dof: u32) -> f64 {
        (0..dof).map(|_| {
            let z = self.normal();
            z * z
        })
        .sum()
    }

    /// Student t with integer degrees of freedom: `Z / sqrt(chi2 / dof)`.
    pub fn student_t(&mut self, dof: u32) -> f64 {
        let z = self.normal();
        let chi = self.chi_square(dof);
        z / libm::sqrt(chi / dof as f64)
    }
}
