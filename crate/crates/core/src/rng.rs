//! Seeded, splittable random streams.
//!
//! A stream is identified by `(seed, stream_id)` and backed by ChaCha8, whose
//! 64-bit stream parameter gives independent sequences for the same key.
//! Child streams are derived by hashing a tag into the stream id, so every
//! consumer (a fold, a layer, a DE individual in a given generation) gets its
//! own reproducible sequence regardless of evaluation order.

use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a parent key with a tag into a new 64-bit key.
#[inline]
pub fn derive_key(parent: u64, tag: u64) -> u64 {
    mix64(parent ^ mix64(tag).rotate_left(17))
}

/// A reproducible random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream_id == other.stream_id && self.inner == other.inner
    }
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream keyed by this stream's identity and `tag`. Does not
    /// depend on (or advance) the current position of `self`.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, derive_key(self.stream_id, tag))
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn sample_uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(alloc::format!(
                "uniform bounds must satisfy lo < hi, got [{lo}, {hi})"
            )));
        }
        let v = lo + (hi - lo) * self.next_unit();
        // rounding can land exactly on `hi` for very narrow intervals
        Ok(if v >= hi { lo.max(libm::nextafter(hi, lo)) } else { v })
    }

    /// One draw from `N(mean, stddev²)`.
    pub fn sample_normal(&mut self, mean: f64, stddev: f64) -> Result<f64> {
        if !(stddev > 0.0) {
            return Err(Error::param(alloc::format!(
                "normal stddev must be positive, got {stddev}"
            )));
        }
        let z: f64 = StandardNormal.sample(&mut self.inner);
        Ok(mean + stddev * z)
    }

    /// One draw from `Cauchy(location, scale)` by inverse transform.
    pub fn sample_cauchy(&mut self, location: f64, scale: f64) -> Result<f64> {
        if !(scale > 0.0) {
            return Err(Error::param(alloc::format!(
                "cauchy scale must be positive, got {scale}"
            )));
        }
        Ok(cauchy_from_unit(self.next_unit(), location, scale))
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        // Lemire's multiply-shift with rejection
        let n = n as u64;
        loop {
            let x = self.inner.next_u64();
            let m = (x as u128) * (n as u128);
            let low = m as u64;
            if low >= n || low >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_unit() < p
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Maps a uniform `u` to `location + scale·tan(π(u − ½))`.
#[inline]
pub fn cauchy_from_unit(u: f64, location: f64, scale: f64) -> f64 {
    location + scale * libm::tan(PI * (u - 0.5))
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
