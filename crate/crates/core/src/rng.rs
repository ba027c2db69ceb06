//! Reproducible random streams.
//!
//! Every stochastic step draws from a ChaCha12 stream whose 256-bit key is the
//! SHA-256 digest of `(master seed, label, indices)`. Streams are therefore
//! addressed by name rather than by draw order, so results do not depend on how
//! work is scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use statrs::function::erf::erfc_inv;

const DOMAIN_TAG: &[u8] = b"transport-rng/v1";

/// Generator used by all samplers.
pub type StreamRng = ChaCha12Rng;

fn stream_key(seed: u64, label: &str, indices: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(DOMAIN_TAG);
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update((indices.len() as u64).to_le_bytes());
    for index in indices {
        hasher.update(index.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Opens the substream identified by `(seed, label, indices)`.
pub fn substream(seed: u64, label: &str, indices: &[u64]) -> StreamRng {
    ChaCha12Rng::from_seed(stream_key(seed, label, indices))
}

/// Derives a child seed, e.g. the dataset seed of one simulation replicate.
pub fn derive_seed(seed: u64, label: &str, indices: &[u64]) -> u64 {
    let key = stream_key(seed, label, indices);
    u64::from_le_bytes(key[..8].try_into().expect("digest has 32 bytes"))
}

/// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn bernoulli<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> bool {
    open_unit(rng) < p
}

/// Standard normal quantile.
#[inline]
pub fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Normal variate by inversion of the CDF.
#[inline]
pub fn normal<R: RngCore + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * std_normal_quantile(open_unit(rng))
}

/// Uniform index in `0..n`.
#[inline]
pub fn index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n)
}
