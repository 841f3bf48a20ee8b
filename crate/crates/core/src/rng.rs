//! Random streams for training.
//!
//! Every clause owns its own ChaCha8 stream derived from one 64-bit seed, so
//! the packed engine and the scalar reference consume identical randomness
//! and clause updates within one example can be reordered freely.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of Bernoulli decisions for feedback.
///
/// Callers only ask about probabilities strictly inside `(0, 1)`; the
/// degenerate cases are resolved by [`fires`] without consuming randomness.
pub trait FeedbackRng {
    fn fires_interior(&mut self, p: f64) -> bool;
}

/// Bernoulli draw with the canonical consumption rule: `p <= 0` never fires,
/// `p >= 1` always fires, and only interior probabilities consume a draw.
#[inline]
pub fn fires<R: FeedbackRng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.fires_interior(p)
    }
}

/// A seeded per-clause stream.
#[derive(Debug, Clone)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, domain: Domain, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, domain as u64));
        rng.set_stream(index);
        StreamRng(rng)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

impl FeedbackRng for StreamRng {
    #[inline]
    fn fires_interior(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Independent purposes that draw from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Init = 1,
    Clause = 2,
    Shuffle = 3,
    NegativeClass = 4,
    Data = 5,
    Replication = 6,
    MonteCarlo = 7,
}

/// SplitMix64 finalizer over `seed ^ domain`.
fn mix(seed: u64, domain: u64) -> u64 {
    let mut z = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// All streams consumed by one training run of a clause bank.
#[derive(Debug, Clone)]
pub struct TrainRng {
    pub clauses: Vec<StreamRng>,
    pub shuffle: StreamRng,
    pub negative: StreamRng,
}

impl TrainRng {
    /// `banks * clauses` clause streams, bank-major.
    pub fn new(seed: u64, banks: usize, clauses: usize) -> Self {
        TrainRng {
            clauses: (0..banks * clauses)
                .map(|i| StreamRng::new(seed, Domain::Clause, i as u64))
                .collect(),
            shuffle: StreamRng::new(seed, Domain::Shuffle, 0),
            negative: StreamRng::new(seed, Domain::NegativeClass, 0),
        }
    }
}

/// Derives an independent seed, e.g. one per replication.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    StreamRng::new(seed, domain, index).0.random()
}

/// Test double that fires for every positive probability (a draw of 0).
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysFire;

impl FeedbackRng for AlwaysFire {
    fn fires_interior(&mut self, _p: f64) -> bool {
        true
    }
}

/// Test double that fires only for certain events (a draw just below 1).
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverFire;

impl FeedbackRng for NeverFire {
    fn fires_interior(&mut self, _p: f64) -> bool {
        false
    }
}

/// Counts Bernoulli queries; useful to assert consumption order.
#[derive(Debug, Clone)]
pub struct Recording<R> {
    pub inner: R,
    pub queries: Vec<f64>,
}

impl<R: FeedbackRng> FeedbackRng for Recording<R> {
    fn fires_interior(&mut self, p: f64) -> bool {
        self.queries.push(p);
        self.inner.fires_interior(p)
    }
}
