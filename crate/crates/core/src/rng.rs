//! Deterministic RNG plumbing.
//!
//! Every stochastic component draws from a ChaCha stream derived from one
//! master seed plus a structured stream id (domain, step, class, run). Streams
//! are independent, so restarts can execute in parallel in any order and still
//! produce bit-identical results, and an evolve step re-run in isolation sees
//! exactly the RNG state it saw inside the full stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated consumers on disjoint stream families even when
/// their (step, class, run) coordinates collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Clustering restarts: coordinates (step, class, run).
    Cluster = 1,
    /// Stratified batch assembly: coordinates (0, 0, 0).
    Batches = 2,
    /// Synthetic graph generation: coordinates (piece, 0, 0).
    Synth = 3,
    /// Bound-check instance sweeps: coordinates (instance, 0, 0).
    Eval = 4,
    /// Coreset baselines: coordinates (method, 0, 0).
    Baseline = 5,
    /// Incremental centroid seeding: coordinates (step, class, 0). Kept off
    /// the Cluster family so adding seeds never perturbs the restart streams.
    Seeding = 6,
}

/// SplitMix64 finalizer; the standard 64-bit avalanche mix.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Collapses stream coordinates into a single 64-bit stream id by chained
/// mixing; chaining (rather than xor of independent hashes) keeps distinct
/// coordinate tuples from aliasing.
fn stream_id(domain: Domain, a: u64, b: u64, c: u64) -> u64 {
    let mut h = splitmix64(domain as u64);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    splitmix64(h ^ c)
}

/// Factory for deterministic, independent RNG streams under one master seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedDomain {
    master: u64,
}

impl SeedDomain {
    pub fn new(master: u64) -> Self {
        SeedDomain { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    fn rng(&self, domain: Domain, a: u64, b: u64, c: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(stream_id(domain, a, b, c));
        rng
    }

    /// Stream for clustering run `run` of class `class` at evolve step `step`
    /// (static condensation uses step 1, making it bit-identical to the first
    /// evolve step by construction).
    pub fn clustering(&self, step: usize, class: usize, run: usize) -> ChaCha8Rng {
        self.rng(Domain::Cluster, step as u64, class as u64, run as u64)
    }

    /// Stream for stratified batch shuffling.
    pub fn batches(&self) -> ChaCha8Rng {
        self.rng(Domain::Batches, 0, 0, 0)
    }

    /// Stream for synthetic-graph piece `piece` (edges, features, ...).
    pub fn synth(&self, piece: usize) -> ChaCha8Rng {
        self.rng(Domain::Synth, piece as u64, 0, 0)
    }

    /// Stream for bound-check instance `instance`.
    pub fn eval(&self, instance: usize) -> ChaCha8Rng {
        self.rng(Domain::Eval, instance as u64, 0, 0)
    }

    /// Stream for coreset baseline `method` at step `step`.
    pub fn baseline(&self, method: usize, step: usize) -> ChaCha8Rng {
        self.rng(Domain::Baseline, method as u64, step as u64, 0)
    }

    /// Stream for incremental centroid seeding of class `class` at step
    /// `step`.
    pub fn seeding(&self, step: usize, class: usize) -> ChaCha8Rng {
        self.rng(Domain::Seeding, step as u64, class as u64, 0)
    }
}
