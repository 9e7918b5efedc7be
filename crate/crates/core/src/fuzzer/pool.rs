use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::abi::{Gene, GeneMap};
use crate::error::{Error, Result};
use crate::evm::Feedback;
use crate::wcfg::Edge;

use super::Strategy;

pub const POOL_CAPACITY: usize = 256;
/// Probability that selection picks the highest-priority seed.
pub const EXPLOIT_PROBABILITY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub gene: Gene,
    pub map: Arc<GeneMap>,
    pub feedback: Feedback,
    pub birth_iteration: u64,
}

impl Seed {
    pub fn priority(&self) -> u64 {
        self.feedback.total_gas
    }
}

/// Best values seen over every executed seed, per strategy metric.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bests {
    pub total_cur: u64,
    pub cost_cur: BTreeMap<Edge, u64>,
    pub path_len: u64,
    pub hits: BTreeMap<Edge, u64>,
}

impl Bests {
    /// Whether `fb` improves total gas or the gas of some edge.
    pub fn gas_improved(&self, fb: &Feedback) -> bool {
        fb.total_gas > self.total_cur
            || fb
                .edges
                .iter()
                .any(|(e, s)| s.gas > self.cost_cur.get(e).copied().unwrap_or(0))
    }

    pub fn path_improved(&self, fb: &Feedback) -> bool {
        fb.path_length() > self.path_len
    }

    pub fn hits_improved(&self, fb: &Feedback) -> bool {
        fb.edges
            .iter()
            .any(|(e, s)| s.hits > self.hits.get(e).copied().unwrap_or(0))
    }

    pub fn update(&mut self, fb: &Feedback) {
        self.total_cur = self.total_cur.max(fb.total_gas);
        self.path_len = self.path_len.max(fb.path_length());
        for (e, s) in &fb.edges {
            let gas = self.cost_cur.entry(*e).or_default();
            *gas = (*gas).max(s.gas);
            let hits = self.hits.entry(*e).or_default();
            *hits = (*hits).max(s.hits);
        }
    }
}

/// Acceptance parameters shared by all strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    /// Temperature of the probabilistic acceptance of uninteresting seeds under
    /// the gas strategy; zero disables it.
    pub temperature: f64,
    /// Acceptance probability of the random strategy.
    pub random_accept: f64,
}

impl Default for Acceptance {
    fn default() -> Self {
        Acceptance {
            temperature: 500.0,
            random_accept: 0.5,
        }
    }
}

/// Probability of keeping a seed that improved nothing. The exponent is
/// shifted by one so that a seed merely equal to the best is not kept for sure.
pub fn acceptance_probability(total_gas: u64, total_cur: u64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let delta = total_gas as f64 - total_cur as f64 - 1.0;
    (delta / temperature).exp().min(1.0)
}

/// Decides whether a seed with feedback `fb` enters the pool. Must be called
/// before `bests` absorbs `fb`.
pub fn is_interesting<R: Rng + ?Sized>(
    fb: &Feedback,
    bests: &Bests,
    strategy: Strategy,
    acceptance: &Acceptance,
    rng: &mut R,
) -> bool {
    match strategy {
        Strategy::Gas => {
            if bests.gas_improved(fb) {
                return true;
            }
            let p = acceptance_probability(fb.total_gas, bests.total_cur, acceptance.temperature);
            p > 0.0 && rng.gen_bool(p)
        }
        Strategy::SlowFuzz => bests.path_improved(fb),
        Strategy::PerfFuzz => bests.hits_improved(fb),
        Strategy::Random => rng.gen_bool(acceptance.random_accept),
    }
}

/// Seeds ordered by descending priority; ties keep insertion order.
#[derive(Debug, Clone)]
pub struct SeedPool {
    seeds: Vec<Seed>,
    capacity: usize,
}

impl SeedPool {
    pub fn new(capacity: usize) -> Self {
        SeedPool {
            seeds: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn best(&self) -> Option<&Seed> {
        self.seeds.first()
    }

    /// Inserts `seed`, evicting the lowest-priority member when full.
    pub fn insert(&mut self, seed: Seed) {
        let p = seed.priority();
        let at = self.seeds.partition_point(|s| s.priority() >= p);
        if self.seeds.len() >= self.capacity && at >= self.seeds.len() {
            return;
        }
        self.seeds.insert(at, seed);
        self.seeds.truncate(self.capacity);
    }
}

/// The top seed with probability [`EXPLOIT_PROBABILITY`], otherwise a uniform
/// pool member.
pub fn select_seed<'p, R: Rng + ?Sized>(pool: &'p SeedPool, rng: &mut R) -> Result<&'p Seed> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if rng.gen_bool(EXPLOIT_PROBABILITY) {
        Ok(&pool.seeds[0])
    } else {
        Ok(&pool.seeds[rng.gen_range(0..pool.len())])
    }
}
