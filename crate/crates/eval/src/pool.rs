//! Candidate pools with a size cap.
//!
//! The master pool is shuffled once with the run seed. A query with cap `S`
//! sees the first `S` candidates of that order outside its own clique, so a
//! smaller pool is always a subset of a larger one and every query sees
//! exactly `S` candidates when enough exist.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reasonenv_core::Candidate;

pub struct PoolView<'a> {
    pool: &'a [Candidate],
    order: Vec<usize>,
}

impl<'a> PoolView<'a> {
    pub fn new(pool: &'a [Candidate], seed: u64) -> Self {
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        PoolView { pool, order }
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn get(&self, i: usize) -> &'a Candidate {
        &self.pool[i]
    }

    /// Indices into the master pool eligible for a query: outside its
    /// clique, at most `cap` of them.
    pub fn eligible(&self, query_clique: &str, cap: Option<usize>) -> Vec<usize> {
        let limit = cap.unwrap_or(usize::MAX);
        self.order
            .iter()
            .copied()
            .filter(|&i| self.pool[i].clique_id != query_clique)
            .take(limit)
            .collect()
    }

    pub fn candidates(&self, indices: &[usize]) -> Vec<&'a Candidate> {
        indices.iter().map(|&i| &self.pool[i]).collect()
    }
}
