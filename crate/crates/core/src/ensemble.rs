//! Seeded, order-stable parallel ensembles.
//!
//! Trajectory `i` owns two ChaCha8 streams derived from the base seed:
//! stream `2i` drives the renewal clock and stream `2i+1` the jump lengths.
//! Results are collected by index and reduced sequentially, so estimates do
//! not depend on how many worker threads rayon uses.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

pub type StreamRng = ChaCha8Rng;

/// Generator for one numbered stream of a base seed.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A new base seed derived from `seed`, for companion ensembles that must
/// not share streams with the original. Uses streams counted down from the
/// top of the range, which trajectories never reach.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    use rand::Rng;
    stream_rng(seed, u64::MAX - tag).random()
}

/// The pair of generators used by trajectory `index`.
pub struct TrajectoryRng {
    pub clock: StreamRng,
    pub jumps: StreamRng,
}

impl TrajectoryRng {
    pub fn new(seed: u64, index: u64) -> Self {
        TrajectoryRng {
            clock: stream_rng(seed, 2 * index),
            jumps: stream_rng(seed, 2 * index + 1),
        }
    }
}

/// Run `f` for trajectories `0..n` on the current rayon pool.
pub fn run_trajectories<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut TrajectoryRng) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = TrajectoryRng::new(seed, i);
            f(&mut rng)
        })
        .collect()
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub n_traj: usize,
    pub seed: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub raw_histogram: Option<BTreeMap<u64, u64>>,
}

impl EnsembleResult {
    /// Sample mean and standard error of `values`, summed in index order.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let n = values.len();
        let (mean, se) = mean_and_se(values);
        EnsembleResult {
            n_traj: n,
            seed,
            estimate: mean,
            std_error: se,
            raw_histogram: None,
        }
    }

    pub fn with_histogram(mut self, outcomes: &[u64]) -> Self {
        let mut h = BTreeMap::new();
        for &o in outcomes {
            *h.entry(o).or_insert(0u64) += 1;
        }
        self.raw_histogram = Some(h);
        self
    }
}

/// Mean and standard error (sample standard deviation / √n).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
