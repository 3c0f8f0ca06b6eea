//! Structural evaluation maximization over repeated randomized runs.

use amn_core::smt::CorrSet;
use amn_core::{Mapping, RelGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Amn, ModelError};

/// Intersection over union; two empty sets are identical.
pub fn jaccard(a: &CorrSet, b: &CorrSet) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Index of the set with the largest summed similarity to all sets
/// (itself included); ties go to the lowest index.
pub fn consensus_index(sets: &[CorrSet]) -> Option<usize> {
    let totals: Vec<f64> = sets.iter().map(|a| sets.iter().map(|b| jaccard(a, b)).sum()).collect();
    let mut best: Option<usize> = None;
    for (i, &s) in totals.iter().enumerate() {
        if best.is_none_or(|b| s > totals[b]) {
            best = Some(i);
        }
    }
    best
}

/// Encoding rng of SEM run `run`.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Runs the model `r` times with independent encodings and keeps the run
/// that agrees most with the others.
pub fn sem_select(model: &Amn, base: &RelGraph, target: &RelGraph, r: usize, seed: u64) -> Result<Mapping, ModelError> {
    let runs = sem_runs(model, base, target, r, seed)?;
    let sets: Vec<CorrSet> = runs.iter().map(|m| m.correspondences.clone()).collect();
    let i = consensus_index(&sets).ok_or(ModelError::Config("at least one run is required".into()))?;
    Ok(runs.into_iter().nth(i).expect("index in range"))
}

/// The individual mappings of `r` runs, in run order.
pub fn sem_runs(model: &Amn, base: &RelGraph, target: &RelGraph, r: usize, seed: u64) -> Result<Vec<Mapping>, ModelError> {
    (0..r)
        .into_par_iter()
        .map(|i| model.predict(base, target, &mut run_rng(seed, i)).map(|p| p.mapping))
        .collect()
}
