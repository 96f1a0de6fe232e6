//! Seeded per-class train/test splits.
//!
//! Realization `r` of master seed `s` draws from ChaCha8 seeded with `s`
//! on stream `r`, so each realization is independent of how many others
//! are run and of the order in which they run.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};

pub fn realization_rng(master: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(realization);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Ascending indices.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Picks `n_train` items uniformly at random from every class; the rest are
/// test items.
pub fn split(labels: &[usize], n_train: usize, master: u64, realization: u64) -> Result<Split> {
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    if n_train == 0 {
        return Err(BenchError::Config("train-per-class must be at least 1".into()));
    }
    let mut rng = realization_rng(master, realization);
    let mut is_train = vec![false; labels.len()];
    for (class, items) in members.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        if items.len() <= n_train {
            return Err(BenchError::Config(format!(
                "class {class} has {} images; {n_train} for training leaves none to test",
                items.len()
            )));
        }
        for pick in index::sample(&mut rng, items.len(), n_train) {
            is_train[items[pick]] = true;
        }
    }
    let (train, test) = (0..labels.len()).partition(|&i| is_train[i]);
    Ok(Split { train, test })
}
