use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset, Instance, Label};

/// Draws exactly `n_per_class` instances of each label without replacement,
/// then shuffles the combined sample. Deterministic in `(dataset, n, seed)`.
pub fn sample_balanced(dataset: &Dataset, n_per_class: usize, seed: u64) -> Result<Dataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<Instance> = Vec::with_capacity(2 * n_per_class);
    for label in Label::ALL {
        let pool: Vec<&Instance> = dataset.iter().filter(|i| i.label == label).collect();
        if pool.len() < n_per_class {
            return Err(DataError::InsufficientClassCount {
                label,
                have: pool.len(),
                need: n_per_class,
            });
        }
        let mut chosen = index::sample(&mut rng, pool.len(), n_per_class).into_vec();
        chosen.sort_unstable();
        picked.extend(chosen.into_iter().map(|i| pool[i].clone()));
    }
    picked.shuffle(&mut rng);
    Dataset::from_instances(dataset.name.clone(), picked)
}
